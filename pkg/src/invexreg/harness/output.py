"""CSV and JSON writers for traces and summaries."""
import json
import math
import os
import tempfile

import numpy as np

CSV_HEADER = ("lambda", "t", "fhat", "f", "grad_norm", "pl_ratio", "g_norm", "step_len", "path_len")


def fmt(v):
    """17 significant digits, enough to round-trip any double."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_lines(trace, lam=None):
    lam = trace.lam if lam is None else lam
    c = trace.columns
    for i in range(len(trace)):
        yield ",".join(fmt(v) for v in (
            lam, c["t"][i], c["fhat"][i], c["f"][i], c["grad_norm"][i], c["pl_ratio"][i],
            c["g_norm"][i], c["step_len"][i], c["path_len"][i],
        ))


def traces_csv(traces):
    """CSV text for one or more traces (rows grouped by run)."""
    lines = [",".join(CSV_HEADER)]
    for trace in traces:
        lines.extend(trace_lines(trace))
    return "\n".join(lines) + "\n"


def write_traces_csv(path, traces):
    atomic_write(path, traces_csv(traces))


def read_traces_csv(path):
    """Parse a trace CSV back into ``{column: np.ndarray}``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, payload):
    atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n")
