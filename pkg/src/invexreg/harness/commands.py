"""The four harness commands. Each returns ``(passed, summary)`` and writes
its CSV/JSON (and optionally PNG) output under ``out``."""
import dataclasses
import logging
import os
import time

import numpy as np

from ..analysis import (
    bias_bound_check,
    certify,
    descent_check,
    estimate_L,
    hessian_vector,
    ridge_closed_form,
    ridge_limits_check,
)
from ..errors import InvexRegError, NonFinite
from ..linalg import gram_extreme_eigs, krylov_norm
from ..models import (
    AffineMap,
    SigmoidClassifierMap,
    TinyMlpMap,
    mlp_init,
    synth_affine,
    synth_classification,
    synth_mlp,
)
from ..objectives import InvexObjective, L2Objective, PlainObjective
from ..optimizers import AdamConfig, GdConfig, adam_run, gd_run
from .config import ExperimentConfig
from .output import atomic_write, fmt, write_json, write_traces_csv

log = logging.getLogger(__name__)

RIDGE_LAMBDAS = [1e-6, 0.1, 1.0, 10.0, 1e6]
SWEEP_LAMBDAS = [0.1, 0.05, 0.01]
VERIFY_LAMBDAS = [0.01, 0.1, 1.0]
COMPARE_LAMBDAS = [0.0, 0.01, 0.1]
RIDGE_ITERS = 20_000
SWEEP_ITERS = 20_000
COMPARE_ITERS = 20_000


def default_config(command):
    if command == "ridge-demo":
        return [ExperimentConfig(name="ridge", model="affine", lambdas=list(RIDGE_LAMBDAS), iters=RIDGE_ITERS)]
    if command == "sweep-sigmoid":
        return [ExperimentConfig(name="sweep", model="sigmoid", lambdas=list(SWEEP_LAMBDAS), iters=SWEEP_ITERS)]
    if command == "compare-l2":
        return [ExperimentConfig(name="compare", model="sigmoid", lambdas=list(COMPARE_LAMBDAS), iters=COMPARE_ITERS)]
    if command == "verify":
        return [ExperimentConfig(name=m, model=m, lambdas=list(VERIFY_LAMBDAS)) for m in ("affine", "sigmoid", "mlp")]
    raise ValueError(f"unknown command {command!r}")


def build_model(cfg):
    """Map and start point ``x0`` for a run config."""
    if cfg.dataset:
        data = np.load(cfg.dataset)
        if cfg.model == "affine":
            gmap = AffineMap(data["A"], data["b"])
        elif cfg.model == "sigmoid":
            gmap = SigmoidClassifierMap(data["A"], data["b"])
        else:
            gmap = TinyMlpMap(data["inputs"], data["targets"], cfg.hidden)
    elif cfg.model == "affine":
        gmap = synth_affine(cfg.n, cfg.d, cfg.seed)
    elif cfg.model == "sigmoid":
        gmap = synth_classification(cfg.n, cfg.d, cfg.seed)
    else:
        gmap = synth_mlp(cfg.n, cfg.d, cfg.hidden, cfg.seed)
    x0 = mlp_init(gmap, cfg.seed) if isinstance(gmap, TinyMlpMap) else np.zeros(gmap.input_dim)
    return gmap, x0


def save_dataset(gmap, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if isinstance(gmap, TinyMlpMap):
        np.savez(path, inputs=gmap.inputs, targets=gmap.targets)
    else:
        np.savez(path, A=gmap.A, b=gmap.b)


def _status(ok):
    return "PASS" if ok else "FAIL"


def cmd_verify(configs, out, echo=print):
    """Certificates for every run/lambda plus ridge limits on affine runs."""
    reports, errors, limits = [], [], []
    for cfg in configs:
        gmap, x0 = build_model(cfg)
        cert_cfg = cfg.certify_config()
        for lam in cfg.lambdas:
            if lam <= 0:
                continue
            label = f"{cfg.name} lam={lam:g}"
            try:
                rep = certify(InvexObjective(gmap, lam), x0, cert_cfg, model_name=cfg.name)
            except NonFinite as exc:
                errors.append({"run": cfg.name, "lambda": lam, "check": "divergence", "error": f"NonFinite: {exc}"})
                echo(f"FAIL  {label:<22} divergence  NonFinite: {exc}")
                continue
            except InvexRegError as exc:
                errors.append({"run": cfg.name, "lambda": lam, "check": "error", "error": f"{type(exc).__name__}: {exc}"})
                echo(f"FAIL  {label:<22} {type(exc).__name__}: {exc}")
                continue
            reports.append(rep)
            for name, chk in rep.checks.items():
                if not chk.applicable:
                    echo(f"n/a   {label:<22} {name:<18} {chk.note}")
                else:
                    echo(f"{_status(chk.passed)}  {label:<22} {name:<18} slack={fmt(chk.worst_slack)}")
        if isinstance(gmap, AffineMap) and gmap.output_dim <= gmap.input_dim:
            lim = ridge_limits_check(gmap.A, gmap.b, [1e-6, 1e6])
            lim["run"] = cfg.name
            limits.append(lim)
            for name, ok in lim["checks"].items():
                echo(f"{_status(ok)}  {cfg.name + ' ridge-limits':<22} {name}")

    passed = not errors and all(r.passed for r in reports) and all(lim["passed"] for lim in limits)
    summary = {
        "passed": passed,
        "reports": [r.to_dict() for r in reports],
        "ridge_limits": limits,
        "errors": errors,
        "failing": [f"{r.model} lam={r.lam:g}: {name}" for r in reports for name in r.failing()]
        + [f"{e['run']} lam={e['lambda']:g}: {e['check']}" for e in errors],
    }
    write_json(os.path.join(out, "certificate.json"), summary)
    return passed, summary


def cmd_ridge_demo(cfg, out, plot=True):
    """Gradient descent on the invex objective of an affine map vs the ridge closed form."""
    gmap, _ = build_model(dataclasses.replace(cfg, model="affine"))
    A, b = gmap.A, gmap.b
    if A.shape[0] > A.shape[1]:
        raise ValueError("ridge-demo needs an under-determined system (n <= d)")
    smax2 = gram_extreme_eigs(A)[1]
    traces, rows = [], []
    for lam in cfg.lambdas:
        obj = InvexObjective(gmap, lam)
        alpha = 0.9 / (smax2 + lam * lam)
        start = time.perf_counter()
        trace = gd_run(obj, np.zeros(gmap.input_dim), GdConfig(alpha, cfg.iters or RIDGE_ITERS, cfg.grad_tol))
        wall = time.perf_counter() - start
        sol = ridge_closed_form(A, b, lam)
        x, p = obj.split(trace.final_point)
        err = float(np.max(np.abs(x - sol.x_star)))
        cons = float(np.linalg.norm(p - (b - A @ x) / lam))
        fh0, fh = float(trace["fhat"][0]), float(trace["fhat"][-1])
        row = {
            "lambda": lam,
            "step_size": alpha,
            "iterations": trace.iterations,
            "termination": trace.reason,
            "x_inf_err": err,
            "x_norm": float(np.linalg.norm(x)),
            "x_star_norm": float(np.linalg.norm(sol.x_star)),
            "p_consistency": cons,
            "fhat_0": fh0,
            "fhat_final": fh,
            "f_final": float(trace["f"][-1]),
            "f_closed_form": sol.f_at_x_star,
            "wall_time_s": wall,
            "ridge_ok": err <= 1e-6,
            "interpolation_ok": fh <= 1e-12 * fh0,
        }
        if lam >= 1e6:
            row["x_to_zero_ok"] = row["x_norm"] <= 1e-3
        rows.append(row)
        traces.append(trace)
    passed = all(r["ridge_ok"] and r["interpolation_ok"] and r.get("x_to_zero_ok", True) for r in rows)
    write_traces_csv(os.path.join(out, "ridge_demo.csv"), traces)
    save_dataset(gmap, os.path.join(out, "ridge_demo_data.npz"))
    summary = {"passed": passed, "n": A.shape[0], "d": A.shape[1], "seed": cfg.seed, "runs": rows}
    write_json(os.path.join(out, "ridge_demo.json"), summary)
    if plot:
        from .plotting import plot_panels

        plot_panels({f"lam={t.lam:g}": t for t in traces}, os.path.join(out, "ridge_demo.png"),
                    [("fhat", "regularized objective"), ("grad_norm", "gradient norm")])
    return passed, summary


def _strictly(values, increasing):
    pairs = zip(values[:-1], values[1:])
    return all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)


def cmd_sweep_sigmoid(cfg, out, plot=True, L_samples=64):
    """Lambda sweep of gradient descent on the invex sigmoid objective, one shared step size."""
    gmap, x0 = build_model(dataclasses.replace(cfg, model="sigmoid", dataset=cfg.dataset))
    lambdas = sorted(cfg.lambdas, reverse=True)
    if any(lam <= 0 for lam in lambdas):
        raise ValueError("sweep lambdas must be positive")
    ests = {lam: estimate_L(InvexObjective(gmap, lam), x0, L_samples, cfg.seed, cfg.f_min) for lam in lambdas}
    if cfg.step_size == "auto":
        alpha = 0.9 / max(e.L_hat for e in ests.values())
    else:
        alpha = float(cfg.step_size)
    budget = cfg.iters or SWEEP_ITERS

    traces, runs = [], []
    for lam in lambdas:
        obj = InvexObjective(gmap, lam)
        start = time.perf_counter()
        trace = gd_run(obj, x0, GdConfig(alpha, budget, cfg.grad_tol))
        wall = time.perf_counter() - start
        fh0 = float(trace["fhat"][0])
        rise = descent_check(trace)
        try:
            bias = bias_bound_check(trace, ests[lam])
        except InvexRegError as exc:
            bias = {"passed": False, "error": str(exc)}
        runs.append({
            "lambda": lam,
            "L_hat": ests[lam].L_hat,
            "R": ests[lam].R,
            "iterations": trace.iterations,
            "termination": trace.reason,
            "fhat_final": float(trace["fhat"][-1]),
            "f_final": float(trace["f"][-1]),
            "g_norm_final": float(trace["g_norm"][-1]),
            "path_length": float(trace["path_len"][-1]),
            "max_pl_ratio": float(np.max(trace["pl_ratio"])),
            "monotone": rise <= 1e-9 * fh0,
            "max_increase": rise,
            "path_ok": float(trace["path_len"][-1]) <= ests[lam].R,
            "bias_bound": bias,
            "wall_time_s": wall,
        })
        traces.append(trace)

    fh = [r["fhat_final"] for r in runs]
    f = [r["f_final"] for r in runs]
    checks = {
        # runs are ordered by decreasing lambda
        "fhat_increases_as_lambda_decreases": _strictly(fh, increasing=True),
        "f_decreases_as_lambda_decreases": _strictly(f, increasing=False),
        "monotone_descent": all(r["monotone"] for r in runs),
        "interpolation_largest_lambda": fh[0] <= 1e-10,
        "bias_bound": all(r["bias_bound"].get("passed", False) for r in runs),
        "path_length": all(r["path_ok"] for r in runs),
    }
    passed = all(checks.values())
    summary = {"passed": passed, "step_size": alpha, "budget": budget, "n": gmap.output_dim,
               "d": gmap.input_dim, "seed": cfg.seed, "checks": checks, "runs": runs}
    write_traces_csv(os.path.join(out, "sweep_sigmoid.csv"), traces)
    save_dataset(gmap, os.path.join(out, "sweep_sigmoid_data.npz"))
    write_json(os.path.join(out, "sweep_sigmoid.json"), summary)
    if plot:
        from .plotting import plot_panels

        plot_panels({f"lam={t.lam:g}": t for t in traces}, os.path.join(out, "sweep_sigmoid.png"),
                    [("fhat", "regularized objective"), ("f", "non-regularized objective")])
    return passed, summary


def _objective(gmap, mode, lam):
    if lam == 0 or mode == "none":
        return PlainObjective(gmap)
    return InvexObjective(gmap, lam) if mode == "invex" else L2Objective(gmap, lam)


def _local_hessian_norm(obj, z):
    v0 = np.random.default_rng(0).standard_normal(obj.dim)
    return krylov_norm(lambda u: hessian_vector(obj, z, u), obj.dim, v0=v0)[0]


def cmd_compare_l2(cfg, out, plot=True, L_samples=32):
    """Invex vs l2 vs unregularized runs on one model with a shared optimizer setup."""
    gmap, x0 = build_model(cfg)
    lambdas = list(cfg.lambdas)
    runs = [("none", 0.0)] + [(mode, lam) for lam in lambdas for mode in ("invex", "l2")]
    objectives = {key: _objective(gmap, *key) for key in runs}

    if cfg.optimizer == "gd":
        if cfg.step_size == "auto":
            curv = []
            for (mode, lam), obj in objectives.items():
                if isinstance(obj, InvexObjective):
                    curv.append(estimate_L(obj, x0, L_samples, cfg.seed, cfg.f_min).L_hat)
                else:
                    curv.append(_local_hessian_norm(obj, x0))
            alpha = 0.9 / max(curv)
        else:
            alpha = float(cfg.step_size)
        opt = GdConfig(alpha, cfg.iters or COMPARE_ITERS, cfg.grad_tol)
        runner = gd_run
    else:
        alpha = 1e-3 if cfg.step_size == "auto" else float(cfg.step_size)
        opt = AdamConfig(alpha, cfg.beta1, cfg.beta2, cfg.eps, cfg.iters or COMPARE_ITERS, cfg.grad_tol)
        runner = adam_run

    traces = {}
    for key, obj in objectives.items():
        start = x0 if not isinstance(obj, InvexObjective) else obj.start(x0)
        traces[key] = runner(obj, start, opt)

    finals = {f"{m}@{lam:g}": float(t["f"][-1]) for (m, lam), t in traces.items()}
    ratios = {
        f"{lam:g}": finals[f"invex@{lam:g}"] / finals[f"l2@{lam:g}"]
        for lam in lambdas if lam > 0 and finals[f"l2@{lam:g}"] > 0
    }
    zero_same = all(
        all(np.array_equal(traces[("invex", 0.0)][c], traces[("l2", 0.0)][c]) for c in ("f", "fhat", "grad_norm"))
        for lam in lambdas if lam == 0
    )
    f0 = {float(t["f"][0]) for t in traces.values()}
    checks = {"lambda0_modes_identical": zero_same, "initial_f_identical": len(f0) == 1}
    passed = all(checks.values())
    summary = {
        "passed": passed,
        "model": cfg.model,
        "optimizer": cfg.optimizer,
        "step_size": alpha,
        "checks": checks,
        "final_f": finals,
        "invex_over_l2_final_f": ratios,
        "iterations": {f"{m}@{lam:g}": t.iterations for (m, lam), t in traces.items()},
    }
    for mode in ("none", "invex", "l2"):
        write_traces_csv(os.path.join(out, f"compare_{mode}.csv"),
                         [t for (m, _), t in traces.items() if m == mode])
    _write_aligned(os.path.join(out, "compare_f.csv"), traces, lambdas)
    write_json(os.path.join(out, "compare_l2.json"), summary)
    if plot:
        from .plotting import plot_panels

        series = {f"{m} lam={lam:g}": t for (m, lam), t in traces.items() if not (m != "none" and lam == 0)}
        plot_panels(series, os.path.join(out, "compare_l2.png"), [("f", "non-regularized objective")])
    return passed, summary


def _write_aligned(path, traces, lambdas):
    """Plain objective per iteration, one column per mode; blank past a run's end."""
    lines = ["lambda,t,f_none,f_l2,f_invex"]
    none = traces[("none", 0.0)]["f"]
    for lam in lambdas:
        cols = [none, traces[("l2", lam)]["f"], traces[("invex", lam)]["f"]]
        length = max(len(c) for c in cols)
        for t in range(length):
            vals = [fmt(c[t]) if t < len(c) else "" for c in cols]
            lines.append(",".join([fmt(lam), str(t)] + vals))
    atomic_write(path, "\n".join(lines) + "\n")
