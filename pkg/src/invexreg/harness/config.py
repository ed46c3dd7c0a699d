"""Experiment configuration files.

INI-style text with one ``[run NAME]`` section per run and an optional
``[tolerances]`` section whose keys are ``CertifyConfig`` fields::

    [tolerances]
    tol_pl = 1e-9
    pl_samples = 1000

    [run fig1]
    model = sigmoid          ; affine | sigmoid | mlp
    n = 64
    d = 8
    seed = 42
    regularizer = invex      ; none | l2 | invex
    lambdas = 0.1, 0.05, 0.01
    optimizer = gd           ; gd | adam
    step_size = auto
    iters = 20000

Unknown sections or keys are errors, reported with their line number.
"""
import configparser
import re
from dataclasses import dataclass, field, fields
from typing import Optional

from ..analysis import CertifyConfig
from ..errors import ConfigError

MODEL_DEFAULTS = {
    "affine": {"n": 20, "d": 50, "seed": 7},
    "sigmoid": {"n": 64, "d": 8, "seed": 42},
    "mlp": {"n": 32, "d": 4, "seed": 3, "hidden": 8},
}
REGULARIZERS = ("none", "l2", "invex")
OPTIMIZERS = ("gd", "adam")


@dataclass
class ExperimentConfig:
    name: str = "default"
    model: str = "sigmoid"
    n: Optional[int] = None
    d: Optional[int] = None
    hidden: int = 8
    seed: Optional[int] = None
    dataset: Optional[str] = None
    regularizer: str = "invex"
    lambdas: list = field(default_factory=lambda: [0.1, 0.05, 0.01])
    optimizer: str = "gd"
    step_size: object = "auto"
    iters: Optional[int] = None
    grad_tol: float = 1e-10
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    f_min: float = 0.0
    out: Optional[str] = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODEL_DEFAULTS:
            raise ConfigError(f"model must be one of {sorted(MODEL_DEFAULTS)}, got {self.model!r}")
        if self.regularizer not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        defaults = MODEL_DEFAULTS[self.model]
        for key in ("n", "d", "seed"):
            if getattr(self, key) is None:
                setattr(self, key, defaults[key])
        if not self.lambdas:
            raise ConfigError("lambdas must be non-empty")
        if self.regularizer != "none" and any(lam < 0 for lam in self.lambdas):
            raise ConfigError("lambdas must be >= 0")
        if self.step_size != "auto" and not float(self.step_size) > 0:
            raise ConfigError("step_size must be positive or 'auto'")
        unknown = set(self.tolerances) - set(CertifyConfig.field_names())
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")

    def certify_config(self, seed=None):
        overrides = dict(self.tolerances)
        overrides.setdefault("f_min", self.f_min)
        overrides.setdefault("grad_tol", self.grad_tol)
        if self.iters is not None:
            overrides.setdefault("max_iters", self.iters)
        if self.step_size != "auto":
            overrides.setdefault("step_size", float(self.step_size))
        if seed is not None:
            overrides["seed"] = seed
        return CertifyConfig(**overrides)


_RUN_KEYS = {f.name for f in fields(ExperimentConfig)} - {"name", "tolerances"}
_INT_KEYS = {"n", "d", "hidden", "seed", "iters"}
_FLOAT_KEYS = {"grad_tol", "beta1", "beta2", "eps", "f_min"}
_STR_KEYS = {"model", "regularizer", "optimizer", "dataset", "out"}


def _line_of(text, section, key=None):
    lines = text.splitlines()
    in_section = False
    for i, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("["):
            in_section = s.strip("[]").strip() == section
            if in_section and key is None:
                return i
            continue
        if in_section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def _where(text, section, key=None):
    line = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"line {line}: {loc}" if line else loc


def _convert(key, raw, cert_types):
    if key == "lambdas":
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if key == "step_size":
        return "auto" if raw.strip().lower() == "auto" else float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _STR_KEYS:
        return raw.strip()
    typ = cert_types[key]
    if typ == "int":
        return int(raw)
    if raw.strip().lower() in ("none", ""):
        return None
    return float(raw)


def parse_config(text, source="<config>"):
    """Parse config text into a list of ExperimentConfig (one per run section)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    cert_types = {f.name: ("int" if f.type in (int, "int") else "float") for f in fields(CertifyConfig)}
    tolerances = {}
    runs = []
    for section in parser.sections():
        if section == "tolerances":
            for key, raw in parser.items(section):
                if key not in cert_types:
                    raise ConfigError(f"{source}: {_where(text, section, key)}: unknown tolerance key {key!r}")
                try:
                    tolerances[key] = _convert(key, raw, cert_types)
                except ValueError as exc:
                    raise ConfigError(f"{source}: {_where(text, section, key)}: bad value {raw!r} ({exc})") from exc
            continue
        m = re.fullmatch(r"run\s+(\S+)", section)
        if not m:
            raise ConfigError(f"{source}: {_where(text, section)}: unknown section (expected [run NAME] or [tolerances])")
        values = {"name": m.group(1)}
        for key, raw in parser.items(section):
            if key not in _RUN_KEYS:
                raise ConfigError(f"{source}: {_where(text, section, key)}: unknown key {key!r}")
            try:
                values[key] = _convert(key, raw, cert_types)
            except ValueError as exc:
                raise ConfigError(f"{source}: {_where(text, section, key)}: bad value {raw!r} ({exc})") from exc
        runs.append((section, values))

    out = []
    for section, values in runs:
        try:
            out.append(ExperimentConfig(tolerances=dict(tolerances), **values))
        except ConfigError as exc:
            raise ConfigError(f"{source}: {_where(text, section)}: {exc}") from exc
    if not out:
        raise ConfigError(f"{source}: no [run NAME] sections")
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))
