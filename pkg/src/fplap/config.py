"""Run configuration: TOML parsing, validation, data sampling.

Function-valued data (force, tracking target, optional initial
coefficient) is accepted either as a simple expression string over ``x``
(polynomials, trig, exponentials, step functions) sampled on the grid, or
as a CSV vector; coefficient bounds are constants or explicit vectors on
the offset grid.  Validation collects every violation before failing so
a bad file is fixed in one pass.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .grid import FULL, REGIONAL

_EXPR_NAMES = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
    "heaviside": lambda z: np.where(np.asarray(z) >= 0, 1.0, 0.0),
    "step": lambda z: np.where(np.asarray(z) >= 0, 1.0, 0.0),
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
    "pi": math.pi,
    "e": math.e,
}


def eval_expression(expr: str, x: np.ndarray) -> np.ndarray:
    """Evaluate a whitelisted numeric expression of x on the given points."""
    namespace = dict(_EXPR_NAMES)
    namespace["x"] = x
    try:
        out = eval(compile(expr, "<config>", "eval"), {"__builtins__": {}}, namespace)
    except Exception as exc:
        raise ValueError(f"cannot evaluate expression {expr!r}: {exc}") from None
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


def _read_csv_vector(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    values = [float(v) for row in rows for v in row if v.strip()]
    return np.asarray(values, dtype=float)


@dataclass
class RunConfig:
    """Validated configuration for one run; all defaults resolved."""

    a: float
    b: float
    m: int
    s: float
    p: float
    variant: str
    c_norm: float
    r_trunc: float | None
    f_spec: object
    xi_spec: object
    kappa_spec: object
    xi1: object
    xi2: object
    alpha: float | None
    epsilon: float | None
    n_reg: int | None
    schedule_eps: list | None
    schedule_n: list | None
    t_exponent: float | None
    tol_residual: float
    max_iter: int
    seed: int
    outer_step0: float
    outer_fd_step: float
    outer_tol: float
    outer_max_iter: int
    out_dir: str
    formats: list = field(default_factory=lambda: ["csv", "json"])

    def to_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[key] = value
        return out


_DEFAULTS = {
    "problem": {"a": 0.0, "b": 1.0, "m": 7, "s": 0.75, "p": 2.0,
                "variant": REGIONAL, "c_norm": 1.0, "r_trunc": None},
    "data": {"f": "1.0", "xi": "0.0", "kappa": None, "xi1": 0.5, "xi2": 1.5,
             "alpha": None},
    "regularization": {},
    "solver": {"tol_residual": 1e-10, "max_iter": 500, "seed": 12345,
               "step0": 1.0, "fd_step": 1e-6, "outer_tol": 1e-8,
               "outer_max_iter": 300},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}


def _load_raw(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    if path.suffix == ".json":
        # a previously emitted manifest; its config block round-trips
        with open(path) as fh:
            manifest = json.load(fh)
        raw = manifest.get("config", manifest)
        return {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a TOML config (or the config block of an emitted
    JSON manifest).  Raises ``ConfigError`` listing every violation."""
    raw = _load_raw(path)
    if "config" in raw and isinstance(raw.get("config"), dict):
        raw = raw["config"]
    if set(raw) & {"a", "b", "m"}:
        # flat dict from a manifest: rewrap into sections
        return _from_flat(raw, overrides)

    errors: list[str] = []
    merged = {}
    for section, defaults in _DEFAULTS.items():
        block = dict(defaults)
        user = raw.get(section, {})
        if not isinstance(user, dict):
            errors.append(f"section [{section}] must be a table")
            user = {}
        unknown = set(user) - set(defaults) if defaults else set()
        if section == "regularization":
            unknown = set(user) - {"epsilon", "n", "schedule_eps", "schedule_n", "t"}
        if unknown:
            errors.append(f"unknown keys in [{section}]: {sorted(unknown)}")
        block.update({k: v for k, v in user.items() if k not in unknown})
        merged[section] = block

    flat = {
        "a": merged["problem"]["a"],
        "b": merged["problem"]["b"],
        "m": merged["problem"]["m"],
        "s": merged["problem"]["s"],
        "p": merged["problem"]["p"],
        "variant": merged["problem"]["variant"],
        "c_norm": merged["problem"]["c_norm"],
        "r_trunc": merged["problem"]["r_trunc"],
        "f_spec": merged["data"]["f"],
        "xi_spec": merged["data"]["xi"],
        "kappa_spec": merged["data"]["kappa"],
        "xi1": merged["data"]["xi1"],
        "xi2": merged["data"]["xi2"],
        "alpha": merged["data"]["alpha"],
        "epsilon": merged["regularization"].get("epsilon"),
        "n_reg": merged["regularization"].get("n"),
        "schedule_eps": merged["regularization"].get("schedule_eps"),
        "schedule_n": merged["regularization"].get("schedule_n"),
        "t_exponent": merged["regularization"].get("t"),
        "tol_residual": merged["solver"]["tol_residual"],
        "max_iter": merged["solver"]["max_iter"],
        "seed": merged["solver"]["seed"],
        "outer_step0": merged["solver"]["step0"],
        "outer_fd_step": merged["solver"]["fd_step"],
        "outer_tol": merged["solver"]["outer_tol"],
        "outer_max_iter": merged["solver"]["outer_max_iter"],
        "out_dir": merged["output"]["directory"],
        "formats": merged["output"]["formats"],
    }
    return _from_flat(flat, overrides, errors)


def _from_flat(flat: dict, overrides: dict | None, errors: list | None = None) -> RunConfig:
    errors = list(errors or [])
    flat = dict(flat)
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = value

    def num(key, lo=None, hi=None, strict_lo=False, required=True):
        value = flat.get(key)
        if value is None:
            if required:
                errors.append(f"missing value for {key}")
            return None
        try:
            value = float(value)
        except (TypeError, ValueError):
            errors.append(f"{key} must be a number, got {value!r}")
            return None
        if lo is not None and (value <= lo if strict_lo else value < lo):
            errors.append(f"{key} must be {'>' if strict_lo else '>='} {lo}")
        if hi is not None and value > hi:
            errors.append(f"{key} must be <= {hi}")
        return value

    a = num("a")
    b = num("b")
    if a is not None and b is not None and not b > a:
        errors.append("b must be strictly greater than a")
    m = flat.get("m")
    if not isinstance(m, int) or m < 1:
        errors.append("m must be >= 1")
        m = max(int(m), 1) if isinstance(m, (int, float)) else 1
    variant = flat.get("variant")
    if variant not in (REGIONAL, FULL):
        errors.append(f"variant must be 'regional' or 'full', got {variant!r}")
        variant = REGIONAL
    s = num("s")
    if s is not None:
        if variant == REGIONAL and not 0.5 < s < 1.0:
            errors.append("regional variant requires 1/2<s<1")
        if variant == FULL and not 0.0 < s < 1.0:
            errors.append("full variant requires 0<s<1")
    p = num("p", lo=2.0)
    c_norm = num("c_norm", lo=0.0, strict_lo=True)
    r_trunc = flat.get("r_trunc")
    if variant == FULL:
        if r_trunc is None:
            errors.append("truncation radius required for the full variant")
        elif a is not None and b is not None and not float(r_trunc) > b - a:
            errors.append("r_trunc must exceed the domain diameter b-a")
    elif r_trunc is not None:
        r_trunc = None  # ignored for the regional variant

    for key in ("f_spec", "xi_spec", "kappa_spec"):
        spec = flat.get(key)
        if spec is None:
            continue
        if isinstance(spec, str) and spec.endswith(".csv"):
            if not Path(spec).exists():
                errors.append(f"{key.split('_')[0]} CSV file not found: {spec}")
        elif isinstance(spec, str):
            try:
                eval_expression(spec, np.asarray([0.5]))
            except ValueError as exc:
                errors.append(str(exc))
        elif not isinstance(spec, (int, float, list)):
            errors.append(f"{key} must be an expression, number, list or CSV path")

    xi1, xi2 = flat.get("xi1"), flat.get("xi2")
    alpha = flat.get("alpha")
    lo_arr = np.atleast_1d(np.asarray(xi1, dtype=float)) if xi1 is not None else None
    hi_arr = np.atleast_1d(np.asarray(xi2, dtype=float)) if xi2 is not None else None
    if lo_arr is None or hi_arr is None:
        errors.append("both coefficient bounds xi1 and xi2 are required")
    else:
        if alpha is None:
            alpha = float(np.min(lo_arr))
        if alpha <= 0:
            errors.append("alpha must be positive")
        if np.any(lo_arr < alpha):
            errors.append("xi1 must be >= alpha everywhere")
        if lo_arr.size == hi_arr.size or lo_arr.size == 1 or hi_arr.size == 1:
            lo_b, hi_b = np.broadcast_arrays(lo_arr, hi_arr)
            if np.any(lo_b > hi_b):
                errors.append("xi1 must not exceed xi2")
        else:
            errors.append("xi1 and xi2 have incompatible shapes")

    epsilon = flat.get("epsilon")
    n_reg = flat.get("n_reg")
    if epsilon is not None and float(epsilon) <= 0:
        errors.append("epsilon must be positive")
    if n_reg is not None and (not isinstance(n_reg, int) or n_reg < 1):
        errors.append("n must be an integer >= 1")
    sch_e, sch_n = flat.get("schedule_eps"), flat.get("schedule_n")
    if (sch_e is None) != (sch_n is None):
        errors.append("schedule_eps and schedule_n must be given together")
    elif sch_e is not None:
        if len(sch_e) != len(sch_n) or len(sch_e) == 0:
            errors.append("schedule_eps and schedule_n must be equal-length, nonempty")
        else:
            if any(e2 >= e1 for e1, e2 in zip(sch_e, sch_e[1:])):
                errors.append("schedule_eps must be strictly decreasing")
            if any(n2 <= n1 for n1, n2 in zip(sch_n, sch_n[1:])):
                errors.append("schedule_n must be strictly increasing")
    t_exp = flat.get("t_exponent")
    if t_exp is not None and s is not None and not 0.5 < float(t_exp) <= s:
        errors.append("t must satisfy 1/2 < t <= s")

    tol_residual = num("tol_residual", lo=0.0, strict_lo=True)
    max_iter = flat.get("max_iter")
    if not isinstance(max_iter, int) or max_iter < 1:
        errors.append("max_iter must be an integer >= 1")
        max_iter = 500
    seed = flat.get("seed")
    if not isinstance(seed, int) or seed < 0:
        errors.append("seed must be a nonnegative integer")
        seed = 0
    outer_step0 = num("outer_step0", lo=0.0, strict_lo=True)
    outer_fd_step = num("outer_fd_step", lo=0.0, strict_lo=True)
    outer_tol = num("outer_tol", lo=0.0, strict_lo=True)
    outer_max_iter = flat.get("outer_max_iter")
    if not isinstance(outer_max_iter, int) or outer_max_iter < 1:
        errors.append("outer_max_iter must be an integer >= 1")
        outer_max_iter = 300
    formats = flat.get("formats")
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"}:
        errors.append("formats must be a list drawn from ['csv', 'json']")
        formats = ["csv", "json"]

    if errors:
        raise ConfigError(errors)

    return RunConfig(
        a=a, b=b, m=int(m), s=s, p=p, variant=variant, c_norm=c_norm,
        r_trunc=None if r_trunc is None else float(r_trunc),
        f_spec=flat.get("f_spec"), xi_spec=flat.get("xi_spec"),
        kappa_spec=flat.get("kappa_spec"),
        xi1=xi1, xi2=xi2, alpha=float(alpha),
        epsilon=None if epsilon is None else float(epsilon),
        n_reg=n_reg,
        schedule_eps=None if sch_e is None else [float(v) for v in sch_e],
        schedule_n=None if sch_n is None else [int(v) for v in sch_n],
        t_exponent=None if t_exp is None else float(t_exp),
        tol_residual=tol_residual, max_iter=int(max_iter), seed=int(seed),
        outer_step0=outer_step0, outer_fd_step=outer_fd_step,
        outer_tol=outer_tol, outer_max_iter=int(outer_max_iter),
        out_dir=str(flat.get("out_dir")), formats=list(formats),
    )


def sample_on_nodes(spec, x: np.ndarray, name: str) -> np.ndarray:
    """Materialize a data spec (expression, constant, vector or CSV path)
    on the given coordinates."""
    if isinstance(spec, str):
        if spec.endswith(".csv"):
            values = _read_csv_vector(Path(spec))
        else:
            return eval_expression(spec, x)
    elif isinstance(spec, (int, float)):
        return np.full(x.shape, float(spec))
    else:
        values = np.asarray(spec, dtype=float)
    if values.size != x.size:
        raise ConfigError(
            [f"{name} vector has {values.size} entries, expected {x.size}"]
        )
    return values
