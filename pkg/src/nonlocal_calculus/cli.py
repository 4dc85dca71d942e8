"""Command-line front end.

Subcommands::

    check-kernel   moment and L^a-norm tables for one kernel
    eval           one nonlocal operator value at one point
    converge       delta sweep with L^q errors, fitted order and c0 bound
    maximal        discrete maximal-function norm ratio

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then command-line flags (flags win).  Exit status: 0 on success,
2 for configuration or I/O errors, 3 for numerical failures.  Failures
print a one-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import convergence_sweeps, format_float, reports_to_csv
from .fields import BUILTIN_FIELDS, builtin_field, multi_indices
from .kernel import Kernel, kernel_la_norm_exact
from .maximal import maximal_bound_check
from .operators import PATHS, canonical_kind, nonlocal_operator
from .quadrature import DEFAULT_RADIAL_ORDER, build_rule, la_norm_numeric, moment_check

__all__ = ["ConfigError", "ExperimentConfig", "build_parser", "run", "main"]

COMMANDS = ("check-kernel", "eval", "converge", "maximal")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    """Invalid configuration (exit status 2)."""


@dataclass
class ExperimentConfig:
    command: str = "converge"
    n: int = 1
    p: float | None = None
    delta: float | None = None
    deltas: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    q: list = field(default_factory=lambda: [2.0])
    a: list = field(default_factory=lambda: [1.0, 1.2])
    op: str | None = None
    field: str | None = None
    components: int | None = None
    A: list | None = None
    Q: list | None = None
    offset: list | None = None
    c: list | None = None
    width: float | None = None
    radius: float | None = None
    spread: float | None = None
    centers: list | None = None
    wavevector: list | None = None
    phase: list | None = None
    at: list | None = None
    box: list | None = None
    resolution: int | None = None
    norm_resolution: int | None = None
    radial_order: int = DEFAULT_RADIAL_ORDER
    angular_order: int | None = None
    path: str = "direct"
    threads: int = 1
    b: float = 2.0
    radii: list | None = None
    csv: str | None = None
    json: str | None = None
    format: str = "csv"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: _jsonable(v) for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{k: _unjson(v) for k, v in d.items()})

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def _unjson(v):
    if isinstance(v, str) and v in ("inf", "-inf"):
        return float(v)
    if isinstance(v, list):
        return [_unjson(x) for x in v]
    return v


# --- parsing --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(sp):
    S = argparse.SUPPRESS
    sp.add_argument("--config", default=S, help="JSON file with ExperimentConfig fields")
    sp.add_argument("--n", type=int, default=S, help="dimension (1, 2 or 3)")
    sp.add_argument("--p", type=float, default=S, help="kernel exponent, 0 < p < n")
    sp.add_argument("--radial-order", dest="radial_order", type=int, default=S)
    sp.add_argument("--angular-order", dest="angular_order", type=int, default=S)
    sp.add_argument("--threads", type=int, default=S, help="worker cap; results do not depend on it")
    sp.add_argument("--json", default=S, help="write a JSON report to this path")
    sp.add_argument("--format", choices=("csv", "json"), default=S, help="stdout format")


def _add_field(sp):
    S = argparse.SUPPRESS
    sp.add_argument("--field", choices=sorted(BUILTIN_FIELDS), default=S)
    sp.add_argument("--components", type=int, default=S)
    sp.add_argument("--A", type=_floats, default=S, help="linear coefficients, row-major")
    sp.add_argument("--Q", type=_floats, default=S, help="quadratic coefficients, row-major")
    sp.add_argument("--offset", type=_floats, default=S, help="constant term of linear/quadratic")
    sp.add_argument("--c", type=_floats, default=S, help="value of the constant field")
    sp.add_argument("--width", type=float, default=S)
    sp.add_argument("--radius", type=float, default=S)
    sp.add_argument("--spread", type=float, default=S)
    sp.add_argument("--centers", type=_floats, default=S, help="flattened (components, n)")
    sp.add_argument("--wavevector", type=_floats, default=S, help="flattened (components, n)")
    sp.add_argument("--phase", type=_floats, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="nonlocal-calculus", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("check-kernel", help="moment and L^a tables", allow_abbrev=False)
    _add_common(sp)
    sp.add_argument("--delta", type=float, default=S)
    sp.add_argument("--a", type=_floats, default=S, help="L^a exponents (comma list)")
    sp.add_argument("--csv", default=S, help="write the table to this path")

    sp = sub.add_parser("eval", help="one operator value", allow_abbrev=False)
    _add_common(sp)
    _add_field(sp)
    sp.add_argument("--op", default=S, help="div, grad or curl")
    sp.add_argument("--delta", type=float, default=S)
    sp.add_argument("--at", type=_floats, default=S, help="evaluation point")
    sp.add_argument("--path", choices=PATHS, default=S)

    sp = sub.add_parser("converge", help="delta sweep", allow_abbrev=False)
    _add_common(sp)
    _add_field(sp)
    sp.add_argument("--op", default=S, help="div, grad or curl")
    sp.add_argument("--q", type=_floats, default=S, help="L^q exponents, e.g. 1,2,inf")
    sp.add_argument("--deltas", type=_floats, default=S, help="strictly decreasing horizons")
    sp.add_argument("--box", type=_floats, default=S, help="lo,hi or lo1,hi1,...,lon,hin")
    sp.add_argument("--resolution", type=int, default=S, help="vertices per axis")
    sp.add_argument("--norm-resolution", dest="norm_resolution", type=int, default=S)
    sp.add_argument("--csv", default=S, help="write the CSV report to this path")

    sp = sub.add_parser("maximal", help="maximal-function norm ratio", allow_abbrev=False)
    _add_common(sp)
    _add_field(sp)
    sp.add_argument("--b", type=float, default=S, help="L^b exponent, b > 1")
    sp.add_argument("--box", type=_floats, default=S)
    sp.add_argument("--resolution", type=int, default=S)
    sp.add_argument("--radii", type=_floats, default=S)
    return parser


def config_from_args(argv) -> ExperimentConfig:
    ns = vars(build_parser().parse_args(argv))
    base = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
        base = ExperimentConfig.from_json(text).to_dict()
        base = {k: _unjson(v) for k, v in base.items()}
    base.update(ns)
    return ExperimentConfig.from_dict(base)


# --- validation helpers ---------------------------------------------------------------


def _require(cfg, name):
    v = getattr(cfg, name)
    if v is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required for {cfg.command}")
    return v


def _check_basics(cfg: ExperimentConfig):
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.n not in (1, 2, 3):
        raise ConfigError(f"n must be 1, 2 or 3, got {cfg.n!r}")
    if cfg.threads is None or int(cfg.threads) < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads!r}")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")


def _kernel(cfg) -> Kernel:
    return Kernel(cfg.n, float(_require(cfg, "p")), float(_require(cfg, "delta")))


def _box(cfg):
    if cfg.box is None:
        return None
    vals = list(cfg.box)
    if len(vals) == 2:
        return tuple(vals)
    if len(vals) == 2 * cfg.n:
        return [tuple(vals[2 * i : 2 * i + 2]) for i in range(cfg.n)]
    raise ConfigError(f"box needs 2 or {2 * cfg.n} numbers, got {len(vals)}")


def _field(cfg, kind=None):
    name = _require(cfg, "field")
    n = cfg.n
    params = {}
    for key, target in (("A", "A"), ("Q", "Q"), ("offset", "b"), ("width", "width"),
                        ("radius", "radius"), ("spread", "spread"), ("phase", "phase")):
        v = getattr(cfg, key)
        if v is not None:
            params[target] = v
    if cfg.c is not None:
        params["c"] = cfg.c[0] if len(cfg.c) == 1 else cfg.c
    for key in ("centers", "wavevector"):
        v = getattr(cfg, key)
        if v is not None:
            if len(v) % n:
                raise ConfigError(f"{key} needs a multiple of n={n} numbers")
            params[key] = np.reshape(v, (-1, n))
    components = cfg.components
    if components is None and name not in ("linear", "quadratic"):
        if kind is not None and kind != "gradient":
            components = n
        elif cfg.centers is not None:
            components = len(cfg.centers) // n
        elif cfg.wavevector is not None:
            components = len(cfg.wavevector) // n
    try:
        return builtin_field(name, n, components, **params)
    except TypeError as exc:
        raise ConfigError(f"field {name!r} does not accept these parameters: {exc}") from None


def _emit(cfg, text_csv, payload, out):
    if cfg.csv is not None and text_csv is not None:
        Path(cfg.csv).write_text(text_csv)
    if cfg.json is not None:
        Path(cfg.json).write_text(json.dumps(payload, indent=2) + "\n")
    if cfg.format == "json" or text_csv is None:
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(text_csv)


# --- commands ---------------------------------------------------------------------------


def _check_kernel(cfg, out):
    k = _kernel(cfg)
    rule = build_rule(k.n, k.p, k.delta, int(cfg.radial_order), cfg.angular_order)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "alpha", "j", "a", "numeric", "exact", "abs_error"])
    rows = []
    for alpha in multi_indices(k.n, 3):
        for j in range(1, k.n + 1):
            val = moment_check(rule, k, alpha, j)
            order = sum(alpha)
            exact = None
            if order % 2 == 0:
                exact = 0.0
            elif order == 1:
                exact = 1.0 if alpha[j - 1] == 1 else 0.0
            quantity = "second_moment" if order == 1 and alpha[j - 1] == 1 else "moment"
            rows.append({"quantity": quantity, "alpha": list(alpha), "j": j, "a": None,
                         "numeric": val, "exact": exact,
                         "abs_error": None if exact is None else abs(val - exact)})
    for a in cfg.a:
        if a < 1 or a * k.p >= k.n:
            raise ConfigError(f"L^a norm needs a >= 1 and a*p < n; got a={a:g}, p={k.p:g}, n={k.n}")
        num = la_norm_numeric(k, a, int(cfg.radial_order))
        exact = kernel_la_norm_exact(k, a)
        rows.append({"quantity": "la_norm", "alpha": None, "j": None, "a": a,
                     "numeric": num, "exact": exact, "abs_error": abs(num - exact)})
    for r in rows:
        w.writerow([
            r["quantity"],
            "" if r["alpha"] is None else " ".join(str(x) for x in r["alpha"]),
            "" if r["j"] is None else r["j"],
            "" if r["a"] is None else format_float(r["a"]),
            format_float(r["numeric"]),
            "" if r["exact"] is None else format_float(r["exact"]),
            "" if r["abs_error"] is None else format_float(r["abs_error"]),
        ])
    payload = {"kernel": {"n": k.n, "p": k.p, "delta": k.delta, "omega0": k.omega0},
               "quadrature": {"radial_order": rule.radial_order, "angular_order": rule.angular_order},
               "rows": rows}
    _emit(cfg, buf.getvalue(), payload, out)


def _eval(cfg, out):
    kind = canonical_kind(_require(cfg, "op"))
    f = _field(cfg, kind)
    at = _require(cfg, "at")
    if len(at) != cfg.n:
        raise ConfigError(f"--at needs {cfg.n} coordinates, got {len(at)}")
    spec = nonlocal_operator(kind, cfg.n, float(_require(cfg, "p")), float(_require(cfg, "delta")),
                             cfg.radial_order, cfg.angular_order, cfg.path)
    val = np.atleast_1d(np.asarray(spec(f, np.asarray(at, dtype=float), cfg.threads), dtype=float))
    if not np.all(np.isfinite(val)):
        raise FloatingPointError("operator value is not finite")
    text = ",".join(repr(float(v)) for v in val) + "\n"
    payload = {"op": kind, "field": f.name, "at": list(at), "value": [float(v) for v in val]}
    if cfg.format == "json" or cfg.json is not None:
        _emit(cfg, text, payload, out)
    else:
        out.write(text)


def _converge(cfg, out):
    kind = canonical_kind(_require(cfg, "op"))
    f = _field(cfg, kind)
    reports = convergence_sweeps(
        f, kind, cfg.n, float(_require(cfg, "p")), cfg.q, cfg.deltas,
        box=_box(cfg), resolution=cfg.resolution, radial_order=cfg.radial_order,
        angular_order=cfg.angular_order, threads=int(cfg.threads),
        norm_resolution=cfg.norm_resolution,
    )
    payload = {"reports": [r.to_dict() for r in reports]}
    _emit(cfg, reports_to_csv(reports), _json_safe(payload), out)


def _maximal(cfg, out):
    f = _field(cfg)
    rep = maximal_bound_check(f, cfg.b, box=_box(cfg), resolution=cfg.resolution, radii=cfg.radii)
    _emit(cfg, None, rep.to_dict(), out)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return format_float(obj) if math.isinf(obj) else "nan"
    return obj


_COMMANDS = {"check-kernel": _check_kernel, "eval": _eval, "converge": _converge, "maximal": _maximal}


def run(config: ExperimentConfig, out=None) -> int:
    """Execute one command; raises on failure (see :func:`main` for exit codes)."""
    out = sys.stdout if out is None else out
    _check_basics(config)
    _COMMANDS[config.command](config, out)
    return EXIT_OK


def _fail(code, exc, err):
    record = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    err.write(json.dumps(record) + "\n")
    return code


def main(argv=None, out=None, err=None) -> int:
    err = sys.stderr if err is None else err
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return run(cfg, out)
    except FloatingPointError as exc:
        return _fail(EXIT_NUMERIC, exc, err)
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        return _fail(EXIT_CONFIG, exc, err)
