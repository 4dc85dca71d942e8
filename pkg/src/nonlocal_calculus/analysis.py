"""Nonlocal-to-local convergence studies: L^q errors, observed order, c0 bound."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import SOBOLEV_CONVENTION, AnalyticField, local_operator, sobolev_norms
from .grid import GridFunction, normalize_box
from .kernel import UNIT_BALL_VOLUME, Kernel
from .maximal import MaximalReport, maximal_bound_check, maximal_function
from .operators import NonlocalOperatorSpec, canonical_kind, evaluate_points
from .quadrature import DEFAULT_ANGULAR_ORDER, DEFAULT_RADIAL_ORDER, build_rule

__all__ = [
    "EXACT_THRESHOLD",
    "CSV_COLUMNS",
    "SweepRow",
    "ConvergenceReport",
    "lq_error",
    "c0_constant",
    "rate_fit",
    "convergence_sweep",
    "convergence_sweeps",
    "format_float",
    "write_csv",
    "reports_to_csv",
    "refinement_change",
    "MaximalReport",
    "maximal_function",
    "maximal_bound_check",
]

EXACT_THRESHOLD = 1e-12
CSV_COLUMNS = ("delta", "q", "error", "sobolev_norm", "bound", "ratio")
# default evaluation grid spacing per dimension
DEFAULT_SPACING = {1: 0.01, 2: 0.05, 3: 0.2}
# cap on the default number of vertices per axis (wide supports get coarser)
DEFAULT_MAX_RESOLUTION = {1: 4001, 2: 257, 3: 49}


def format_float(x) -> str:
    """17 significant digits: round-trips through ``float``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _parse_q(q) -> float:
    q = float(q)
    if not q >= 1.0:
        raise ValueError(f"L^q exponent must satisfy q >= 1, got {q!r}")
    return q


def lq_error(a: GridFunction, b: GridFunction, q) -> float:
    """Discrete ``||a - b||_{L^q}`` over the vertices valid in both grids.

    Vector values use the Euclidean magnitude per vertex.  Finite ``q`` uses
    ``(h^n sum |a-b|^q)^(1/q)``; ``q = inf`` the maximum.
    """
    q = _parse_q(q)
    if not a.same_grid(b) or a.components != b.components:
        raise ValueError("lq_error needs grids with identical box, resolution and components")
    mask = a.valid_mask & b.valid_mask
    d = a.values[mask] - b.values[mask]
    mag = np.abs(d) if d.ndim == 1 else np.sqrt(np.sum(d * d, axis=-1))
    if mag.size == 0:
        raise ValueError("no valid vertices to compare")
    if math.isinf(q):
        return float(mag.max())
    return float((a.cell_volume * np.sum(mag**q)) ** (1.0 / q))


def c0_constant(n: int, p: float) -> float:
    """Explicit convergence constant ``n (n-p+1) alpha_n / (12 (n-p))``."""
    if n not in UNIT_BALL_VOLUME:
        raise ValueError(f"dimension n must be 1, 2 or 3, got {n!r}")
    if not 0.0 < p < n:
        raise ValueError(f"exponent p must satisfy 0 < p < n={n}, got {p!r}")
    return n * (n - p + 1.0) * UNIT_BALL_VOLUME[n] / (12.0 * (n - p))


def rate_fit(rows) -> tuple[float, float]:
    """Least-squares ``log(error) = order * log(delta) + log_constant``.

    Rows with ``error < EXACT_THRESHOLD`` are dropped.  Returns
    ``(order, log_constant)`` with the natural logarithm.
    """
    usable = [(float(d), float(e)) for d, e in rows if float(e) >= EXACT_THRESHOLD]
    if len(usable) < 2:
        raise ValueError(f"rate_fit needs >= 2 rows with error >= {EXACT_THRESHOLD:g}")
    x = np.log([d for d, _ in usable])
    y = np.log([e for _, e in usable])
    if np.ptp(x) == 0.0:
        raise ValueError("rate_fit needs at least two distinct deltas")
    A = np.column_stack([x, np.ones_like(x)])
    (order, log_c), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(order), float(log_c)


@dataclass
class SweepRow:
    delta: float
    error: float
    sobolev_norm: float
    bound: float
    ratio: float

    @property
    def exact(self) -> bool:
        return self.error < EXACT_THRESHOLD


@dataclass
class ConvergenceReport:
    field: str
    kind: str
    n: int
    p: float
    q: float
    rows: list[SweepRow]
    fitted_order: float | None
    fitted_log_constant: float | None
    c0: float
    convention: str = SOBOLEV_CONVENTION
    quadrature: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        """True when every row is below the exactness threshold."""
        return self.fitted_order is None

    @property
    def max_ratio(self) -> float:
        return max(r.ratio for r in self.rows)

    def bound_holds(self) -> bool:
        return all(r.error <= r.bound for r in self.rows)

    def csv_rows(self):
        for r in self.rows:
            yield [format_float(v) for v in (r.delta, self.q, r.error, r.sobolev_norm, r.bound, r.ratio)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"] = format_float(self.q) if math.isinf(self.q) else self.q
        if self.fitted_order is None:
            d["fitted_order"] = "exact"
            d["fitted_log_constant"] = None
        d["bound_holds"] = self.bound_holds()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def write_csv(reports, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        for row in rep.csv_rows():
            writer.writerow(row)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()


def _evaluation_grid(field_: AnalyticField, deltas, box, resolution):
    n = field_.n
    if box is None:
        if field_.support_box is None:
            raise ValueError(f"field {field_.name!r} has no support box; pass box=")
        lo, hi = field_.support_box
        lo, hi = lo + max(deltas), hi - max(deltas)
        if np.any(hi <= lo):
            raise ValueError("support box is too small for the largest delta")
    else:
        lo, hi = normalize_box(box, n)
        if field_.support_box is not None:
            slo, shi = field_.support_box
            if np.any(lo < slo + max(deltas) - 1e-12) or np.any(hi > shi - max(deltas) + 1e-12):
                raise ValueError(
                    "evaluation box must lie inside the field's support box by at least max(deltas)"
                )
    if resolution is None:
        width = float(np.max(hi - lo))
        resolution = min(int(round(width / DEFAULT_SPACING[n])) + 1, DEFAULT_MAX_RESOLUTION[n])
    res = (int(resolution),) * n if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    return lo, hi, res


def _sweep_errors(field_, kind, n, p, qs, deltas, lo, hi, res, radial_order, angular_order, threads):
    axes = [np.linspace(a, b, r) for a, b, r in zip(lo, hi, res)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    exact = np.asarray(local_operator(kind, field_, pts), dtype=float)
    m = 1 if exact.ndim == 1 else exact.shape[1]
    shape = res + ((m,) if m > 1 else ())
    exact_grid = GridFunction(lo, hi, exact.reshape(shape), m)
    errors = {q: [] for q in qs}
    for delta in deltas:
        kernel = Kernel(n, float(p), delta)
        rule = build_rule(n, float(p), delta, radial_order, angular_order)
        spec = NonlocalOperatorSpec(kind, kernel, rule, "direct")
        vals = np.asarray(evaluate_points(spec, field_, pts, threads), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError(f"non-finite operator values at delta={delta:g}")
        approx = exact_grid.with_values(vals.reshape(shape))
        for q in qs:
            errors[q].append(lq_error(approx, exact_grid, q))
    return errors


def convergence_sweeps(
    field_: AnalyticField,
    kind: str,
    n: int,
    p: float,
    qs,
    deltas,
    box=None,
    resolution=None,
    radial_order: int | None = None,
    angular_order: int | None = None,
    threads: int = 1,
    norm_resolution=None,
) -> list[ConvergenceReport]:
    """One report per ``q``; the operator is evaluated once per delta.

    For every delta the kernel normalization and quadrature rule are rebuilt,
    the nonlocal operator is evaluated at all vertices of the evaluation grid
    by the direct path and compared with the exact local operator.
    """
    kind = canonical_kind(kind)
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ValueError("a sweep needs at least three deltas")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError(f"deltas must be strictly decreasing, got {deltas}")
    if any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if field_.n != n:
        raise ValueError(f"field is {field_.n}-D but n={n}")
    qs = [_parse_q(q) for q in qs]
    radial_order = DEFAULT_RADIAL_ORDER if radial_order is None else int(radial_order)
    angular_order = DEFAULT_ANGULAR_ORDER[n] if angular_order is None else int(angular_order)

    lo, hi, res = _evaluation_grid(field_, deltas, box, resolution)
    errors = _sweep_errors(
        field_, kind, n, p, qs, deltas, lo, hi, res, radial_order, angular_order, threads
    )
    # fields without a support box (polynomials) are normed over the evaluation box
    norm_box = None if field_.support_box is not None else list(zip(lo, hi))
    norms = sobolev_norms(field_, qs, order=3, box=norm_box, resolution=norm_resolution)
    c0 = c0_constant(n, p)

    reports = []
    for q in qs:
        rows = []
        for delta, err in zip(deltas, errors[q]):
            bound = c0 * delta**2 * norms[q]
            rows.append(SweepRow(delta, err, norms[q], bound, err / bound if bound > 0 else math.inf))
        try:
            order, log_c = rate_fit([(r.delta, r.error) for r in rows])
        except ValueError:
            order, log_c = None, None
        reports.append(
            ConvergenceReport(
                field=field_.name,
                kind=kind,
                n=n,
                p=float(p),
                q=q,
                rows=rows,
                fitted_order=order,
                fitted_log_constant=log_c,
                c0=c0,
                quadrature={"radial_order": radial_order, "angular_order": angular_order},
                grid={"box": [[float(a), float(b)] for a, b in zip(lo, hi)], "resolution": list(res)},
            )
        )
    return reports


def convergence_sweep(field_, kind, n, p, q, deltas, box=None, resolution=None,
                      radial_order=None, angular_order=None, threads=1) -> ConvergenceReport:
    return convergence_sweeps(
        field_, kind, n, p, [q], deltas, box, resolution, radial_order, angular_order, threads
    )[0]


def refinement_change(field_, kind, n, p, q, delta, box=None, resolution=None,
                      radial_order=None, angular_order=None, threads=1) -> float:
    """Relative change of the L^q error at one delta when the grid spacing halves."""
    kind = canonical_kind(kind)
    q = _parse_q(q)
    radial_order = DEFAULT_RADIAL_ORDER if radial_order is None else int(radial_order)
    angular_order = DEFAULT_ANGULAR_ORDER[n] if angular_order is None else int(angular_order)
    lo, hi, res = _evaluation_grid(field_, [delta], box, resolution)
    args = (radial_order, angular_order, threads)
    e0 = _sweep_errors(field_, kind, n, p, [q], [delta], lo, hi, res, *args)[q][0]
    fine = tuple(2 * r - 1 for r in res)
    e1 = _sweep_errors(field_, kind, n, p, [q], [delta], lo, hi, fine, *args)[q][0]
    return abs(e1 - e0) / e1
