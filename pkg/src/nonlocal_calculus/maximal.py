"""Discrete Hardy-Littlewood maximal function on uniform grids.

``Mf(x) = sup_r (1/|B_r|) int_{B_r(x)} |f|`` is approximated by a maximum
over a finite set of radii of averages over *discrete* balls: the lattice
points ``x + h*k`` with ``|h*k| <= r``.  Values outside the grid are taken
as zero, so the average divides by the full lattice-point count of the ball.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import AnalyticField
from .grid import GridFunction, normalize_box, sample_to_grid

__all__ = [
    "DEFAULT_LADDER_SIZE",
    "DEFAULT_LADDER_RATIO",
    "MaximalReport",
    "default_radii",
    "ball_average",
    "maximal_function",
    "grid_lb_norm",
    "maximal_bound_check",
]

DEFAULT_LADDER_SIZE = 32
DEFAULT_LADDER_RATIO = 1.3


def default_radii(g: GridFunction, size: int = DEFAULT_LADDER_SIZE, ratio: float = DEFAULT_LADDER_RATIO):
    """Geometric ladder descending from half the smallest box width."""
    top = 0.5 * float(np.min(g.hi - g.lo))
    return [top / ratio**k for k in range(size)]


def _magnitude(g: GridFunction) -> np.ndarray:
    v = np.asarray(g.values, dtype=float)
    if g.components > 1:
        v = np.sqrt(np.sum(v * v, axis=-1))
    else:
        v = np.abs(v)
    return np.where(g.valid_mask, v, 0.0)


def _ball_average(a: np.ndarray, h: np.ndarray, r: float) -> np.ndarray:
    """Average of ``a`` over discrete balls of radius ``r`` (zero outside)."""
    n = a.ndim
    radius_cells = [int(math.floor(r / hi + 1e-12)) for hi in h]
    R = radius_cells[-1]
    pad = [(k, k) for k in radius_cells]
    padded = np.pad(a, pad)
    prefix = np.concatenate(
        [np.zeros(padded.shape[:-1] + (1,)), np.cumsum(padded, axis=-1)], axis=-1
    )
    shape = a.shape
    total = np.zeros(shape)
    count = 0
    ranges = [range(-k, k + 1) for k in radius_cells[:-1]]
    for offset in itertools.product(*ranges):
        rest = r * r - sum((o * hi) ** 2 for o, hi in zip(offset, h[:-1]))
        if rest < -1e-12 * r * r:
            continue
        w = int(math.floor(math.sqrt(max(rest, 0.0)) / h[-1] + 1e-12))
        w = min(w, R)
        rows = tuple(
            slice(k + o, k + o + s) for o, k, s in zip(offset, radius_cells[:-1], shape[:-1])
        )
        upper = prefix[rows + (slice(R + w + 1, R + w + 1 + shape[-1]),)]
        lower = prefix[rows + (slice(R - w, R - w + shape[-1]),)]
        total += upper - lower
        count += 2 * w + 1
    return total / count


def ball_average(g: GridFunction, r: float) -> GridFunction:
    """Average of ``|g|`` over the discrete ball of radius ``r`` at every vertex."""
    return GridFunction(g.lo, g.hi, _ball_average(_magnitude(g), g.spacing, float(r)), 1)


def maximal_function(g: GridFunction, radii=None) -> GridFunction:
    """Maximum over ``radii`` of discrete-ball averages of ``|g|``.

    Vector grids use the Euclidean magnitude per vertex.  Radii must be
    positive and at most half the box width; the finite radii set makes the
    result a lower approximation of the true supremum.
    """
    if radii is None:
        radii = default_radii(g)
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("maximal_function needs at least one radius")
    half = 0.5 * float(np.min(g.hi - g.lo))
    for r in radii:
        if not r > 0.0:
            raise ValueError(f"radii must be positive, got {r!r}")
        if r > half * (1 + 1e-12):
            raise ValueError(f"radius {r:g} exceeds half the box width {half:g}")
    a = _magnitude(g)
    out = np.zeros_like(a)
    for r in radii:
        np.maximum(out, _ball_average(a, g.spacing, r), out=out)
    return GridFunction(g.lo, g.hi, out, 1)


def grid_lb_norm(g: GridFunction, b: float) -> float:
    """``(h^n sum |g|^b)^(1/b)`` over the grid vertices (magnitude for vectors)."""
    a = _magnitude(g)
    if math.isinf(b):
        return float(a.max())
    return float((g.cell_volume * np.sum(a**b)) ** (1.0 / b))


@dataclass
class MaximalReport:
    b: float
    f_norm: float
    mf_norm: float
    ratio: float | None
    box: list
    resolution: list
    radii: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "b": self.b,
            "f_norm": self.f_norm,
            "mf_norm": self.mf_norm,
            "ratio": "undefined" if self.ratio is None else self.ratio,
            "grid": {"box": self.box, "resolution": self.resolution},
            "radii": self.radii,
        }
        return d


def maximal_bound_check(f: AnalyticField, b: float, box=None, resolution=None, radii=None) -> MaximalReport:
    """Grid ``||f||_b``, ``||Mf||_b`` and their ratio for a field.

    Checks that every value is finite and that ``Mf`` dominates the
    smallest-ball average pointwise.  The ratio is ``None`` when ``f``
    vanishes on the grid.
    """
    b = float(b)
    if not b > 1.0:
        raise ValueError(f"the maximal bound needs b > 1, got {b!r}")
    if box is None:
        if f.support_box is None:
            raise ValueError(f"field {f.name!r} has no support box; pass box=")
        lo, hi = f.support_box
    else:
        lo, hi = normalize_box(box, f.n)
    if resolution is None:
        resolution = {1: 2001, 2: 201, 3: 41}[f.n]
    g = sample_to_grid(f, list(zip(lo, hi)), resolution, n=f.n)
    radii = default_radii(g) if radii is None else [float(r) for r in radii]
    mf = maximal_function(g, radii)
    smallest = _ball_average(_magnitude(g), g.spacing, min(radii))
    if np.any(mf.values < smallest - 1e-12 * max(1.0, float(np.max(smallest)))):
        raise FloatingPointError("maximal function below its smallest-ball average")
    fn = grid_lb_norm(g, b)
    mn = grid_lb_norm(mf, b)
    if not (math.isfinite(fn) and math.isfinite(mn)):
        raise FloatingPointError("non-finite maximal-function norm")
    ratio = None if fn == 0.0 else mn / fn
    return MaximalReport(
        b=b,
        f_norm=fn,
        mf_norm=mn,
        ratio=ratio,
        box=[[float(x), float(y)] for x, y in zip(lo, hi)],
        resolution=list(g.resolution),
        radii=radii,
    )
