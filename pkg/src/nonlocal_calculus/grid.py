"""Uniform vertex grids holding sampled scalar or vector values."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["GridFunction", "sample_to_grid", "normalize_box"]


def normalize_box(box, n: int | None = None):
    """Return ``(lo, hi)`` float arrays.

    ``box`` is either a scalar pair ``(lo, hi)`` (the same interval on every
    axis) or a sequence of per-axis pairs ``[(lo_1, hi_1), ..., (lo_n, hi_n)]``.
    """
    arr = np.asarray(box, dtype=float)
    if arr.shape == (2,):
        k = 1 if n is None else n
        lo, hi = np.full(k, arr[0]), np.full(k, arr[1])
    elif arr.ndim == 2 and arr.shape[1] == 2:
        lo, hi = arr[:, 0].copy(), arr[:, 1].copy()
    else:
        raise ValueError(f"cannot interpret box {box!r}")
    if n is not None and len(lo) != n:
        raise ValueError(f"box has dimension {len(lo)}, expected {n}")
    if np.any(hi <= lo):
        raise ValueError(f"box must have lo < hi on every axis, got {box!r}")
    return lo, hi


@dataclass(frozen=True)
class GridFunction:
    """Values on the vertices of a uniform axis-aligned grid.

    ``values`` has shape ``resolution`` (scalar) or ``resolution + (m,)``
    (vector).  ``valid`` optionally marks the vertices where the values are
    meaningful (e.g. where a stencil fits entirely inside the grid).
    """

    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray
    components: int = 1
    valid: np.ndarray | None = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", values)
        n = len(lo)
        expected_ndim = n if self.components == 1 else n + 1
        if values.ndim != expected_ndim:
            raise ValueError(
                f"values of shape {values.shape} do not match a {n}-D grid "
                f"with {self.components} component(s)"
            )
        if self.components > 1 and values.shape[-1] != self.components:
            raise ValueError("trailing axis of values must equal components")
        if any(s < 2 for s in values.shape[:n]):
            raise ValueError("resolution must be >= 2 on every axis")
        if self.valid is not None:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != values.shape[:n]:
                raise ValueError("valid mask must match the grid resolution")
            object.__setattr__(self, "valid", valid)

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def resolution(self) -> tuple[int, ...]:
        return tuple(self.values.shape[: self.n])

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.resolution) - 1)

    @property
    def h(self) -> float:
        s = self.spacing
        if not np.allclose(s, s[0], rtol=1e-12, atol=0.0):
            raise ValueError(f"grid spacing is not isotropic: {s}")
        return float(s[0])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def valid_mask(self) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.resolution, dtype=bool)
        return self.valid

    def axes(self):
        return [np.linspace(a, b, r) for a, b, r in zip(self.lo, self.hi, self.resolution)]

    def points(self) -> np.ndarray:
        """Vertex coordinates, shape ``resolution + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def same_grid(self, other: "GridFunction") -> bool:
        return (
            self.resolution == other.resolution
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def with_values(self, values, components=None, valid=None) -> "GridFunction":
        return GridFunction(
            self.lo,
            self.hi,
            values,
            self.components if components is None else components,
            self.valid if valid is None else valid,
        )

    # --- CSV (debugging aid, not a stable format) ---------------------------

    def to_csv(self, path) -> None:
        pts = self.points().reshape(-1, self.n)
        vals = self.values.reshape(len(pts), self.components)
        coord_names = ["x", "y", "z"][: self.n]
        value_names = (
            ["value"] if self.components == 1 else [f"value{i}" for i in range(self.components)]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(coord_names + value_names)
            for p, v in zip(pts, vals):
                writer.writerow([repr(float(a)) for a in p] + [repr(float(b)) for b in v])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = np.array([[float(c) for c in row] for row in reader])
        n = sum(1 for h in header if h in ("x", "y", "z"))
        m = len(header) - n
        coords = rows[:, :n]
        axes = [np.unique(coords[:, i]) for i in range(n)]
        res = tuple(len(a) for a in axes)
        values = rows[:, n:].reshape(res + ((m,) if m > 1 else ()))
        return cls(
            np.array([a[0] for a in axes]), np.array([a[-1] for a in axes]), values, m
        )


def sample_to_grid(f, box, resolution, n: int | None = None) -> GridFunction:
    """Sample ``f`` at the vertices of a uniform grid over ``box``.

    ``f`` is an :class:`~nonlocal_calculus.fields.AnalyticField` or any
    callable mapping an ``(N, n)`` array to ``(N,)`` or ``(N, m)`` values.
    """
    if n is None:
        n = getattr(f, "n", None)
    lo, hi = normalize_box(box, n)
    n = len(lo)
    res = (int(resolution),) * n if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    if len(res) != n or any(r < 2 for r in res):
        raise ValueError(f"resolution must be >= 2 on each of {n} axes, got {resolution!r}")
    axes = [np.linspace(a, b, r) for a, b, r in zip(lo, hi, res)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    vals = np.asarray(f(pts), dtype=float)
    m = 1 if vals.ndim == 1 else vals.shape[1]
    vals = vals.reshape(res + ((m,) if m > 1 else ()))
    return GridFunction(lo, hi, vals, m)
