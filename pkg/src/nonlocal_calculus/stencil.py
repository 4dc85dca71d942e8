"""Grid (convolutional) realization of the nonlocal operators.

The field is replaced by its piecewise multilinear interpolant on the grid,
so the operator becomes a finite correlation

    (L u)(x_g) = sum_o w_o (*) u(x_g + o h),   w_o = int_{|y|<delta} omega(y) e(y) phi_o(y) dy,

with ``phi_o`` the multilinear hat function of vertex ``o h``.  Because the
interpolant reproduces linear functions, ``sum_o (o h) w_o^T`` is the exact
second moment (the identity) up to cell-quadrature error, and linear fields
are reproduced exactly.

Cell integrals are computed on the positive orthant and reflected:

* the cell touching the origin is split into ``n`` Duffy pyramids, with
  Gauss-Jacobi in the pyramid height absorbing ``|y|**-p``;
* interior cells use tensor Gauss-Legendre;
* cells cut by the sphere ``|y| = delta``: the innermost coordinate is
  clipped exactly to the ball.  In 2-D the outer interval is split at the
  kinks of the clipped length (roundoff-level weights); in 3-D the cell is
  bisected ``CUT_DEPTH`` times instead (about 1e-8 relative).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_erosion
from scipy.special import roots_jacobi

from .grid import GridFunction
from .kernel import Kernel
from .operators import canonical_kind

__all__ = ["StencilOperator", "build_stencil", "apply_stencil"]

CELL_ORDER = 16
# subdivision depth for cells cut by the sphere (2-D cells are split exactly)
CUT_DEPTH = {1: 0, 2: 0, 3: 2}


@dataclass(frozen=True)
class StencilOperator:
    kind: str
    kernel: Kernel
    h: float
    offsets: np.ndarray  # (K, n) integers
    weights: np.ndarray  # (K, n)

    @property
    def n(self) -> int:
        return self.kernel.n

    @property
    def radius_cells(self) -> int:
        return int(np.abs(self.offsets).max()) if len(self.offsets) else 0

    def second_moment(self) -> np.ndarray:
        """``sum_o (o h) w_o^T``; the identity matrix up to cell-quadrature error."""
        return (self.offsets * self.h).T @ self.weights


def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _tensor(nodes, weights, lo, hi):
    """Tensor Gauss nodes on the box ``[lo, hi]``."""
    n = len(lo)
    grids = np.meshgrid(*[lo[i] + (hi[i] - lo[i]) * nodes for i in range(n)], indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, n)
    w = np.ones(1)
    for i in range(n):
        w = np.multiply.outer(w, (hi[i] - lo[i]) * weights).ravel()
    return pts, w


class _CellIntegrator:
    """Integrals of ``omega e phi_v`` over (cell ∩ ball) for the 2**n vertices ``v``."""

    def __init__(self, kernel: Kernel, h: float, order: int = CELL_ORDER, depth: int | None = None):
        self.kernel = kernel
        self.h = h
        self.n = kernel.n
        self.depth = CUT_DEPTH[self.n] if depth is None else depth
        self.gx, self.gw = _gauss(order)
        self.vertices = np.array(list(itertools.product((0, 1), repeat=self.n)))
        beta = self.n - 1.0 - kernel.p
        jx, jw = roots_jacobi(6, 0.0, beta)
        # int_0^1 t^beta g(t) dt
        self.jx, self.jw = 0.5 * (jx + 1.0), jw * 0.5 ** (beta + 1.0)

    def _moments(self, pts, w, cell_lo):
        """``sum_q w_q omega e_q phi_v(q)`` -> array ``(2**n, n)``."""
        r = np.sqrt(np.sum(pts * pts, axis=1))
        ker = self.kernel.radial(r) * w
        e = pts / r[:, None]
        s = (pts - cell_lo) / self.h
        phi = np.ones((len(self.vertices), len(pts)))
        for i in range(self.n):
            phi *= np.where(self.vertices[:, i : i + 1] == 1, s[None, :, i], 1.0 - s[None, :, i])
        return phi @ (ker[:, None] * e)

    def origin_cell(self):
        n, h = self.n, self.h
        if n == 1:
            pts = (h * self.jx)[:, None]
            # t^beta * t^p = t^(n-1) Jacobian, times omega0 t^-p h^-p -> absorbed below
            w = h**n * self.jw * self.jx**self.kernel.p
            return self._moments(pts, w, np.zeros(1))
        total = np.zeros((len(self.vertices), n))
        s_pts, s_w = _tensor(self.gx, self.gw, np.zeros(n - 1), np.ones(n - 1))
        for k in range(n):
            others = [j for j in range(n) if j != k]
            xi = h * self.jx
            pts = np.zeros((len(xi), len(s_pts), n))
            pts[:, :, k] = xi[:, None]
            pts[:, :, others] = xi[:, None, None] * s_pts[None, :, :]
            # dy = xi^(n-1) dxi ds; Gauss-Jacobi carries xi^(n-1-p), restore xi^p
            w = np.outer(h**n * self.jw * self.jx**self.kernel.p, s_w)
            total += self._moments(pts.reshape(-1, n), w.ravel(), np.zeros(n))
        return total

    def _clipped(self, lo, hi, cell_lo):
        """Gauss rule on box ∩ ball, clipping the largest-centre axis exactly."""
        n, delta = self.n, self.kernel.delta
        k = int(np.argmax(0.5 * (lo + hi)))
        others = [j for j in range(n) if j != k]
        if len(others) == 1:
            # the clipped inner length has kinks where the circle crosses
            # y_k = lo_k or y_k = hi_k; split the outer interval there
            j = others[0]
            cuts = [lo[j], hi[j]]
            for bound in (lo[k], hi[k]):
                if bound < delta:
                    x = np.sqrt(delta**2 - bound**2)
                    if lo[j] < x < hi[j]:
                        cuts.append(x)
            cuts = np.sort(cuts)
            pieces = [
                _tensor(self.gx, self.gw, np.array([a]), np.array([b]))
                for a, b in zip(cuts[:-1], cuts[1:])
            ]
            o_pts = np.concatenate([pc[0] for pc in pieces])
            o_w = np.concatenate([pc[1] for pc in pieces])
        elif others:
            o_pts, o_w = _tensor(self.gx, self.gw, lo[others], hi[others])
        else:
            o_pts, o_w = np.zeros((1, 0)), np.ones(1)
        rho2 = np.sum(o_pts * o_pts, axis=1)
        top = np.sqrt(np.maximum(delta**2 - rho2, 0.0))
        upper = np.minimum(hi[k], top)
        keep = upper > lo[k]
        o_pts, o_w, upper = o_pts[keep], o_w[keep], upper[keep]
        if len(o_w) == 0:
            return np.zeros((len(self.vertices), n))
        length = upper - lo[k]
        inner = lo[k] + length[:, None] * self.gx[None, :]
        pts = np.empty((len(o_w), len(self.gx), n))
        pts[:, :, k] = inner
        pts[:, :, others] = o_pts[:, None, :]
        w = (o_w * length)[:, None] * self.gw[None, :]
        return self._moments(pts.reshape(-1, n), w.ravel(), cell_lo)

    def _cut(self, lo, hi, cell_lo, depth):
        delta = self.kernel.delta
        near = np.linalg.norm(lo)
        far = np.linalg.norm(hi)
        if near >= delta:
            return 0.0
        if far <= delta:
            pts, w = _tensor(self.gx, self.gw, lo, hi)
            return self._moments(pts, w, cell_lo)
        if depth == 0:
            return self._clipped(lo, hi, cell_lo)
        mid = 0.5 * (lo + hi)
        total = 0.0
        for corner in itertools.product((0, 1), repeat=self.n):
            c = np.array(corner)
            sub_lo = np.where(c == 0, lo, mid)
            sub_hi = np.where(c == 0, mid, hi)
            total = total + self._cut(sub_lo, sub_hi, cell_lo, depth - 1)
        return total

    def cell(self, index):
        index = np.asarray(index)
        lo = index * self.h
        hi = lo + self.h
        if not index.any():
            return self.origin_cell()
        return self._cut(lo, hi, lo, self.depth)


def build_stencil(kernel: Kernel, kind: str, h: float) -> StencilOperator:
    """Correlation weights for the nonlocal operator on a grid of spacing ``h``."""
    kind = canonical_kind(kind)
    if kind == "curl" and kernel.n != 3:
        raise ValueError("the nonlocal curl is defined for n = 3 only")
    h = float(h)
    if not 0.0 < h <= kernel.delta / 4.0 * (1.0 + 1e-12):
        raise ValueError(
            f"grid spacing h={h:g} too coarse: need h <= delta/4 = {kernel.delta / 4:g}"
        )
    n = kernel.n
    integ = _CellIntegrator(kernel, h)
    ncell = int(np.ceil(kernel.delta / h))
    acc: dict[tuple, np.ndarray] = {}
    signs = np.array(list(itertools.product((1, -1), repeat=n)))
    for index in itertools.product(range(ncell), repeat=n):
        index = np.array(index)
        if np.linalg.norm(index * h) >= kernel.delta:
            continue
        moments = integ.cell(index)
        if np.ndim(moments) == 0:
            continue
        for v, vec in zip(integ.vertices, moments):
            vertex = index + v
            for sgn in signs:
                key = tuple(int(a) for a in sgn * vertex)
                acc[key] = acc.get(key, 0.0) + sgn * vec
    # a vertex on a reflection plane is reached from both sides; the
    # accumulation above already sums both halves.  Enforce exact oddness.
    keys = sorted(acc)
    odd = {}
    for key in keys:
        neg = tuple(-a for a in key)
        odd[key] = 0.5 * (acc[key] - acc.get(neg, 0.0))
    keys = [k for k in keys if np.any(odd[k] != 0.0)]
    offsets = np.array(keys, dtype=int).reshape(-1, n)
    weights = np.array([odd[k] for k in keys]).reshape(-1, n)
    return StencilOperator(kind, kernel, h, offsets, weights)


def apply_stencil(op: StencilOperator, g: GridFunction) -> GridFunction:
    """Correlate ``g`` with the stencil; values are valid where the stencil fits."""
    n = op.n
    if g.n != n:
        raise ValueError(f"grid is {g.n}-D, stencil is {n}-D")
    if not np.isclose(g.h, op.h, rtol=1e-9, atol=0.0):
        raise ValueError(f"grid spacing {g.h:g} differs from stencil spacing {op.h:g}")
    if op.kind == "gradient":
        if g.components != 1:
            raise ValueError("gradient stencil requires a scalar grid")
        out_m = n
    else:
        if g.components != n:
            raise ValueError(f"{op.kind} stencil requires a {n}-component grid")
        out_m = 1 if op.kind == "divergence" else n
    rad = op.radius_cells
    res = g.resolution
    if any(r <= 2 * rad for r in res):
        raise ValueError(
            f"insufficient padding: stencil reaches {rad} cells, grid resolution {res}"
        )
    inner = tuple(slice(rad, r - rad) for r in res)
    shape = tuple(r - 2 * rad for r in res)
    acc = np.zeros(shape + ((out_m,) if out_m > 1 else ()))
    u = g.values
    if op.kind != "gradient" and g.components == 1:
        u = u[..., None]  # 1-D vector field stored as scalar
    for o, w in zip(op.offsets, op.weights):
        sl = tuple(slice(rad + oi, r - rad + oi) for oi, r in zip(o, res))
        block = u[sl]
        if op.kind == "gradient":
            acc += (block[..., None] * w).reshape(acc.shape)
        elif op.kind == "divergence":
            acc += block @ w
        else:
            acc += np.cross(w, block)
    values = np.full(res + ((out_m,) if out_m > 1 else ()), np.nan)
    values[inner] = acc
    valid = np.zeros(res, dtype=bool)
    valid[inner] = True
    if g.valid is not None:
        footprint = np.zeros((2 * rad + 1,) * n, dtype=bool)
        footprint[tuple((op.offsets + rad).T)] = True
        footprint[(rad,) * n] = True
        valid &= binary_erosion(g.valid, structure=footprint, border_value=0)
    return GridFunction(g.lo, g.hi, values, out_m, valid)
