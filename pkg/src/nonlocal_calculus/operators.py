"""Nonlocal divergence, gradient and curl evaluated by ball quadrature.

With ``e = y/|y|`` and ``c_i = w_i * omega(y_i) * e_i`` the per-node vector
weights of a :class:`~nonlocal_calculus.quadrature.BallQuadratureRule`:

* direct path:        ``sum_i c_i (*) (u(x + y_i) - u(x))``
* convolutional path: ``-sum_i c_i (*) u(x - y_i)``

where ``(*)`` is the scalar product (divergence), scaling (gradient) or
``c x u`` (curl).  Both converge to ``+div u``, ``+grad u`` and ``+curl u``;
they agree because ``sum_i c_i`` vanishes on an antipodally symmetric rule.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernel import Kernel
from .quadrature import BallQuadratureRule, build_rule

__all__ = [
    "KINDS",
    "canonical_kind",
    "NonlocalOperatorSpec",
    "nonlocal_operator",
    "nonlocal_divergence_at",
    "nonlocal_gradient_at",
    "nonlocal_curl_at",
    "evaluate_points",
]

KINDS = ("divergence", "gradient", "curl")
_ALIASES = {"div": "divergence", "grad": "gradient", "rot": "curl"}
PATHS = ("direct", "convolutional")

# number of (point, node) pairs evaluated per block; fixed so that the
# summation order never depends on the thread count
_BLOCK_PAIRS = 1 << 17


def canonical_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown operator {kind!r}; choose from {KINDS}")
    return kind


@dataclass(frozen=True)
class NonlocalOperatorSpec:
    kind: str
    kernel: Kernel
    rule: BallQuadratureRule
    path: str = "direct"

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.path not in PATHS:
            raise ValueError(f"path must be one of {PATHS}, got {self.path!r}")
        k, r = self.kernel, self.rule
        if (k.n, k.p, k.delta) != (r.n, r.p, r.delta):
            raise ValueError(
                f"rule built for (n, p, delta)={r.kernel_params}, kernel has "
                f"{(k.n, k.p, k.delta)}"
            )
        if self.kind == "curl" and k.n != 3:
            raise ValueError("the nonlocal curl is defined for n = 3 only")

    @classmethod
    def build(cls, kind, n, p, delta, radial_order=None, angular_order=None, path="direct"):
        kernel = Kernel(int(n), float(p), float(delta))
        kw = {} if radial_order is None else {"radial_order": radial_order}
        rule = build_rule(kernel.n, kernel.p, kernel.delta, angular_order=angular_order, **kw)
        return cls(kind, kernel, rule, path)

    @property
    def n(self) -> int:
        return self.kernel.n

    @property
    def node_weights(self) -> np.ndarray:
        """``(N, n)`` array ``w_i * omega(y_i) * e_i``."""
        return self.rule.kernel_weights(self.kernel)[:, None] * self.rule.directions

    def __call__(self, u, x, threads: int = 1):
        return evaluate_points(self, u, x, threads)


def nonlocal_operator(kind, n, p, delta, radial_order=None, angular_order=None, path="direct"):
    return NonlocalOperatorSpec.build(kind, n, p, delta, radial_order, angular_order, path)


def _call_field(u, pts):
    vals = np.asarray(u(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("field is not finite at every quadrature node")
    return vals


def _contract(kind, c, vals):
    """Apply ``sum_i c_i (*) vals_i`` along axis 1 of ``vals``."""
    B, M = vals.shape[:2]
    if kind == "gradient":
        if vals.ndim != 2:
            raise ValueError("gradient requires a scalar field")
        return vals @ c
    if vals.ndim == 2 and c.shape[1] == 1:
        vals = vals[:, :, None]  # 1-D vector field given as scalar
    if vals.ndim != 3 or vals.shape[2] != c.shape[1]:
        raise ValueError(f"{kind} requires a vector field with {c.shape[1]} components")
    if kind == "divergence":
        return vals.reshape(B, -1) @ c.reshape(-1)
    cross = np.cross(c[None, :, :], vals)
    return cross.sum(axis=1)


def _evaluate_block(spec: NonlocalOperatorSpec, c, u, X):
    nodes = spec.rule.nodes
    B, n = X.shape
    M = len(nodes)
    if spec.path == "direct":
        pts = (X[:, None, :] + nodes[None, :, :]).reshape(-1, n)
        vals = _call_field(u, pts)
        vals = vals.reshape((B, M) + vals.shape[1:])
        centre = _call_field(u, X)
        vals = vals - centre[:, None, ...]
        return _contract(spec.kind, c, vals)
    pts = (X[:, None, :] - nodes[None, :, :]).reshape(-1, n)
    vals = _call_field(u, pts)
    vals = vals.reshape((B, M) + vals.shape[1:])
    return -_contract(spec.kind, c, vals)


def evaluate_points(spec: NonlocalOperatorSpec, u, x, threads: int = 1):
    """Evaluate the operator of ``spec`` on field ``u`` at point(s) ``x``.

    ``u`` maps an ``(K, n)`` array to ``(K,)`` (scalar) or ``(K, m)`` values.
    ``x`` is one point (length ``n``) or an ``(N, n)`` array.  Results for a
    given point do not depend on ``threads``.
    """
    n = spec.n
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    X = X.reshape(-1, n) if X.size else X.reshape(0, n)
    c = spec.node_weights
    block = max(1, _BLOCK_PAIRS // len(c))
    starts = range(0, len(X), block)
    if threads is None or threads <= 1 or len(X) <= block:
        parts = [_evaluate_block(spec, c, u, X[s : s + block]) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: _evaluate_block(spec, c, u, X[s : s + block]), starts))
    out = np.concatenate(parts, axis=0) if parts else np.zeros((0,))
    if single:
        out = out[0]
        return float(out) if np.ndim(out) == 0 else out
    return out


def _point_op(kind, u, x, spec):
    if spec.kind != kind:
        raise ValueError(f"spec is for the {spec.kind} operator, not {kind}")
    return evaluate_points(spec, u, x)


def nonlocal_divergence_at(u, x, spec: NonlocalOperatorSpec):
    return _point_op("divergence", u, x, spec)


def nonlocal_gradient_at(u, x, spec: NonlocalOperatorSpec):
    return _point_op("gradient", u, x, spec)


def nonlocal_curl_at(u, x, spec: NonlocalOperatorSpec):
    return _point_op("curl", u, x, spec)
