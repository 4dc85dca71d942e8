"""Analytic test fields with closed-form partial derivatives through order 3.

All fields are evaluated on arrays of points of shape ``(N, n)``.  Scalar
fields return ``(N,)`` arrays, vector fields ``(N, m)``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .grid import normalize_box

__all__ = [
    "AnalyticField",
    "PolynomialField",
    "RadialField",
    "TrigField",
    "ProductField",
    "GaussianProfile",
    "BumpProfile",
    "BUILTIN_FIELDS",
    "SOBOLEV_CONVENTION",
    "builtin_field",
    "multi_indices",
    "local_divergence",
    "local_gradient",
    "local_curl",
    "local_operator",
    "sobolev_norm",
    "sobolev_norms",
]

SOBOLEV_CONVENTION = (
    "lq-sum: ||u||_{W^{k,q}} = (sum over components c and multi-indices |alpha|<=k "
    "of ||d^alpha u_c||_{L^q}^q)^(1/q); q=inf takes the max"
)


def multi_indices(n: int, max_order: int, min_order: int = 0):
    """All multi-indices of length ``n`` with ``min_order <= |alpha| <= max_order``."""
    out = []
    for order in range(min_order, max_order + 1):
        for combo in itertools.combinations_with_replacement(range(n), order):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return out


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if n == 1 and x.ndim == 0:
        return x.reshape(1, 1), True
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != n:
        raise ValueError(f"expected points with {n} coordinates, got shape {x.shape}")
    return x.reshape(-1, n), single


class AnalyticField:
    """Base class: subclasses implement ``_partial(alpha, X) -> (N, m)``."""

    name = "field"

    def __init__(self, n: int, components: int = 1, support_box=None, compact=False):
        self.n = int(n)
        self.components = int(components)
        self.support_box = None if support_box is None else normalize_box(support_box, self.n)
        self.compact = compact

    @property
    def is_scalar(self) -> bool:
        return self.components == 1

    def _partial(self, alpha, X):
        raise NotImplementedError

    def _shape_out(self, vals, single):
        if self.is_scalar:
            vals = vals[:, 0]
        return vals[0] if single else vals

    def __call__(self, x):
        X, single = _as_points(x, self.n)
        return self._shape_out(self._partial((0,) * self.n, X), single)

    eval = __call__

    def partial(self, alpha, x):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n or any(a < 0 for a in alpha):
            raise ValueError(f"multi-index {alpha} invalid for dimension {self.n}")
        if sum(alpha) > 3:
            raise ValueError("partials are available through order 3 only")
        X, single = _as_points(x, self.n)
        return self._shape_out(self._partial(alpha, X), single)

    def jacobian(self, x):
        """``J[..., c, i] = d u_c / d x_i``."""
        X, single = _as_points(x, self.n)
        cols = [self._partial(tuple(int(i == j) for j in range(self.n)), X) for i in range(self.n)]
        J = np.stack(cols, axis=-1)
        return J[0] if single else J

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} n={self.n} m={self.components}>"


class PolynomialField(AnalyticField):
    """Polynomial field given as one ``{alpha: coefficient}`` dict per component."""

    name = "polynomial"

    def __init__(self, n, terms, name=None, support_box=None):
        if isinstance(terms, dict):
            terms = [terms]
        super().__init__(n, len(terms), support_box)
        self.terms = [
            {tuple(int(a) for a in k): float(v) for k, v in comp.items() if v != 0.0}
            for comp in terms
        ]
        for comp in self.terms:
            for k in comp:
                if len(k) != self.n:
                    raise ValueError(f"monomial exponent {k} does not match n={self.n}")
        if name is not None:
            self.name = name

    @property
    def degree(self) -> int:
        return max((sum(k) for comp in self.terms for k in comp), default=0)

    def _partial(self, alpha, X):
        out = np.zeros((len(X), self.components))
        for c, comp in enumerate(self.terms):
            for expo, coef in comp.items():
                if any(e < a for e, a in zip(expo, alpha)):
                    continue
                factor = coef
                mono = np.ones(len(X))
                for i, (e, a) in enumerate(zip(expo, alpha)):
                    factor *= math.perm(e, a)
                    if e - a:
                        mono = mono * X[:, i] ** (e - a)
                out[:, c] += factor * mono
        return out


class GaussianProfile:
    """``g(rho) = exp(-rho / width**2)``, ``rho = |x - c|**2``."""

    def __init__(self, width=1.0):
        self.width = float(width)

    def derivatives(self, rho):
        s = -1.0 / self.width**2
        g = np.exp(s * rho)
        return g, s * g, s * s * g, s**3 * g


class BumpProfile:
    """Scaled standard mollifier ``g(rho) = exp(-R^2 / (R^2 - rho))`` for ``rho < R^2``."""

    def __init__(self, radius=1.0):
        self.radius = float(radius)

    def derivatives(self, rho):
        R2 = self.radius**2
        inside = rho < R2
        w = np.zeros_like(rho)
        w[inside] = 1.0 / (R2 - rho[inside])
        g = np.zeros_like(rho)
        g[inside] = np.exp(-R2 * w[inside])
        g1 = -R2 * w**2 * g
        g2 = (-2.0 * R2 * w**3 + R2**2 * w**4) * g
        g3 = (-6.0 * R2 * w**4 + 6.0 * R2**2 * w**5 - R2**3 * w**6) * g
        return g, g1, g2, g3


class RadialField(AnalyticField):
    """``u_c(x) = a_c * g(|x - c_c|**2)`` with one center per component."""

    def __init__(self, n, profile, centers, amplitudes=None, name="radial", support_box=None, compact=False):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if centers.shape[1] != n:
            raise ValueError(f"centers must have {n} coordinates")
        super().__init__(n, len(centers), support_box, compact)
        self.profile = profile
        self.centers = centers
        self.amplitudes = (
            np.ones(len(centers)) if amplitudes is None else np.asarray(amplitudes, dtype=float)
        )
        self.name = name

    def _partial(self, alpha, X):
        idx = [i for i, a in enumerate(alpha) for _ in range(a)]
        out = np.empty((len(X), self.components))
        for c, (center, amp) in enumerate(zip(self.centers, self.amplitudes)):
            z = X - center
            rho = np.sum(z * z, axis=1)
            g = self.profile.derivatives(rho)
            if len(idx) == 0:
                val = g[0]
            elif len(idx) == 1:
                (i,) = idx
                val = 2.0 * z[:, i] * g[1]
            elif len(idx) == 2:
                i, j = idx
                val = 4.0 * z[:, i] * z[:, j] * g[2] + 2.0 * (i == j) * g[1]
            else:
                i, j, k = idx
                val = 8.0 * z[:, i] * z[:, j] * z[:, k] * g[3] + 4.0 * g[2] * (
                    (i == j) * z[:, k] + (i == k) * z[:, j] + (j == k) * z[:, i]
                )
            out[:, c] = amp * val
        return out


class TrigField(AnalyticField):
    """``u_c(x) = sin(k_c . x + phase_c)``."""

    name = "trig"

    def __init__(self, n, wavevectors, phases):
        wavevectors = np.atleast_2d(np.asarray(wavevectors, dtype=float))
        super().__init__(n, len(wavevectors))
        self.wavevectors = wavevectors
        self.phases = np.broadcast_to(np.asarray(phases, dtype=float), (len(wavevectors),))

    def _partial(self, alpha, X):
        order = sum(alpha)
        out = np.empty((len(X), self.components))
        for c, (k, ph) in enumerate(zip(self.wavevectors, self.phases)):
            factor = np.prod(k ** np.array(alpha, dtype=float))
            out[:, c] = factor * np.sin(X @ k + ph + order * np.pi / 2)
        return out


class ProductField(AnalyticField):
    """Componentwise product of a field with a scalar window (Leibniz rule)."""

    def __init__(self, base: AnalyticField, window: AnalyticField, name="product"):
        if window.components != 1 or base.n != window.n:
            raise ValueError("window must be a scalar field of the same dimension")
        box = window.support_box if window.support_box is not None else base.support_box
        super().__init__(base.n, base.components, None, window.compact or base.compact)
        self.support_box = box
        self.base = base
        self.window = window
        self.name = name

    def _partial(self, alpha, X):
        out = np.zeros((len(X), self.components))
        for beta in itertools.product(*(range(a + 1) for a in alpha)):
            rest = tuple(a - b for a, b in zip(alpha, beta))
            coef = math.prod(math.comb(a, b) for a, b in zip(alpha, beta))
            out += coef * self.base._partial(beta, X) * self.window._partial(rest, X)
        return out


# --- builtin fields ------------------------------------------------------------

_CENTER_DIRECTION = np.array([1.0, -0.5, 0.25])


def _default_centers(n, components, spread):
    if components == 1:
        return np.zeros((1, n))
    k = np.arange(components) - (components - 1) / 2.0
    return spread * k[:, None] * _CENTER_DIRECTION[:n][None, :]


def _bounding_box(centers, half_width):
    lo = centers.min(axis=0) - half_width
    hi = centers.max(axis=0) + half_width
    return np.column_stack([lo, hi])


def _constant(n, components, c=1.0):
    c = np.broadcast_to(np.asarray(c, dtype=float), (components,))
    return PolynomialField(n, [{(0,) * n: v} for v in c], name="constant")


def _linear(n, components, A=None, b=None):
    if A is None:
        A = np.eye(n) if components == n else np.ones((1, n))
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, n)
    if A.shape[1] != n:
        raise ValueError(f"linear coefficients must have {n} columns, got shape {A.shape}")
    b = np.zeros(len(A)) if b is None else np.broadcast_to(np.asarray(b, dtype=float), (len(A),))
    eye = np.eye(n, dtype=int)
    terms = []
    for row, off in zip(A, b):
        comp = {(0,) * n: off}
        comp.update({tuple(eye[i]): row[i] for i in range(n)})
        terms.append(comp)
    return PolynomialField(n, terms, name="linear")


def _quadratic(n, components, Q=None, A=None, b=None):
    """``u_c = x^T Q_c x + A_c x + b_c``."""
    if Q is None:
        Q = np.eye(n)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q.reshape(-1, n, n)
    if Q.ndim == 2:
        Q = Q[None]
    m = len(Q)
    A = np.zeros((m, n)) if A is None else np.asarray(A, dtype=float).reshape(m, n)
    b = np.zeros(m) if b is None else np.broadcast_to(np.asarray(b, dtype=float), (m,))
    terms = []
    for Qc, Ac, bc in zip(Q, A, b):
        comp: dict = {}
        for i in range(n):
            for j in range(n):
                key = [0] * n
                key[i] += 1
                key[j] += 1
                comp[tuple(key)] = comp.get(tuple(key), 0.0) + Qc[i, j]
            key = [0] * n
            key[i] = 1
            comp[tuple(key)] = comp.get(tuple(key), 0.0) + Ac[i]
        comp[(0,) * n] = bc
        terms.append(comp)
    return PolynomialField(n, terms, name="quadratic")


def _gaussian(n, components, width=1.0, centers=None, spread=0.2):
    centers = _default_centers(n, components, spread) if centers is None else centers
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    # derivatives of order <= 3 stay below 1e-14 beyond 7 widths
    box = _bounding_box(centers, 7.0 * width)
    return RadialField(n, GaussianProfile(width), centers, name="gaussian", support_box=box)


def _bump(n, components, radius=10.0, centers=None, spread=0.2, margin=1.0):
    centers = _default_centers(n, components, spread) if centers is None else centers
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    box = _bounding_box(centers, radius + margin)
    return RadialField(
        n, BumpProfile(radius), centers, name="bump", support_box=box, compact=True
    )


def _trig_bump(n, components, wavevector=None, phase=None, radius=2.0, margin=1.0):
    if wavevector is None:
        base = np.array([1.3, 0.7, 0.9])[:n]
        wavevector = [base * (1.0 + 0.25 * c) for c in range(components)]
    if phase is None:
        phase = 0.3 + 0.5 * np.arange(components)
    trig = TrigField(n, wavevector, phase)
    window = _bump(n, 1, radius=radius, margin=margin)
    return ProductField(trig, window, name="trig-bump")


BUILTIN_FIELDS = {
    "constant": _constant,
    "linear": _linear,
    "quadratic": _quadratic,
    "gaussian": _gaussian,
    "bump": _bump,
    "trig-bump": _trig_bump,
}


def builtin_field(name: str, n: int, components: int | None = None, **params) -> AnalyticField:
    """Construct a named test field.

    ``components`` defaults to 1 (scalar); pass ``n`` for a vector field.
    For ``linear`` and ``quadratic`` the component count follows from the
    coefficient arrays when they are given.
    """
    if name not in BUILTIN_FIELDS:
        raise ValueError(f"unknown field {name!r}; choose from {sorted(BUILTIN_FIELDS)}")
    if n not in (1, 2, 3):
        raise ValueError(f"dimension n must be 1, 2 or 3, got {n!r}")
    if components is None:
        components = 1
        if name == "linear" and params.get("A") is not None:
            components = np.asarray(params["A"]).size // n
        elif name == "quadratic" and params.get("Q") is not None:
            components = max(1, np.asarray(params["Q"]).size // (n * n))
    field = BUILTIN_FIELDS[name](n, components, **params)
    if field.components != components:
        raise ValueError(
            f"{name} field has {field.components} components, expected {components}"
        )
    return field


# --- local operators --------------------------------------------------------------


def local_gradient(f: AnalyticField, x):
    if not f.is_scalar:
        raise ValueError("gradient requires a scalar field")
    J = f.jacobian(x)
    return J[..., 0, :]


def local_divergence(f: AnalyticField, x):
    if f.components != f.n:
        raise ValueError("divergence requires a vector field with n components")
    J = f.jacobian(x)
    return np.trace(J, axis1=-2, axis2=-1)


def local_curl(f: AnalyticField, x):
    if f.n != 3 or f.components != 3:
        raise ValueError("curl requires a 3-component vector field in 3-D")
    J = f.jacobian(x)
    return np.stack(
        [
            J[..., 2, 1] - J[..., 1, 2],
            J[..., 0, 2] - J[..., 2, 0],
            J[..., 1, 0] - J[..., 0, 1],
        ],
        axis=-1,
    )


def local_operator(kind: str, f: AnalyticField, x):
    return {"divergence": local_divergence, "gradient": local_gradient, "curl": local_curl}[kind](f, x)


# --- Sobolev norms ----------------------------------------------------------------

DEFAULT_NORM_RESOLUTION = {1: 4001, 2: 401, 3: 121}
_CHUNK = 1 << 16


def sobolev_norms(f: AnalyticField, qs, order: int = 3, box=None, resolution=None) -> dict:
    """``W^{order,q}`` norms for several ``q`` from one pass over a vertex grid.

    Integrals are Riemann sums ``h^n * sum |g|^q`` over the grid on ``box``
    (default ``f.support_box``); ``q = inf`` is the grid maximum.  The
    convention is :data:`SOBOLEV_CONVENTION`.
    """
    qs = [float(q) for q in qs]
    if any(q < 1.0 for q in qs):
        raise ValueError("Sobolev exponent q must be >= 1")
    if box is None:
        if f.support_box is None:
            raise ValueError(f"field {f.name!r} has no support box; pass box=")
        lo, hi = f.support_box
    else:
        lo, hi = normalize_box(box, f.n)
    if resolution is None:
        resolution = DEFAULT_NORM_RESOLUTION[f.n]
    res = (int(resolution),) * f.n if np.isscalar(resolution) else tuple(resolution)
    axes = [np.linspace(a, b, r) for a, b, r in zip(lo, hi, res)]
    cell = float(np.prod([(b - a) / (r - 1) for a, b, r in zip(lo, hi, res)]))
    alphas = multi_indices(f.n, order)
    finite = [q for q in qs if math.isfinite(q)]
    sums = np.zeros(len(finite))
    peak = 0.0
    total = int(np.prod(res))
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, res)
        X = np.column_stack([axes[i][idx[i]] for i in range(f.n)])
        for alpha in alphas:
            g = np.abs(f._partial(alpha, X))
            peak = max(peak, float(g.max()))
            for i, q in enumerate(finite):
                sums[i] += float(np.sum(g**q))
    out = {}
    for q in qs:
        if math.isfinite(q):
            out[q] = float((sums[finite.index(q)] * cell) ** (1.0 / q))
        else:
            out[q] = peak
    return out


def sobolev_norm(f: AnalyticField, q, order: int = 3, box=None, resolution=None) -> float:
    return sobolev_norms(f, [q], order, box, resolution)[float(q)]
