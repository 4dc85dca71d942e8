"""Product quadrature over the ball ``|x| < delta`` for ``|x|**-p``-weighted integrands.

Radial direction: substitute ``r = delta * t**k`` with ``k`` the smallest
integer making ``k*p`` integral (``k = 1`` if there is none below
``MAX_RADIAL_POWER``), then apply Gauss-Jacobi in ``t`` with the weight
``t**(k*(n-p)-1)``.  That weight is exactly ``r**(n-1-p) dr`` up to a
constant, so ``omega * f`` is integrated exactly whenever ``f`` is a
polynomial of degree ``<= (2m-1)/k`` in ``r``, and -- when ``k*p`` is an
integer -- so are plain Lebesgue integrands of radial degree
``<= (2m-1-k*p)/k``.  No node sits at the origin.

Angular direction: ``{-1, +1}`` in 1-D, equispaced angles in 2-D and a
Gauss-Legendre (cos theta) x equispaced azimuth product in 3-D.  Every
angular rule is invariant under ``x -> -x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .kernel import UNIT_BALL_VOLUME, Kernel

__all__ = [
    "DEFAULT_RADIAL_ORDER",
    "DEFAULT_ANGULAR_ORDER",
    "BallQuadratureRule",
    "build_rule",
    "integrate_ball",
    "moment_check",
    "la_norm_numeric",
    "ball_volume",
    "radial_power",
]

DEFAULT_RADIAL_ORDER = 8
DEFAULT_ANGULAR_ORDER = {1: 1, 2: 32, 3: 12}
MAX_RADIAL_POWER = 12


def radial_power(p: float, max_power: int = MAX_RADIAL_POWER) -> int:
    """Smallest ``k <= max_power`` with ``k*p`` an integer, else 1."""
    for k in range(1, max_power + 1):
        if abs(k * p - round(k * p)) <= 1e-12 * max(1.0, k * p):
            return k
    return 1


def _angular_rule(n: int, s: int):
    """Unit directions and their surface weights (summing to ``n * alpha_n``)."""
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if n == 2:
        if s < 2 or s % 2:
            raise ValueError(f"2-D angular order must be an even integer >= 2, got {s}")
        theta = 2.0 * np.pi * (np.arange(s) + 0.5) / s
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        return dirs, np.full(s, 2.0 * np.pi / s)
    # n == 3
    z, wz = np.polynomial.legendre.leggauss(s)
    n_phi = 2 * s
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    sin_t = np.sqrt(1.0 - zz**2)
    dirs = np.stack([sin_t * np.cos(pp), sin_t * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = np.repeat(wz, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, weights


def _radial_rule(n: int, p: float, delta: float, m: int):
    """Radii and Lebesgue weights for ``int_0^delta r**(n-1) g(r) dr``."""
    k = radial_power(p)
    beta = k * (n - p) - 1.0
    x, w = roots_jacobi(m, 0.0, beta)
    t = 0.5 * (1.0 + x)
    r = delta * t**k
    # int_0^delta r^(n-1) g dr = k delta^n int_0^1 t^beta t^(k p) g dt
    w_t = w * 0.5 ** (beta + 1.0)
    return r, k * delta**n * w_t * t ** (k * p), k


@dataclass(frozen=True)
class BallQuadratureRule:
    """Nodes and Lebesgue weights on ``{0 < |x| < delta}``.

    ``nodes`` has shape ``(N, n)``; the radius and unit direction of every node
    are kept alongside so integrands never recompute them.
    """

    n: int
    p: float
    delta: float
    radial_order: int
    angular_order: int
    nodes: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    directions: np.ndarray
    radial_power: int

    @property
    def kernel_params(self):
        return (self.n, self.p, self.delta)

    def __len__(self):
        return len(self.weights)

    def kernel_weights(self, kernel: Kernel) -> np.ndarray:
        """``weights * omega(node)`` for a kernel matching this rule."""
        if (kernel.n, kernel.delta) != (self.n, self.delta):
            raise ValueError("kernel and rule were built for different (n, delta)")
        return self.weights * kernel.radial(self.radii)


def build_rule(
    n: int,
    p: float,
    delta: float,
    radial_order: int = DEFAULT_RADIAL_ORDER,
    angular_order: int | None = None,
) -> BallQuadratureRule:
    if n not in UNIT_BALL_VOLUME:
        raise ValueError(f"dimension n must be 1, 2 or 3, got {n!r}")
    if not 0.0 < p < n:
        raise ValueError(f"exponent p must satisfy 0 < p < n={n}, got {p!r}")
    if not delta > 0.0:
        raise ValueError(f"horizon delta must be positive, got {delta!r}")
    if angular_order is None:
        angular_order = DEFAULT_ANGULAR_ORDER[n]
    if radial_order < 1 or angular_order < 1:
        raise ValueError("quadrature orders must be >= 1")

    r, wr, k = _radial_rule(n, float(p), float(delta), int(radial_order))
    dirs, wa = _angular_rule(n, int(angular_order))
    # radial-major ordering: node (i, j) = r_i * dir_j
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    weights = np.outer(wr, wa).ravel()
    radii = np.repeat(r, len(wa))
    directions = np.tile(dirs, (len(r), 1))
    return BallQuadratureRule(
        n=n,
        p=float(p),
        delta=float(delta),
        radial_order=int(radial_order),
        angular_order=int(angular_order),
        nodes=nodes,
        weights=weights,
        radii=radii,
        directions=directions,
        radial_power=k,
    )


def integrate_ball(rule: BallQuadratureRule, f) -> float:
    """``sum_i w_i f(x_i)``.

    ``f`` is called once with the ``(N, n)`` node array and must return ``N``
    values.  Non-finite values raise ``FloatingPointError``.
    """
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.weights.shape:
        raise ValueError(
            f"integrand returned shape {vals.shape}, expected {rule.weights.shape}"
        )
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand is not finite at every quadrature node")
    return float(rule.weights @ vals)


def moment_check(rule: BallQuadratureRule, kernel: Kernel, alpha, j: int) -> float:
    """Numeric ``int x**alpha omega(x) e_j dx`` with ``e = x/|x|`` and 1-based ``j``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != rule.n or any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} does not match dimension {rule.n}")
    if sum(alpha) > 3:
        raise ValueError("moment_check supports |alpha| <= 3")
    if not 1 <= j <= rule.n:
        raise ValueError(f"component j must be in 1..{rule.n}, got {j}")
    mono = np.prod(rule.nodes ** np.array(alpha, dtype=float), axis=1)
    vals = mono * rule.directions[:, j - 1]
    return float(rule.kernel_weights(kernel) @ vals)


def la_norm_numeric(kernel: Kernel, a: float, radial_order: int = DEFAULT_RADIAL_ORDER) -> float:
    """``||omega||_{L^a}`` by quadrature.

    ``omega**a`` is itself a power law ``|x|**(-a*p)``, so the rule is built
    for that exponent; the angular part is trivial (radial integrand).
    """
    if a * kernel.p >= kernel.n:
        raise ValueError(f"||omega||_L^a diverges for a >= n/p (a={a!r})")
    rule = build_rule(kernel.n, a * kernel.p, kernel.delta, radial_order, 4 if kernel.n > 1 else 1)
    vals = kernel.radial(rule.radii) ** a
    return float(rule.weights @ vals) ** (1.0 / a)


def ball_volume(n: int, delta: float) -> float:
    return UNIT_BALL_VOLUME[n] * delta**n

