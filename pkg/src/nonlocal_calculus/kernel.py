"""Power-law influence function ``omega(x) = omega0 / |x|**p`` on the ball of radius delta."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UNIT_BALL_VOLUME",
    "Kernel",
    "KernelSingularityError",
    "kernel_new",
    "kernel_eval",
    "kernel_la_norm_exact",
    "second_moment_exact",
]

# Tabulated exactly; only n <= 3 is supported.
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


class KernelSingularityError(ValueError):
    """Raised when the kernel is evaluated at the origin."""


def _normalization(n: int, p: float, delta: float) -> float:
    return (n - p + 1.0) / (UNIT_BALL_VOLUME[n] * delta ** (n - p + 1.0))


@dataclass(frozen=True)
class Kernel:
    """Radial power-law kernel with second-moment normalization.

    ``omega0`` defaults to the value that makes
    ``int_{|x|<delta} x_j omega(x) x_j/|x| dx == 1`` for every ``j``.
    Passing ``omega0`` explicitly is allowed (used to probe linearity of
    moment identities) but bypasses the normalization.
    """

    n: int
    p: float
    delta: float
    omega0: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n not in UNIT_BALL_VOLUME:
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n!r}")
        if not (0.0 < self.p < self.n):
            raise ValueError(
                f"exponent p must satisfy 0 < p < n={self.n}, got p={self.p!r}"
            )
        if not (self.delta > 0.0) or not math.isfinite(self.delta):
            raise ValueError(f"horizon delta must be positive, got {self.delta!r}")
        if self.omega0 is None:
            object.__setattr__(
                self, "omega0", _normalization(self.n, self.p, self.delta)
            )
        elif not self.omega0 > 0.0:
            raise ValueError(f"omega0 must be positive, got {self.omega0!r}")

    @property
    def alpha_n(self) -> float:
        return UNIT_BALL_VOLUME[self.n]

    def __call__(self, x):
        return kernel_eval(self, x)

    def radial(self, r):
        """Kernel value as a function of ``|x|`` (array friendly, ``r > 0``)."""
        r = np.asarray(r, dtype=float)
        if np.any(r == 0.0):
            raise KernelSingularityError("kernel evaluated at the origin")
        return np.where(r < self.delta, self.omega0 * r ** (-self.p), 0.0)


def kernel_new(n: int, p: float, delta: float) -> Kernel:
    return Kernel(int(n), float(p), float(delta))


def kernel_eval(k: Kernel, x):
    """Evaluate ``omega`` at point(s) ``x``.

    ``x`` is a point of length ``n`` or an array of points of shape
    ``(..., n)``; a scalar is accepted when ``n == 1``.
    """
    x = np.asarray(x, dtype=float)
    if k.n == 1 and x.ndim == 0:
        x = x[None]
    if x.shape[-1] != k.n:
        raise ValueError(f"expected points with {k.n} coordinates, got shape {x.shape}")
    r = np.sqrt(np.sum(x * x, axis=-1))
    out = k.radial(r)
    return float(out) if out.ndim == 0 else out


def kernel_la_norm_exact(k: Kernel, a: float) -> float:
    """Closed-form ``||omega||_{L^a}`` over the ball of radius delta."""
    if a < 1.0:
        raise ValueError(f"exponent a must be >= 1, got {a!r}")
    if a * k.p >= k.n:
        raise ValueError(
            f"||omega||_L^a diverges for a >= n/p = {k.n / k.p:g} (a={a!r})"
        )
    n, p, d = k.n, k.p, k.delta
    power = k.omega0**a * n * k.alpha_n * d ** (n - a * p) / (n - a * p)
    return power ** (1.0 / a)


def second_moment_exact(k: Kernel) -> float:
    """Closed-form ``int x_j omega(x) e_j dx``; equals 1 for the default normalization."""
    n, p = k.n, k.p
    return k.omega0 * k.alpha_n * k.delta ** (n - p + 1.0) / (n - p + 1.0)
