"""Shrinking light cone and the hypergeometric kernel of the solution operator.

A signal emitted at time ``b`` stays inside the ball of radius
``e^{-b} - e^{-t}`` at time ``t``.  Inside that cone the source-to-solution
map weighs the source with

    K(r; b, t) = (4 e^{-b-t})^{-M} ((e^{-b} + e^{-t})^2 - r^2)^{M - 1/2}
                 * F(1/2 - M, 1/2 - M; 1; ((e^{-b} - e^{-t})^2 - r^2)
                                         / ((e^{-b} + e^{-t})^2 - r^2))

and integrating ``K`` across the cone gives ``sinh(M (t - b)) / M``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .quadrature import adaptive_gl
from .special import hyp_family

DEFAULT_TOL = 1e-10
_SMALL_ARG = 1e-4


@dataclass(frozen=True)
class CurvedMassCtx:
    M: float

    def __post_init__(self):
        if not math.isfinite(self.M) or self.M < 0:
            raise DomainError(f"curved mass must be finite and >= 0, got {self.M!r}")


@dataclass(frozen=True)
class ConePoint:
    """Emission time ``b``, observation time ``t`` and offset ``r`` inside the cone."""

    b: float
    t: float
    r: float

    def __post_init__(self):
        radius = horizon_radius(self.b, self.t)
        if abs(self.r) > radius * (1 + 1e-15):
            raise DomainError(f"|r|={abs(self.r)!r} lies outside the cone radius {radius!r}")


def _check_times(b, t):
    if not (math.isfinite(b) and math.isfinite(t)):
        raise DomainError("cone times must be finite")
    if b < 0 or b > t:
        raise DomainError(f"need 0 <= b <= t, got b={b!r}, t={t!r}")


def horizon_radius(b, t):
    """Radius ``e^{-b} - e^{-t}`` reached at time ``t`` by a signal sent at ``b``."""
    b = float(b)
    t = float(t)
    _check_times(b, t)
    return -math.exp(-b) * math.expm1(-(t - b))


def kernel_values(M, b, t, r):
    """Vectorized kernel ``K(r; b, t)`` for offsets ``|r|`` inside the cone.

    ``b`` and ``r`` broadcast against each other; ``t`` is a scalar.
    """
    t = float(t)
    b = np.asarray(b, dtype=float)
    if not math.isfinite(t) or np.any(~np.isfinite(b)) or np.any(b < 0) or np.any(b > t):
        raise DomainError("need finite 0 <= b <= t for the kernel")
    r = np.abs(np.asarray(r, dtype=float))
    eb = np.exp(-b)
    et = math.exp(-t)
    inner = -eb * np.expm1(-(t - b))
    outer = eb + et
    if np.any(r > inner * (1 + 1e-15)):
        raise DomainError("kernel evaluated outside the light cone")
    r = np.minimum(r, inner)
    den = (outer - r) * (outer + r)
    z = (inner - r) * (inner + r) / den
    w = 4.0 * eb * et / den
    z, w = np.broadcast_arrays(z, w)
    return np.power(w, -M) / np.sqrt(den) * hyp_family(M, z, w)


def kernel_eval(ctx, pt):
    """Kernel value at one cone point; strictly positive and even in ``r``."""
    return float(kernel_values(ctx.M, pt.b, pt.t, np.array([pt.r]))[0])


def kernel_moment(ctx, b, t, tol=DEFAULT_TOL):
    """Integral of the kernel across the cone, by adaptive Gauss-Legendre."""
    radius = horizon_radius(b, t)
    if radius == 0.0:
        return 0.0
    res = adaptive_gl(lambda z: kernel_values(ctx.M, b, t, z), -radius, radius, tol=tol)
    if not math.isfinite(res.value):
        raise NumericError("kernel moment is not finite", estimate=res.value, error=res.error)
    return res.value


def kernel_moment_closed_form(M, b, t):
    """``sinh(M (t - b)) / M``, continued to ``t - b`` at ``M = 0``.

    Accepts arrays for ``b``; a short series takes over once
    ``|M (t - b)| < 1e-4``.
    """
    M = float(M)
    if not math.isfinite(M) or M < 0:
        raise DomainError(f"curved mass must be finite and >= 0, got {M!r}")
    span = np.asarray(t, dtype=float) - np.asarray(b, dtype=float)
    if np.any(span < 0):
        raise DomainError("closed form needs b <= t")
    x = M * span
    small = np.abs(x) < _SMALL_ARG
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(small, 0.0, np.sinh(x) / np.where(M == 0.0, 1.0, M))
    x2 = x * x
    series = span * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0))
    out = np.where(small, series, big)
    return float(out) if out.ndim == 0 else out
