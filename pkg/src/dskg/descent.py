"""Spherical means and the dimensional descent operators.

For odd ``n`` the source enters the solution operator through

    d/dr (r^{-1} d/dr)^{(n-3)/2} [ r^{n-2} / (omega_{n-1} c0) * int_{S^{n-1}} f(x + r y) dS_y ]

and for even ``n`` through the analogous expression built on the weighted
ball integral ``int_{|y|<1} f(x + r y) / sqrt(1 - |y|^2) dV_y``.  With
``f = 1`` both collapse to 1, so the integral over the cone reproduces
``sinh(M (t - b)) / M`` in every dimension.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cone_kernel import horizon_radius, kernel_moment, kernel_moment_closed_form, kernel_values, CurvedMassCtx
from .errors import DomainError, NumericError
from .quadrature import adaptive_gl

CASES = ("i", "ii", "iii", "corollary_i", "corollary_ii", "corollary_iii")

_N_POLAR = 32
_N_AZIMUTH = 64
_MU, _MU_W = np.polynomial.legendre.leggauss(_N_POLAR)
_PHI = 2.0 * np.pi * np.arange(_N_AZIMUTH) / _N_AZIMUTH
# theta in [0, pi/2] for the ball integrals after |y| = sin(theta)
_TH_X, _TH_W = np.polynomial.legendre.leggauss(_N_POLAR)
_THETA = 0.25 * np.pi * (_TH_X + 1.0)
_THETA_W = 0.25 * np.pi * _TH_W

# 4th-order central difference for the first derivative
_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FD_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class DimensionConstants:
    """Sphere area, descent constant and ball volume for dimension ``n``."""

    n: int
    omega: float
    c0: float
    tau: float

    @classmethod
    def for_dimension(cls, n):
        n = int(n)
        if n < 1:
            raise DomainError(f"dimension must be >= 1, got {n}")
        omega = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
        tau = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        top = n - 2 if n % 2 else n - 1
        c0 = float(math.prod(range(1, top + 1, 2))) if top >= 1 else 1.0
        return cls(n, omega, c0, tau)

    @property
    def even_wave_factor(self):
        """Normalization ``1 / (2*4*...*n * tau_n)`` of the even-n wave mean."""
        return 1.0 / (math.prod(range(2, self.n + 1, 2)) * self.tau)


@dataclass(frozen=True)
class RadialProfile:
    """A radial function ``g(r)`` given as a callable or as exact powers.

    ``powers`` maps exponents to coefficients and enables exact
    differentiation; ``func`` must accept arrays, including negative ``r``
    near the origin, where it should continue ``g`` evenly.
    """

    func: object = None
    powers: dict = field(default_factory=dict)
    smoothness: int = 8

    def __post_init__(self):
        if self.func is None and not self.powers:
            object.__setattr__(self, "powers", {0: 0.0})

    @classmethod
    def constant(cls, value):
        return cls(powers={0: float(value)}, smoothness=1_000)

    @classmethod
    def polynomial(cls, coeffs):
        """Profile ``sum_k coeffs[k] r^k``."""
        return cls(powers={k: float(c) for k, c in enumerate(coeffs) if c != 0}, smoothness=1_000)

    @property
    def symbolic(self):
        return self.func is None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(r), dtype=float)
        out = np.zeros_like(r)
        for k, c in self.powers.items():
            out = out + c * r**k
        return out


def _apply_exact(powers, scale, shift, k):
    """``d/dr (r^{-1} d/dr)^k [scale * r^shift * g]`` on exact powers."""
    terms = {p + shift: scale * c for p, c in powers.items()}
    for _ in range(k):
        terms = {p - 2: p * c for p, c in terms.items() if p != 0 and c != 0}
    return {p - 1: p * c for p, c in terms.items() if p != 0 and c != 0}


def _fd_derivative(func, r):
    r = np.asarray(r, dtype=float)
    h = 1e-4 * (1.0 + np.abs(r))
    acc = np.zeros_like(r)
    for off, wt in zip(_FD_OFFSETS, _FD_WEIGHTS):
        acc = acc + wt * func(r + off * h)
    return acc / h


def _apply_numeric(profile, scale, shift, k, r):
    def base(s):
        return scale * s**shift * profile(s)

    inner = base
    for _ in range(k):
        prev = inner

        def inner(s, prev=prev):
            return _fd_derivative(prev, s) / s

    return _fd_derivative(inner, r)


def _descent(profile, r, scale, shift, k):
    r = np.asarray(r, dtype=float)
    if profile.symbolic:
        terms = _apply_exact(profile.powers, scale, shift, k)
        out = np.zeros_like(r)
        for p, c in terms.items():
            out = out + c * r**p
        return out
    return _apply_numeric(profile, scale, shift, k, r)


def _require_smoothness(profile, order):
    if profile.smoothness < order:
        raise DomainError(f"profile declares {profile.smoothness} derivatives, descent needs {order}")


def odd_descent(g, r, dims):
    """``d/dr (r^{-1} d/dr)^{(n-3)/2} [r^{n-2} g(r) / (omega_{n-1} c0)]`` for odd ``n >= 3``."""
    n = dims.n
    if n < 3 or n % 2 == 0:
        raise DomainError(f"odd descent needs odd n >= 3, got n={n}")
    _require_smoothness(g, (n - 1) // 2)
    out = _descent(g, r, 1.0 / (dims.omega * dims.c0), n - 2, (n - 3) // 2)
    return float(out) if np.ndim(out) == 0 else out


def even_descent(h, r, dims, printed=False):
    """Even-``n`` descent of a weighted ball integral ``h(r)``.

    By default the operator uses ``r^{n-1} h / (2*4*...*n * tau_n)``, the
    normalization under which ``f = 1`` descends to exactly 1 and the result
    is the mean solving the free wave equation.  ``printed=True`` selects
    ``2 r^{n-1} h / (omega_{n-1} c0)`` instead; at ``n = 2`` that is twice
    the former.
    """
    n = dims.n
    if n < 2 or n % 2:
        raise DomainError(f"even descent needs even n >= 2, got n={n}")
    _require_smoothness(h, n // 2)
    scale = 2.0 / (dims.omega * dims.c0) if printed else dims.even_wave_factor
    out = _descent(h, r, scale, n - 1, (n - 2) // 2)
    return float(out) if np.ndim(out) == 0 else out


def _sphere_points(n):
    """Unit-sphere nodes ``(m, n)`` and weights ``(m,)`` for n in 1..3."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        pts = np.stack([np.cos(_PHI), np.sin(_PHI)], axis=1)
        return pts, np.full(_N_AZIMUTH, 2.0 * np.pi / _N_AZIMUTH)
    if n == 3:
        mu = np.repeat(_MU, _N_AZIMUTH)
        phi = np.tile(_PHI, _N_POLAR)
        s = np.sqrt(1.0 - mu**2)
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), mu], axis=1)
        wts = np.repeat(_MU_W, _N_AZIMUTH) * (2.0 * np.pi / _N_AZIMUTH)
        return pts, wts
    raise NotImplementedError(f"sphere quadrature is implemented for n <= 3, got n={n}")


def spherical_mean(f, x, r, dims):
    """Unnormalized sphere integral ``int_{S^{n-1}} f(x + r y) dS_y``.

    ``f`` maps points of shape ``(..., n)`` to values of shape ``(...)``.
    ``r`` may be an array; negative radii give the reflected sphere, which is
    the same set of points.
    """
    pts, wts = _sphere_points(dims.n)
    x = np.asarray(x, dtype=float).reshape(dims.n)
    r_arr = np.asarray(r, dtype=float)
    where = x + r_arr[..., None, None] * pts
    vals = np.asarray(f(where), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite integrand on the sphere")
    out = vals @ wts
    return float(out) if r_arr.ndim == 0 else out


def ball_integral(f, x, r, dims):
    """``int_{|y|<1} f(x + r y) / sqrt(1 - |y|^2) dV_y`` via ``|y| = sin(theta)``."""
    pts, wts = _sphere_points(dims.n)
    x = np.asarray(x, dtype=float).reshape(dims.n)
    r_arr = np.asarray(r, dtype=float)
    radial = r_arr[..., None] * np.sin(_THETA)
    where = x + radial[..., None, None] * pts
    vals = np.asarray(f(where), dtype=float) @ wts
    out = vals @ (_THETA_W * np.sin(_THETA) ** (dims.n - 1))
    return float(out) if r_arr.ndim == 0 else out


def wave_mean(f, x, r, dims):
    """Free wave with data ``(f, 0)`` evaluated at ``(x, r)``, for n = 1 or 3."""
    if dims.n == 1:
        x = float(np.asarray(x).reshape(-1)[0])
        r = np.asarray(r, dtype=float)
        out = 0.5 * (f(np.asarray(x + r)[..., None]) + f(np.asarray(x - r)[..., None]))
        return float(out) if np.ndim(out) == 0 else out
    if dims.n == 3:
        omega = dims.omega
        out = _fd_derivative(lambda s: s * spherical_mean(f, x, s, dims) / omega, r)
        return float(out) if np.ndim(out) == 0 else out
    raise NotImplementedError(f"wave_mean supports n in (1, 3), got n={dims.n}")


def _ones(points):
    return np.ones(points.shape[:-1])


def _unit_profile(dims):
    """Sphere or ball integral of ``f = 1`` as a radial profile."""
    n = dims.n
    if n % 2:
        if n <= 3:
            return RadialProfile(func=lambda r: spherical_mean(_ones, np.zeros(n), r, dims))
        return RadialProfile.constant(dims.omega)
    if n == 2:
        return RadialProfile(func=lambda r: ball_integral(_ones, np.zeros(n), r, dims))
    # omega_{n-1} * int_0^1 rho^{n-1} / sqrt(1 - rho^2) d rho
    beta = math.gamma(n / 2) * math.gamma(0.5) / math.gamma(n / 2 + 0.5)
    return RadialProfile.constant(dims.omega * 0.5 * beta)


def identity_sides(case, M, b, t, dims=None, tol=1e-8):
    """Numerical cone integral and closed form for one identity case.

    Returns ``(numeric, closed)``.  The ``corollary_*`` cases use ``M = 0``.
    """
    if case not in CASES:
        raise DomainError(f"unknown identity case {case!r}")
    if case.startswith("corollary"):
        M = 0.0
    closed = kernel_moment_closed_form(M, b, t)
    base = case.split("_")[-1]
    if base == "i":
        return kernel_moment(CurvedMassCtx(M), b, t, tol=tol / 10), closed
    if dims is None:
        raise DomainError(f"case {case!r} needs a dimension")
    if base == "ii" and (dims.n < 3 or dims.n % 2 == 0):
        raise DomainError(f"case {case!r} needs odd n >= 3, got n={dims.n}")
    if base == "iii" and (dims.n < 2 or dims.n % 2):
        raise DomainError(f"case {case!r} needs even n >= 2, got n={dims.n}")
    profile = _unit_profile(dims)
    if base == "ii":
        def descent(r):
            return odd_descent(profile, r, dims)
    else:
        def descent(r):
            return even_descent(profile, r, dims)

    radius = horizon_radius(b, t)
    if radius == 0.0:
        return 0.0, closed
    res = adaptive_gl(lambda r: 2.0 * descent(r) * kernel_values(M, b, t, r), 0.0, radius, tol=tol / 10)
    return res.value, closed


def identity_check(case, M, b, t, dims=None, tol=1e-8):
    """Residual ``|numeric - closed|`` of a sinh (or linear) representation."""
    numeric, closed = identity_sides(case, M, b, t, dims, tol)
    return abs(numeric - closed)
