"""Quadrature evaluation of the source-to-solution operator G.

``u = G[f]`` solves ``u_tt - e^{-2t} Lap u - M^2 u = f`` with zero Cauchy data.
In one dimension

    G[f](x, t) = int_0^t db int_{|x-y| < e^{-b} - e^{-t}} f(y, b) K(|x - y|; b, t) dy,

and for radial sources in three dimensions the sphere integral descends to a
one-dimensional profile of the radius.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .cone_kernel import kernel_moment_closed_form, kernel_values
from .descent import _fd_derivative
from .errors import DomainError
from .quadrature import adaptive_gl, batched_gl

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class SourceField:
    """A source ``f(x, b)`` vanishing for ``|x| > support``.

    ``func(x, b)`` broadcasts over array arguments.  For radial fields ``x``
    is the distance to the origin.
    """

    func: object
    support: float = math.inf
    radial: bool = False

    def __call__(self, x, b):
        x = np.asarray(x, dtype=float)
        vals = np.asarray(self.func(x, b), dtype=float)
        if math.isfinite(self.support):
            vals = np.where(np.abs(x) <= self.support, vals, 0.0)
        return vals

    @classmethod
    def from_grid(cls, x, times, values, support=None):
        """Interpolate samples ``values[i, k] = f(x[i], times[k])``.

        Cubic in space, linear in time, zero outside the sampled window.
        """
        x = np.asarray(x, dtype=float)
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(times) == 1:
            times = np.array([times[0], times[0] + 1.0])
            values = np.repeat(values.reshape(-1, 1), 2, axis=1)
        spline = RectBivariateSpline(x, times, values, kx=3, ky=1, s=0)
        lo, hi = x[0], x[-1]
        t_lo, t_hi = times[0], times[-1]

        def func(y, b):
            y, b = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(b, dtype=float))
            inside = (y >= lo) & (y <= hi)
            vals = spline.ev(np.clip(y, lo, hi), np.clip(b, t_lo, t_hi))
            return np.where(inside, vals, 0.0)

        if support is None:
            nz = np.nonzero(np.any(values != 0.0, axis=1))[0]
            support = float(np.max(np.abs(x[nz]))) + (x[1] - x[0]) if len(nz) else 0.0
        return cls(func, support=support)


def _cone_crossings(t, distances):
    """Emission times at which the cone radius equals each distance."""
    out = []
    et = math.exp(-t)
    for d in distances:
        if d > 0 and math.isfinite(d):
            b = -math.log(et + d)
            if 0.0 < b < t:
                out.append(b)
    return sorted(out)


def _piecewise(func, edges, tol):
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += adaptive_gl(func, lo, hi, tol=tol / max(1, len(edges) - 1)).value
    return total


def apply_G_1d(f, x, t, M, tol=DEFAULT_TOL):
    """``G[f](x, t)`` in one space dimension."""
    x = float(x)
    t = float(t)
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t!r}")
    if M < 0:
        raise DomainError(f"curved mass must be >= 0, got {M!r}")
    if t == 0.0:
        return 0.0
    Rf = f.support
    if math.isfinite(Rf) and abs(x) - Rf >= 1.0 - math.exp(-t):
        return 0.0
    inner_tol = tol / (10.0 * max(1.0, t))
    et = math.exp(-t)

    def slab(bs):
        bs = np.asarray(bs, dtype=float)
        radius = np.exp(-bs) - et
        lo = np.maximum(-radius, -Rf - x)
        hi = np.minimum(radius, Rf - x)
        out = np.zeros_like(bs)
        live = hi > lo
        if not np.any(live):
            return out
        b_live = bs[live][:, None]

        def integrand(z):
            return f(x + z, b_live) * kernel_values(M, b_live, t, z)

        vals, _ = batched_gl(integrand, np.stack([lo[live], hi[live]], axis=1), tol=inner_tol)
        out[live] = vals
        return out

    edges = [0.0] + _cone_crossings(t, [abs(x - Rf), abs(x + Rf)]) + [t]
    return _piecewise(slab, edges, tol)


def apply_G_1d_many(f, xs, t, M, tol=DEFAULT_TOL):
    return np.array([apply_G_1d(f, x, t, M, tol) for x in np.asarray(xs, dtype=float)])


def radial_wave_mean(f, rho, r, b):
    """Free 3-D wave with radial data ``f(., b)`` at radius ``rho`` and time ``r``."""
    r = np.asarray(r, dtype=float)
    if rho == 0.0:
        return _fd_derivative(lambda s: s * f(np.abs(s), b), r)
    return ((rho + r) * f(rho + r, b) + (rho - r) * f(np.abs(rho - r), b)) / (2.0 * rho)


def apply_G_radial_3d(f, rho, t, M, tol=DEFAULT_TOL):
    """``G[f]`` at radius ``rho`` for a radial source in three dimensions."""
    if not f.radial:
        raise DomainError("apply_G_radial_3d needs a radial SourceField")
    rho = abs(float(rho))
    t = float(t)
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t!r}")
    if t == 0.0:
        return 0.0
    Rf = f.support
    if math.isfinite(Rf) and rho - Rf >= 1.0 - math.exp(-t):
        return 0.0
    inner_tol = tol / (10.0 * max(1.0, t))
    et = math.exp(-t)
    kinks = np.array([Rf - rho, rho - Rf, rho + Rf]) if math.isfinite(Rf) else np.array([])

    def slab(bs):
        bs = np.asarray(bs, dtype=float)
        radius = np.exp(-bs) - et
        inner = np.clip(kinks[None, :], 0.0, radius[:, None]) if kinks.size else np.empty((len(bs), 0))
        breaks = np.sort(np.concatenate([np.zeros((len(bs), 1)), inner, radius[:, None]], axis=1), axis=1)
        b_col = bs[:, None]

        def integrand(r):
            return 2.0 * radial_wave_mean(f, rho, r, b_col) * kernel_values(M, b_col, t, r)

        vals, _ = batched_gl(integrand, breaks, tol=inner_tol)
        return vals

    dists = [abs(Rf - rho), rho + Rf] if math.isfinite(Rf) else []
    edges = [0.0] + _cone_crossings(t, dists) + [t]
    return _piecewise(slab, edges, tol)


def moment_of_G(q, t, M, tol=1e-10):
    """Spatial integral of ``G[f](., t)`` given ``q(b) = int f(x, b) dx``.

    Equals ``int_0^t q(b) sinh(M (t - b)) / M db`` (``(t - b)`` when ``M = 0``).
    ``q`` may be a vectorized callable or a constant.
    """
    t = float(t)
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t!r}")
    if callable(q):
        weight = q
    else:
        const = float(q)

        def weight(b):
            return np.full_like(np.asarray(b, dtype=float), const)

    if t == 0.0:
        return 0.0
    return adaptive_gl(lambda b: weight(b) * kernel_moment_closed_form(M, b, t), 0.0, t, tol=tol).value
