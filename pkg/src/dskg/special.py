"""Gauss hypergeometric function for the light-cone kernel family.

The kernel needs ``F(1/2 - M, 1/2 - M; 1; z)`` for ``M >= 0`` and
``0 <= z < 1``.  Small arguments use the power series directly; arguments
above ``Z_SWITCH`` go through the ``z -> 1 - z`` connection formula, which
degenerates into its logarithmic form whenever ``c - a - b = 2M`` is an
integer (``M = 0`` in particular).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "HypParams",
    "gauss_2f1",
    "hyp_family",
    "log_gamma",
    "digamma",
]

Z_SWITCH = 0.75
# Within NEAR_INT of an integer the generic connection formula loses about
# eps/|2M - m| relative accuracy; values there are interpolated in M instead.
NEAR_INT = 1e-3
_INTERP_STEP = 2e-3
MAX_TERMS = 10_000

_EPS = 2.0**-54
_EULER_GAMMA = 0.57721566490153286061
# B_{2k} / (2k) for the asymptotic digamma series
_PSI_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


@dataclass(frozen=True)
class HypParams:
    """Parameters ``(a, b, c)`` of ``F(a, b; c; z)``."""

    a: float
    b: float
    c: float

    @classmethod
    def from_mass(cls, M):
        """The kernel family ``a = b = 1/2 - M``, ``c = 1``."""
        M = float(M)
        if not math.isfinite(M) or M < 0:
            raise DomainError(f"curved mass must be finite and >= 0, got {M!r}")
        return cls(0.5 - M, 0.5 - M, 1.0)

    @property
    def mass(self):
        """Curved mass when the parameters belong to the kernel family, else None."""
        if self.c == 1.0 and self.a == self.b and self.a <= 0.5:
            return 0.5 - self.a
        return None


def log_gamma(x):
    """Natural logarithm of the gamma function for ``x > 0``."""
    x = float(x)
    if not (x > 0) or not math.isfinite(x):
        raise DomainError(f"log_gamma needs a finite x > 0, got {x!r}")
    return math.lgamma(x)


def digamma(x):
    """Digamma function psi(x) for ``x > 0``.

    Upward recurrence to ``x >= 10`` followed by the asymptotic series.
    """
    x = float(x)
    if not (x > 0) or not math.isfinite(x):
        raise DomainError(f"digamma needs a finite x > 0, got {x!r}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    power = inv2
    for coeff in _PSI_ASYMP:
        tail += coeff * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - tail


def _rgamma(x):
    """1/Gamma(x) for real x, exactly zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    return 1.0 / math.gamma(x)


def _series(a, b, c, z):
    """Direct power series of F(a, b; c; z), elementwise over ``z``."""
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    slack = _EPS * (1.0 - np.abs(z))
    for k in range(MAX_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
        if not np.any(np.abs(term) > slack * np.abs(total)):
            return total
    raise NumericError(
        f"2F1 series did not converge in {MAX_TERMS} terms "
        f"(a={a}, b={b}, c={c})",
        estimate=total,
        error=np.abs(term),
    )


def _connection_generic(M, w):
    """Connection formula at ``w = 1 - z`` when ``2M`` is not an integer."""
    a = 0.5 - M
    ap = 0.5 + M
    s = 2.0 * M
    A1 = math.gamma(s) / math.gamma(ap) ** 2
    A2 = math.gamma(-s) * _rgamma(a) ** 2
    S1 = _series(a, a, 1.0 - s, w)
    S2 = _series(ap, ap, 1.0 + s, w)
    return A1 * S1 + A2 * np.power(w, s) * S2


def _connection_log(m, w):
    """Logarithmic connection formula for integer ``2M = m``."""
    w = np.asarray(w, dtype=float)
    M = 0.5 * m
    a = 0.5 - M
    ap = 0.5 + M
    lw = np.log(w)

    finite_part = np.zeros_like(w)
    if m > 0:
        acc = np.zeros_like(w)
        coeff = 1.0
        wn = np.ones_like(w)
        for n in range(m):
            acc += coeff * wn
            if n + 1 < m:
                coeff *= (a + n) ** 2 / ((n + 1.0) * (1.0 - m + n))
                wn = wn * w
        finite_part = math.gamma(m) / math.gamma(ap) ** 2 * acc

    pref = (-1.0) ** m * _rgamma(a) ** 2
    if pref == 0.0:
        return finite_part

    psi_n1 = -_EULER_GAMMA  # psi(n + 1)
    psi_nm1 = digamma(m + 1.0)  # psi(n + m + 1)
    psi_ap = digamma(ap)  # psi(ap + n)
    coeff = 1.0 / math.factorial(m)
    wn = np.ones_like(w)
    acc = np.zeros_like(w)
    for n in range(MAX_TERMS):
        term = coeff * wn * (lw - psi_n1 - psi_nm1 + 2.0 * psi_ap)
        acc += term
        if not np.any(np.abs(term) > _EPS * np.abs(acc)) and n > 0:
            break
        coeff *= (ap + n) ** 2 / ((n + 1.0) * (n + m + 1.0))
        psi_n1 += 1.0 / (n + 1.0)
        psi_nm1 += 1.0 / (n + m + 1.0)
        psi_ap += 1.0 / (ap + n)
        wn = wn * w
    else:
        raise NumericError("logarithmic connection series did not converge", estimate=acc)
    return finite_part - pref * np.power(w, m) * acc


def _connection_interp(m, eps, w):
    """Connection value at ``2M = m + eps`` for small nonzero ``eps``.

    F is analytic in M, but the generic formula cancels two poles there.
    Interpolate in ``eps`` through the exact logarithmic value at ``eps = 0``
    and generic values at ``eps = +-h, +-2h`` where the cancellation is mild.
    """
    h = _INTERP_STEP
    nodes = (-2.0 * h, -h, 0.0, h, 2.0 * h)
    out = np.zeros_like(np.asarray(w, dtype=float))
    for j, ej in enumerate(nodes):
        weight = 1.0
        for k, ek in enumerate(nodes):
            if k != j:
                weight *= (eps - ek) / (ej - ek)
        if ej == 0.0:
            values = _connection_log(m, w)
        else:
            values = _connection_generic(0.5 * (m + ej), w)
        out += weight * values
    return out


def _connection(M, w):
    """Connection formula at ``w = 1 - z``, chosen by the distance of 2M from an integer."""
    s = 2.0 * M
    m = int(round(s))
    eps = s - m
    if eps == 0.0:
        return _connection_log(m, w)
    if abs(eps) < NEAR_INT:
        return _connection_interp(m, eps, w)
    return _connection_generic(M, w)


def _terminates(a):
    return a <= 0 and abs(a - round(a)) < 1e-14


def hyp_family(M, z, w=None):
    """``F(1/2 - M, 1/2 - M; 1; z)`` elementwise over an array ``z``.

    ``w`` may carry ``1 - z`` computed without cancellation; the kernel knows
    it in closed form and the logarithmic branch benefits near ``z = 1``.
    """
    M = float(M)
    if not math.isfinite(M) or M < 0:
        raise DomainError(f"curved mass must be finite and >= 0, got {M!r}")
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0) or np.any(z >= 1):
        raise DomainError("2F1 argument must satisfy 0 <= z < 1")
    w = 1.0 - z if w is None else np.broadcast_to(np.asarray(w, dtype=float), z.shape)

    a = 0.5 - M
    if _terminates(a):
        return _series(a, a, 1.0, z)

    out = np.empty_like(z)
    low = z <= Z_SWITCH
    if np.any(low):
        out[low] = _series(a, a, 1.0, z[low])
    high = ~low
    if np.any(high):
        out[high] = _connection(M, w[high])
    return out


def gauss_2f1(params, zeta):
    """Evaluate ``F(a, b; c; zeta)`` for ``0 <= zeta < 1``.

    Parameters outside the kernel family ``a = b = 1/2 - M, c = 1`` are summed
    by the direct series only, which is valid but slow as ``zeta -> 1``.
    """
    zeta = float(zeta)
    if not math.isfinite(zeta) or zeta < 0 or zeta >= 1:
        raise DomainError(f"zeta must lie in [0, 1), got {zeta!r}")
    if not all(math.isfinite(v) for v in (params.a, params.b, params.c)):
        raise DomainError("hypergeometric parameters must be finite")
    M = params.mass
    if M is not None:
        return float(hyp_family(M, np.array([zeta]))[0])
    return float(_series(params.a, params.b, params.c, np.array([zeta]))[0])
