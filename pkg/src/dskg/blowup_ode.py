"""Moment ODE layer: comparison integration and blow-up certificates.

The spatial integral ``F(t) = int u dx`` of a solution with bounded support
obeys ``F'' >= M^2 F + delta0 * Gamma(t) * F^q`` with ``q = p (beta + 1)``.
This module integrates the equality form of that comparison system and turns
the two Kato-type lemmas into checkable certificates.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .quadrature import adaptive_gl

F_CAP = 1e12
RUNAWAY_RATIO = 1e6
FIT_WINDOW = 20
PROBE_RATIO = 1.2
PROBE_CAP = 1e3

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"
CONSTANT = "constant"
MIXED = "mixed"


@dataclass(frozen=True)
class GammaSchedule:
    """Time weight of the nonlinearity.

    ``power_exp``: ``c (1 + t)^d1 e^{d0 t}``; ``pure_exp``: ``e^{gamma t}``;
    ``kato_power``: ``c t^{-1-q}``; ``zero``: identically 0 (linear runs).
    """

    kind: str
    c: float = 1.0
    d0: float = 0.0
    d1: float = 0.0
    gamma: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power_exp", "pure_exp", "kato_power", "zero"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "zero" and not self.c > 0:
            raise DomainError(f"schedule constant c must be > 0, got {self.c!r}")

    @classmethod
    def power_exp(cls, c=1.0, d0=0.0, d1=0.0):
        return cls("power_exp", c=float(c), d0=float(d0), d1=float(d1))

    @classmethod
    def pure_exp(cls, gamma):
        return cls("pure_exp", gamma=float(gamma))

    @classmethod
    def kato_power(cls, c, q):
        return cls("kato_power", c=float(c), q=float(q))

    @classmethod
    def constant(cls, c):
        return cls.power_exp(c, 0.0, 0.0)

    @classmethod
    def zero(cls):
        return cls("zero", c=0.0)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kind = data.pop("kind")
        return cls(kind, **{k: float(v) for k, v in data.items()})

    def to_dict(self):
        keys = {
            "power_exp": ("c", "d0", "d1"),
            "pure_exp": ("gamma",),
            "kato_power": ("c", "q"),
            "zero": (),
        }[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power_exp":
            with np.errstate(over="ignore"):
                out = self.c * (1.0 + t) ** self.d1 * np.exp(self.d0 * t)
        elif self.kind == "pure_exp":
            with np.errstate(over="ignore"):
                out = np.exp(self.gamma * t)
        elif self.kind == "kato_power":
            with np.errstate(divide="ignore"):
                out = self.c * t ** (-1.0 - self.q)
        else:
            out = np.zeros_like(t)
        return float(out) if out.ndim == 0 else out

    def log_rate(self, t):
        """``Gamma'(t) / Gamma(t)``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "power_exp":
            return self.d1 / (1.0 + t) + self.d0
        if self.kind == "pure_exp":
            return np.full_like(t, self.gamma)
        if self.kind == "kato_power":
            return (-1.0 - self.q) / t
        return np.zeros_like(t)

    def monotonicity(self, start=0.0):
        """Monotonicity class of the schedule on ``[start, inf)``."""
        if self.kind == "zero":
            return CONSTANT
        if self.kind == "pure_exp":
            g = self.gamma
            return CONSTANT if g == 0 else (NONDECREASING if g > 0 else NONINCREASING)
        if self.kind == "kato_power":
            q1 = -1.0 - self.q
            return CONSTANT if q1 == 0 else (NONDECREASING if q1 > 0 else NONINCREASING)
        d0, d1 = self.d0, self.d1
        if d0 == 0 and d1 == 0:
            return CONSTANT
        # rate d1/(1+t) + d0 moves monotonically from its value at start to d0
        first = d1 / (1.0 + start) + d0
        if first >= 0 and d0 >= 0:
            return NONDECREASING
        if first <= 0 and d0 <= 0:
            return NONINCREASING
        return MIXED

    def sqrt_integral(self, lo, hi):
        """``int_lo^hi Gamma(s)^{1/2} ds`` (closed form where available)."""
        if hi <= lo:
            return 0.0
        if self.kind == "pure_exp":
            g = 0.5 * self.gamma
            if g == 0:
                return hi - lo
            if math.isinf(hi):
                return -math.exp(g * lo) / g if g < 0 else math.inf
            return (math.exp(g * hi) - math.exp(g * lo)) / g
        if self.kind == "power_exp" and self.d0 == 0 and self.d1 == 0:
            return math.sqrt(self.c) * (hi - lo)
        if math.isinf(hi):
            raise DomainError("open-ended integral only in closed form")
        return adaptive_gl(lambda s: np.sqrt(self(s)), lo, hi, tol=1e-12, rtol=1e-13).value


@dataclass(frozen=True)
class MomentState:
    F: float
    Fdot: float
    t: float = 0.0


@dataclass(frozen=True)
class CauchyMoments:
    C0: float
    C1: float


@dataclass(frozen=True)
class ComparisonParams:
    """``F'' = M^2 F + delta0 Gamma(t) F^q_eff``."""

    M: float
    q_eff: float
    delta0: float
    gamma: GammaSchedule

    def __post_init__(self):
        if not self.M >= 0:
            raise DomainError(f"curved mass must be >= 0, got {self.M!r}")
        if not self.q_eff > 1:
            raise DomainError(f"q_eff = p(beta+1) must exceed 1 (beta > 1/p - 1), got {self.q_eff!r}")
        if not self.delta0 > 0:
            raise DomainError(f"delta0 must be > 0, got {self.delta0!r}")


@dataclass
class Trajectory:
    t: list = field(default_factory=list)
    F: list = field(default_factory=list)
    Fdot: list = field(default_factory=list)
    step: list = field(default_factory=list)

    def append(self, t, F, Fdot, step):
        self.t.append(t)
        self.F.append(F)
        self.Fdot.append(Fdot)
        self.step.append(step)

    def write_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["t", "F", "Fdot", "stepsize"])
        for row in zip(self.t, self.F, self.Fdot, self.step):
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class BlowupReport:
    """``status`` is ``blowup``, ``alive`` or ``inconclusive``.

    ``alive`` only means no blow-up was seen before ``t_max``.
    """

    status: str
    t_max: float
    T_est: float = None
    T_err: float = None
    detail: str = ""
    fit_exponent: float = None

    def to_dict(self):
        return {
            "status": self.status,
            "t_max": self.t_max,
            "T_est": self.T_est,
            "T_err": self.T_err,
            "fit_exponent": self.fit_exponent,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class BlowupCertificate:
    lemma: str
    a: float
    a1: float = None
    T_upper: float = None
    conditions_report: tuple = ()
    notes: str = ""

    @property
    def holds(self):
        return bool(self.conditions_report) and all(ok for _, ok, _ in self.conditions_report)

    def to_dict(self):
        return {
            "lemma": self.lemma,
            "holds": self.holds,
            "a": self.a,
            "a1": self.a1,
            "T_upper": self.T_upper,
            "conditions": [
                {"name": name, "holds": bool(ok), "margin": float(margin)}
                for name, ok, margin in self.conditions_report
            ],
            "notes": self.notes,
        }


def comparison_rhs(t, F, params):
    """``M^2 F + delta0 Gamma(t) F^q_eff`` for ``F >= 0``."""
    if F < 0:
        raise DomainError(f"comparison system needs F >= 0, got {F!r}")
    return params.M**2 * F + params.delta0 * params.gamma(t) * F**params.q_eff


# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


def _fit_blowup(ts, Fs, q):
    """Fit ``F ~ C (T - t)^{-2/(q-1)}`` to the tail of a trajectory.

    ``F^{-(q-1)/2}`` is then linear in ``t`` and vanishes at ``T``.
    """
    ts = np.asarray(ts)
    ys = np.asarray(Fs) ** (-(q - 1.0) / 2.0)
    slope, icpt = np.polyfit(ts - ts[-1], ys, 1)
    if slope >= 0:
        return None, None
    T = ts[-1] - icpt / slope
    remaining = T - ts
    good = remaining > 0
    expo = None
    if np.count_nonzero(good) >= 3:
        expo = float(np.polyfit(np.log(remaining[good]), np.log(np.asarray(Fs)[good]), 1)[0])
    return float(T), expo


def _tail_report(traj, q, t_max, detail):
    n = min(FIT_WINDOW, len(traj.t) - 1)
    T, expo = _fit_blowup(traj.t[-n:], traj.F[-n:], q)
    if T is None:
        return BlowupReport("inconclusive", t_max, detail="tail fit failed")
    half = max(3, n // 2)
    T_half, _ = _fit_blowup(traj.t[-half:], traj.F[-half:], q)
    err_T = abs(T - T_half) if T_half is not None else None
    return BlowupReport("blowup", t_max, T_est=T, T_err=err_T, fit_exponent=expo, detail=detail)


def integrate_moment_ode(init, params, t_max, tol=1e-10, F_cap=F_CAP, max_steps=200_000):
    """Adaptive Dormand-Prince integration with blow-up detection.

    Blow-up is declared once ``F`` passes ``F_cap``, or when the step size
    underflows after ``F`` grew by ``RUNAWAY_RATIO``.  The blow-up time is
    extrapolated from the last ``FIT_WINDOW`` accepted steps.

    Returns ``(Trajectory, BlowupReport)``.
    """
    if init.F < 0:
        raise DomainError(f"initial F must be >= 0, got {init.F!r}")
    if not tol > 0:
        raise DomainError("tol must be > 0")
    M2 = params.M**2
    q = params.q_eff
    d0 = params.delta0
    gam = params.gamma

    def rhs(t, y):
        F = y[0] if y[0] > 0 else 0.0
        return (y[1], M2 * y[0] + d0 * gam(t) * F**q)

    t = float(init.t)
    y = (float(init.F), float(init.Fdot))
    traj = Trajectory()
    traj.append(t, y[0], y[1], 0.0)
    if t >= t_max:
        return traj, BlowupReport("alive", t_max)
    h = min(1e-3, 0.1 * (t_max - t))
    atol = tol * 1e-3
    k1 = rhs(t, y)
    for _ in range(max_steps):
        h = min(h, t_max - t)
        ks = [k1]
        for i in range(1, 7):
            yi = tuple(y[j] + h * sum(a * k[j] for a, k in zip(_A[i], ks)) for j in range(2))
            ks.append(rhs(t + _C[i] * h, yi))
        y_new = tuple(y[j] + h * sum(b * k[j] for b, k in zip(_B5, ks)) for j in range(2))
        err_vec = [h * sum(e * k[j] for e, k in zip(_E, ks)) for j in range(2)]
        if not all(math.isfinite(v) for v in y_new + tuple(err_vec)):
            err = math.inf
        else:
            scale = [atol + tol * max(abs(y[j]), abs(y_new[j])) for j in range(2)]
            err = math.sqrt(0.5 * sum((e / s) ** 2 for e, s in zip(err_vec, scale)))
        if err <= 1.0:
            t += h
            y = y_new
            k1 = ks[6]
            traj.append(t, y[0], y[1], h)
            if y[0] > F_cap:
                return traj, _tail_report(traj, q, t_max, f"F exceeded {F_cap:g} at t={t:.12g}")
            if t >= t_max:
                return traj, BlowupReport("alive", t_max, detail="no blow-up before t_max")
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err**-0.2))
        else:
            factor = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err**-0.2)
        h *= factor
        if h < 1e-15 * max(1.0, abs(t)):
            # at large q the time resolution runs out before F reaches the cap
            if y[0] > RUNAWAY_RATIO * max(1.0, traj.F[0]) and y[1] > 0:
                return traj, _tail_report(traj, q, t_max, f"step size underflow with F={y[0]:.6g}")
            return traj, BlowupReport(
                "inconclusive", t_max, detail=f"step size underflow at t={t:.12g} with F={y[0]:.6g}"
            )
    return traj, BlowupReport("inconclusive", t_max, detail="step budget exhausted")


def _integrate_job(job):
    init, params, t_max, tol = job
    return integrate_moment_ode(init, params, t_max, tol)[1]


def integrate_many(jobs, workers=None):
    """Run ``(init, params, t_max, tol)`` jobs concurrently; returns reports in order."""
    jobs = list(jobs)
    if workers == 1 or len(jobs) <= 1:
        return [_integrate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_integrate_job, jobs))


def _effective_schedule(params, a):
    """Schedule used in the large-energy argument on ``[a, inf)``.

    Nonincreasing weights enter as they are.  A nondecreasing weight is
    bounded below by its value at ``a``; a constant weight is nonincreasing,
    so the same energy argument applies with an explicit lifespan.
    """
    mono = params.gamma.monotonicity(a)
    if mono == MIXED:
        raise PreconditionError(
            "large-energy lemma needs Gamma either non-decreasing or non-increasing on [a, inf)"
        )
    if mono == NONDECREASING:
        return GammaSchedule.constant(params.delta0 * params.gamma(a)), mono
    g = params.gamma
    d = params.delta0
    if g.kind == "pure_exp":
        return _Scaled(g, d), mono
    if g.kind == "power_exp":
        return GammaSchedule.power_exp(d * g.c, g.d0, g.d1), mono
    if g.kind == "kato_power":
        return GammaSchedule.kato_power(d * g.c, g.q), mono
    raise PreconditionError("Gamma must be positive for the large-energy lemma")


@dataclass(frozen=True)
class _Scaled:
    base: GammaSchedule
    factor: float

    def __call__(self, t):
        return self.factor * self.base(t)

    def sqrt_integral(self, lo, hi):
        return math.sqrt(self.factor) * self.base.sqrt_integral(lo, hi)


def _energy_gap(q, F_a):
    """Value the integral of sqrt(Gamma) must exceed: sqrt(2(q+1))/(q-1) F_a^{(1-q)/2}."""
    return math.sqrt(2.0 * (q + 1.0)) / (q - 1.0) * F_a ** ((1.0 - q) / 2.0)


def _first_crossing(sched, a, gap, horizon):
    """Smallest ``T`` in ``(a, horizon]`` with ``int_a^T sqrt(Gamma) >= gap``, else None."""
    if gap <= 0:
        return a
    if math.isinf(horizon):
        try:
            total = sched.sqrt_integral(a, math.inf)
        except DomainError:
            total = None
        if total is not None and total <= gap:
            return None
        hi = a + 1.0
        while sched.sqrt_integral(a, hi) < gap:
            hi = a + 2.0 * (hi - a)
            if hi - a > 1e8:
                return None
    else:
        hi = horizon
        if sched.sqrt_integral(a, hi) < gap:
            return None
    lo = a
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sched.sqrt_integral(a, mid) < gap:
            lo = mid
        else:
            hi = mid
    return hi


def check_lemma_large_energy(params, a, F_a, Fdot_a, search_horizon=math.inf):
    """Certificate for the large-energy Kato-type lemma.

    Conditions, with ``G = delta0 * Gamma`` and exponent ``q = q_eff``:

    * ``int_a^{a1} G^{1/2} > sqrt(2(q+1))/(q-1) * F(a)^{(1-q)/2}`` for some ``a1``
    * ``F'(a)^2 >= 2/(q+1) * G(a) * F(a)^{q+1}``

    When both hold the smallest such ``a1`` is also an upper bound for the
    lifespan of the comparison solution.
    """
    if not F_a > 0:
        raise PreconditionError(f"large-energy lemma needs F(a) > 0, got {F_a!r}")
    if Fdot_a < 0:
        raise PreconditionError(f"large-energy lemma needs F'(a) >= 0, got {Fdot_a!r}")
    sched, mono = _effective_schedule(params, a)
    q = params.q_eff
    G_a = float(sched(a))
    if not G_a > 0:
        raise PreconditionError("large-energy lemma needs Gamma(a) > 0")
    kinetic_rhs = 2.0 / (q + 1.0) * G_a * F_a ** (q + 1.0)
    kinetic_ok = Fdot_a**2 >= kinetic_rhs
    gap = _energy_gap(q, F_a)
    a1 = _first_crossing(sched, a, gap, search_horizon)
    if a1 is None:
        reach = sched.sqrt_integral(a, search_horizon) if not math.isinf(search_horizon) else _tail_total(sched, a)
        gap_margin = reach - gap
    else:
        gap_margin = a1 - a
    report = (
        ("sqrt_gamma_integral_exceeds_gap", a1 is not None, gap_margin),
        ("initial_kinetic_energy", kinetic_ok, Fdot_a**2 - kinetic_rhs),
    )
    notes = f"Gamma {mono} on [a, inf)"
    if mono == NONDECREASING:
        notes += "; bounded below by its value at a"
    holds = all(ok for _, ok, _ in report)
    return BlowupCertificate(
        "large_energy", a, a1=a1, T_upper=a1 if holds else None, conditions_report=report, notes=notes
    )


def _tail_total(sched, a):
    try:
        return sched.sqrt_integral(a, math.inf)
    except DomainError:
        return float("nan")


def lifespan_upper_bound(params, a, F_a):
    """First ``T`` with ``sqrt(2/(q+1)) int_a^T (delta0 Gamma)^{1/2} = 2/(q-1) F(a)^{(1-q)/2}``.

    Returns None when the integral of ``sqrt(Gamma)`` stays below that gap.
    """
    if not F_a > 0:
        raise PreconditionError(f"lifespan bound needs F(a) > 0, got {F_a!r}")
    if math.isinf(F_a):
        return float(a)
    sched, _ = _effective_schedule(params, a)
    return _first_crossing(sched, a, _energy_gap(params.q_eff, F_a), math.inf)


def probe_grid(a, ratio=PROBE_RATIO, cap=PROBE_CAP):
    """Geometric probe times ``a * ratio^k`` up to ``cap`` (starting at 1e-2 if a = 0)."""
    start = a if a > 0 else 1e-2
    n = int(math.floor(math.log(cap / start) / math.log(ratio))) + 1
    return start * ratio ** np.arange(max(n, 1))


def monotone_start(schedule):
    """Earliest ``a >= 0`` after which the schedule is nonincreasing, or None."""
    if schedule.monotonicity(0.0) in (NONINCREASING, CONSTANT):
        return 0.0
    if schedule.kind == "power_exp" and schedule.d0 < 0 < schedule.d1:
        return schedule.d1 / -schedule.d0 - 1.0
    return None


def check_lemma_small_energy(M, schedule, q_eff, eps=1.0, c=None, a=None, probe=None):
    """Certificate for the small-energy lemma with ``A = e^{Mt}``.

    ``a=None`` starts the interval where the schedule turns nonincreasing
    (the lemma may be applied from any starting time).

    With ``gamma(t) = Gamma(t) e^{M q t}`` the conditions are ``A -> inf``,
    ``d/dt[gamma A^{-q}] = Gamma'(t) <= 0`` on ``[a, inf)``, and
    ``gamma(t) >= c A (ln A)^{2+eps}``.  For ``power_exp`` weights the last
    one reduces to ``d0 > -M (q-1)``, or equality with ``d1 >= 2 + eps``;
    other kinds are judged on the probe grid and labelled as such.
    """
    if M == 0:
        raise PreconditionError("small-energy lemma needs M > 0; use check_kato_power for M = 0")
    if M < 0:
        raise DomainError(f"curved mass must be >= 0, got {M!r}")
    if not q_eff > 1:
        raise DomainError(f"q_eff must exceed 1, got {q_eff!r}")
    if a is None:
        a = monotone_start(schedule)
        if a is None:
            a = 0.0
    ts = probe_grid(a) if probe is None else np.asarray(probe, dtype=float)
    ts = ts[ts >= a]

    mono = schedule.monotonicity(a)
    rates = schedule.log_rate(ts)
    monotone_ok = mono in (NONINCREASING, CONSTANT)
    monotone_margin = 0.0 - float(np.max(rates)) if len(ts) else 0.0

    # log of gamma / (A (ln A)^{2+eps}) on the grid
    with np.errstate(divide="ignore"):
        log_ratio = (
            np.log(schedule(ts)) + M * q_eff * ts - M * ts - (2.0 + eps) * np.log(M * ts)
        )
    notes = []
    if schedule.kind == "power_exp":
        D = schedule.d0 + M * (q_eff - 1.0)
        if abs(D) <= 1e-12:
            growth_ok = schedule.d1 >= 2.0 + eps
            growth_margin = schedule.d1 - (2.0 + eps)
        else:
            growth_ok = D > 0
            growth_margin = D
        notes.append("growth condition by closed-form reduction")
    elif schedule.kind == "pure_exp":
        D = schedule.gamma + M * (q_eff - 1.0)
        growth_ok = D > 0
        growth_margin = D
        notes.append("growth condition by closed-form reduction")
    else:
        growth_ok = bool(np.all(np.isfinite(log_ratio))) and bool(np.all(np.diff(log_ratio[-5:]) >= 0))
        growth_margin = float(np.min(log_ratio))
        notes.append("growth condition judged on the probe grid only")
    if c is not None:
        grid_ok = bool(np.all(log_ratio >= math.log(c)))
        growth_ok = growth_ok and grid_ok
        growth_margin = min(growth_margin, float(np.min(log_ratio)) - math.log(c))

    report = (
        ("A_unbounded", True, M),
        ("gamma_over_A_power_nonincreasing", monotone_ok, monotone_margin),
        ("gamma_dominates_A_log_A", growth_ok, growth_margin),
    )
    return BlowupCertificate("small_energy", a, conditions_report=report, notes="; ".join(notes))


def check_kato_power(schedule, q_eff, t_min=1.0):
    """Power-law criterion ``Gamma(t) >= c t^{-1-q_eff}`` for large ``t`` (M = 0).

    Margin is the infimum of ``Gamma(t) t^{1+q_eff}`` over the probe grid.
    """
    if not q_eff > 1:
        raise DomainError(f"q_eff must exceed 1, got {q_eff!r}")
    ts = probe_grid(t_min)
    ratio = schedule(ts) * ts ** (1.0 + q_eff)
    kind = schedule.kind
    if kind == "kato_power":
        ok = schedule.q <= q_eff
    elif kind == "power_exp":
        ok = schedule.d0 > 0 or (schedule.d0 == 0 and schedule.d1 + 1.0 + q_eff >= 0)
    elif kind == "pure_exp":
        ok = schedule.gamma >= 0
    else:
        ok = False
    margin = float(np.min(ratio)) if ok else 0.0
    return BlowupCertificate("kato_power", t_min, conditions_report=(("power_lower_bound", ok, margin),))


def check_large_data_conditions(gamma, q_eff, delta0, moments):
    """Large-data conditions for ``Gamma = e^{gamma t}`` with ``gamma <= 0``.

    ``C1 >= sqrt(2 delta0/(q+1)) C0^{(q+1)/2}`` and
    ``C0^{q-1} > gamma^2 (q+1) / (delta0 (q-1))``.

    Returns ``(holds, margins)``.
    """
    if gamma > 0:
        raise PreconditionError("gamma > 0 blows up for small data; use check_lemma_small_energy")
    if not q_eff > 1:
        raise DomainError(f"q_eff must exceed 1, got {q_eff!r}")
    C0, C1 = moments.C0, moments.C1
    if C0 <= 0 or C1 <= 0:
        kinetic = C1 - (math.sqrt(2.0 * delta0 / (q_eff + 1.0)) * max(C0, 0.0) ** ((q_eff + 1.0) / 2.0))
        return False, {"kinetic": kinetic, "potential": -math.inf}
    kinetic = C1 - math.sqrt(2.0 * delta0 / (q_eff + 1.0)) * C0 ** ((q_eff + 1.0) / 2.0)
    potential = C0 ** (q_eff - 1.0) - gamma**2 * (q_eff + 1.0) / (delta0 * (q_eff - 1.0))
    return (kinetic >= 0 and potential > 0), {"kinetic": kinetic, "potential": potential}


def remark_solution(d, p, t):
    """Global solution ``c_F e^{d t/(p-1)}``, ``c_F = (d/(p-1))^{2/(p-1)}`` of ``F'' = e^{-dt} F^p``."""
    cF = (d / (p - 1.0)) ** (2.0 / (p - 1.0))
    return cF * np.exp(d * np.asarray(t, dtype=float) / (p - 1.0))
