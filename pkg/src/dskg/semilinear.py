"""One-dimensional solver for the nonlocal semilinear Klein-Gordon equation
in de Sitter space, written for ``u = e^{nt/2} phi``:

    u_tt - e^{-2t} u_xx - M^2 u = Gamma(t) (int |u|^p dx)^beta |u|^p.

Two backends share the same outputs: an explicit leapfrog finite-difference
scheme and a windowed Picard iteration of the integral form
``u = u_lin + G[nonlinearity]`` that reuses the cone kernel.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .blowup_ode import BlowupReport, GammaSchedule
from .cone_kernel import kernel_values
from .descent import DimensionConstants
from .errors import DomainError
from .quadrature import adaptive_gl

SUPPORT_THRESHOLD = 1e-14
BLOWUP_CAP = 1e8
CFL = 0.5
PICARD_NODES = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(PICARD_NODES)


@dataclass(frozen=True)
class PhysicalParams:
    """Space dimension ``n``, mass ``m`` and nonlinearity ``(p, beta)``."""

    n: int = 1
    m: float = 0.0
    p: float = 2.0
    beta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.m <= self.n / 2.0:
            raise DomainError(f"small-mass regime needs 0 <= m <= n/2, got m={self.m!r}")
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p!r}")
        if not self.p * (self.beta + 1.0) > 1:
            raise DomainError(f"need beta > 1/p - 1, got p={self.p!r}, beta={self.beta!r}")

    @classmethod
    def from_curved_mass(cls, M, n=1, p=2.0, beta=0.0):
        if not 0.0 <= M <= n / 2.0:
            raise DomainError(f"curved mass must lie in [0, n/2], got {M!r}")
        return cls(n=n, m=math.sqrt(max(n * n / 4.0 - M * M, 0.0)), p=p, beta=beta)

    @property
    def M(self):
        return math.sqrt(max(self.n * self.n / 4.0 - self.m * self.m, 0.0))

    @property
    def q_eff(self):
        return self.p * (self.beta + 1.0)

    def to_dict(self):
        return {"n": self.n, "m": self.m, "M": self.M, "p": self.p, "beta": self.beta}


def transform_phi_to_u(phi, t, params):
    return math.exp(params.n * t / 2.0) * np.asarray(phi, dtype=float)


def transform_u_to_phi(u, t, params):
    return math.exp(-params.n * t / 2.0) * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``Nx`` nodes on ``[x_min, x_max]`` with time step ``dt``."""

    x_min: float
    x_max: float
    Nx: int
    dt: float
    t_max: float

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DomainError("grid needs x_max > x_min")
        if self.Nx < 5:
            raise DomainError(f"grid needs at least 5 nodes, got {self.Nx!r}")
        if not (self.dt > 0 and self.t_max > 0):
            raise DomainError("dt and t_max must be positive")
        if self.dt > CFL * self.dx * (1 + 1e-12):
            raise DomainError(f"CFL violated: dt={self.dt!r} exceeds {CFL} * dx = {CFL * self.dx!r}")

    @classmethod
    def around_data(cls, R0, dx, t_max, dt=None, pad=0.25):
        """Symmetric grid covering the influence region ``|x| <= R0 + 1`` plus ``pad``."""
        half = R0 + 1.0 + pad
        cells = int(math.ceil(2.0 * half / dx))
        half = 0.5 * cells * dx
        return cls(-half, half, cells + 1, CFL * dx if dt is None else dt, t_max)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.Nx - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.Nx)

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))

    def refined(self):
        return Grid1D(self.x_min, self.x_max, 2 * self.Nx - 1, self.dt / 2.0, self.t_max)

    def require_influence_region(self, R0):
        reach = R0 + 1.0
        if self.x_min > -reach - self.dx or self.x_max < reach + self.dx:
            raise DomainError(
                f"domain [{self.x_min}, {self.x_max}] must contain the influence region |x| <= {reach}"
            )

    def to_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "Nx": self.Nx, "dx": self.dx,
                "dt": self.dt, "t_max": self.t_max}


def _bump_shape(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


_BUMP_MASS = adaptive_gl(_bump_shape, -1.0, 1.0, tol=1e-15).value


@dataclass(frozen=True)
class CauchyData:
    """Initial values ``u(., 0) = C0 * bump``, ``u_t(., 0) = C1 * bump`` on ``|x| < R0``.

    The bump ``exp(-1/(1 - (x/R0)^2))`` is normalized to unit integral.
    """

    C0: float
    C1: float
    R0: float = 1.0

    def __post_init__(self):
        if not self.R0 > 0:
            raise DomainError(f"support radius must be > 0, got {self.R0!r}")

    def profile(self, x):
        return _bump_shape(np.asarray(x, dtype=float) / self.R0) / (_BUMP_MASS * self.R0)

    def sample(self, grid):
        b = self.profile(grid.x)
        return self.C0 * b, self.C1 * b

    def scaled(self, factor):
        return CauchyData(self.C0 * factor, self.C1 * factor, self.R0)


@dataclass(frozen=True)
class FieldState:
    """Two consecutive leapfrog levels ``u(t - dt)`` and ``u(t)``."""

    u: np.ndarray
    u_prev: np.ndarray
    t: float
    blowup: bool = False


@dataclass(frozen=True)
class SupportInfo:
    R: float
    R_data: float


@dataclass
class MomentTrack:
    """Recorded moments ``F = int u``, ``Pp = int |u|^p``, support radius and sup norm."""

    t: np.ndarray
    F: np.ndarray
    Fdot: np.ndarray
    Pp: np.ndarray
    R: np.ndarray
    umax: np.ndarray
    x: np.ndarray = None
    fields: np.ndarray = None

    def write_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["t", "F", "Fdot_est", "Pp", "R", "max_abs_u"])
        for row in zip(self.t, self.F, self.Fdot, self.Pp, self.R, self.umax):
            writer.writerow([repr(float(v)) for v in row])


def moments(u, grid, p):
    """Trapezoid ``(int u dx, int |u|^p dx)``."""
    u = np.asarray(u, dtype=float)
    dx = grid.dx
    absp = np.abs(u) ** p
    F = dx * (np.sum(u) - 0.5 * (u[0] + u[-1]))
    Pp = dx * (np.sum(absp) - 0.5 * (absp[0] + absp[-1]))
    return float(F), float(Pp)


def support_radius(u, x, dx):
    """Half-width of the smallest node-centred interval holding all ``|u| >= 1e-14``."""
    live = np.abs(u) >= SUPPORT_THRESHOLD
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(x[live]))) + 0.5 * dx


def _nonlinear_term(u, t, Pp, params, gamma):
    g = gamma(t)
    if g == 0.0 or Pp == 0.0:
        return np.zeros_like(u)
    return g * Pp**params.beta * np.abs(u) ** params.p


def _rhs(u, t, grid, params, gamma):
    lap = np.zeros_like(u)
    lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / grid.dx**2
    _, Pp = moments(u, grid, params.p)
    return math.exp(-2.0 * t) * lap + params.M**2 * u + _nonlinear_term(u, t, Pp, params, gamma)


def initial_state(u0, v0, grid, params, gamma):
    """Second-order Taylor start ``u(dt) = u0 + dt v0 + dt^2/2 u_tt(0)``."""
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    dt = grid.dt
    u1 = u0 + dt * v0 + 0.5 * dt * dt * _rhs(u0, 0.0, grid, params, gamma)
    u1[0] = u1[-1] = 0.0
    return FieldState(u1, u0.copy(), dt)


def step_fd(state, grid, params, gamma):
    """One leapfrog step; a non-finite result freezes the state with ``blowup`` set."""
    if state.blowup:
        return state
    dt = grid.dt
    with np.errstate(over="ignore", invalid="ignore"):
        nxt = 2.0 * state.u - state.u_prev + dt * dt * _rhs(state.u, state.t, grid, params, gamma)
    nxt[0] = nxt[-1] = 0.0
    if not np.all(np.isfinite(nxt)):
        return FieldState(state.u, state.u_prev, state.t, blowup=True)
    return FieldState(nxt, state.u, state.t + dt)


@dataclass
class FDRun:
    grid: Grid1D
    track: MomentTrack
    support: list
    blowup_time: float = None
    detail: str = ""


def _crossing_time(t0, m0, t1, m1, cap):
    if m0 <= 0 or m1 <= m0:
        return t1
    return t0 + (t1 - t0) * (math.log(cap) - math.log(m0)) / (math.log(m1) - math.log(m0))


def run_fd(data, grid, params, gamma, record_stride=4, keep_fields=False, cap=BLOWUP_CAP):
    """Leapfrog run at one resolution, recording every ``record_stride`` steps.

    Stops at ``t_max`` or at the first time ``max|u|`` passes ``cap``.
    """
    if params.n != 1:
        raise DomainError("the PDE solver is one-dimensional")
    grid.require_influence_region(data.R0)
    if gamma.kind == "kato_power":
        raise DomainError("kato_power weights are singular at t = 0")
    x = grid.x
    dx = grid.dx
    u0, v0 = data.sample(grid)
    p = params.p
    n_steps = grid.n_steps

    Fs = [moments(u0, grid, p)[0]]
    state = initial_state(u0, v0, grid, params, gamma)
    prev_max = float(np.max(np.abs(u0)))
    blowup_time = None
    detail = "reached t_max"
    rec = {"t": [], "F": [], "Pp": [], "R": [], "umax": [], "step": []}
    fields = []

    def record(step, u):
        F, Pp = moments(u, grid, p)
        rec["t"].append(step * grid.dt)
        rec["F"].append(F)
        rec["Pp"].append(Pp)
        rec["R"].append(support_radius(u, x, dx))
        rec["umax"].append(float(np.max(np.abs(u))))
        rec["step"].append(step)
        if keep_fields:
            fields.append(u.copy())

    record(0, u0)
    step = 1
    while True:
        u = state.u
        Fs.append(moments(u, grid, p)[0])
        cur_max = float(np.max(np.abs(u)))
        if step % record_stride == 0:
            record(step, u)
        if cur_max > cap:
            blowup_time = _crossing_time((step - 1) * grid.dt, prev_max, step * grid.dt, cur_max, cap)
            detail = f"max|u| passed {cap:g}"
            break
        if step >= n_steps:
            break
        state = step_fd(state, grid, params, gamma)
        if state.blowup:
            blowup_time = step * grid.dt
            detail = "non-finite values"
            break
        prev_max = cur_max
        step += 1

    Fs = np.array(Fs)
    Fdot_all = np.gradient(Fs, grid.dt) if len(Fs) > 1 else np.zeros_like(Fs)
    steps = np.array(rec["step"], dtype=int)
    R_data = data.R0
    track = MomentTrack(
        t=np.array(rec["t"]), F=np.array(rec["F"]), Fdot=Fdot_all[steps], Pp=np.array(rec["Pp"]),
        R=np.array(rec["R"]), umax=np.array(rec["umax"]), x=x,
        fields=np.array(fields) if keep_fields else None,
    )
    support = [SupportInfo(R, R_data) for R in track.R]
    return FDRun(grid, track, support, blowup_time, detail)


def _combine(coarse, fine, t_max):
    """Classification across two resolutions with a Richardson-combined blow-up time."""
    tc, tf = coarse.blowup_time, fine.blowup_time
    if tc is not None and tf is not None:
        T = tf + (tf - tc) / 3.0
        return BlowupReport("blowup", t_max, T_est=T, T_err=abs(tf - tc),
                            detail=f"coarse {tc:.10g}, fine {tf:.10g}")
    if tc is None and tf is None:
        return BlowupReport("alive", t_max, detail="no blow-up before t_max at tested resolutions")
    return BlowupReport("inconclusive", t_max, detail=f"resolutions disagree (coarse {tc}, fine {tf})")


def solve_fd(data, grid, params, gamma, record_stride=4, refine=True, keep_fields=False):
    """Run at ``grid`` and at half the spacing; returns ``(track, support, report)``.

    The track and support history belong to ``grid``.
    """
    coarse = run_fd(data, grid, params, gamma, record_stride, keep_fields)
    if not refine:
        if coarse.blowup_time is not None:
            report = BlowupReport("blowup", grid.t_max, T_est=coarse.blowup_time, detail=coarse.detail)
        else:
            report = BlowupReport("alive", grid.t_max, detail="no blow-up before t_max at tested resolutions")
        return coarse.track, coarse.support, report
    fine = run_fd(data, grid.refined(), params, gamma, 2 * record_stride)
    return coarse.track, coarse.support, _combine(coarse, fine, grid.t_max)


def verify_moment_law(track, params, gamma):
    """Largest normalized residual of ``F'' = M^2 F + Gamma Pp^{beta+1}``.

    ``F''`` is the centred second difference of the recorded samples, so
    the residual reflects the sampling interval as well as the scheme.
    """
    t = np.asarray(track.t)
    if len(t) < 3:
        return 0.0
    h = np.diff(t)
    if np.max(np.abs(h - h[0])) > 1e-9 * max(1.0, abs(h[0])):
        raise DomainError("moment law check needs uniformly sampled times")
    F = np.asarray(track.F)
    Pp = np.asarray(track.Pp)
    D2 = (F[2:] - 2.0 * F[1:-1] + F[:-2]) / h[0] ** 2
    tm = t[1:-1]
    law = params.M**2 * F[1:-1] + gamma(tm) * Pp[1:-1] ** (params.beta + 1.0)
    return float(np.max(np.abs(D2 - law) / np.maximum(1.0, np.abs(D2))))


def holder_constant(n, p, R):
    """``(tau_n R^n)^{p-1}``: Hoelder factor for a function supported in ``|x| <= R``."""
    tau = DimensionConstants.for_dimension(n).tau
    return (tau * R**n) ** (p - 1.0)


def delta0_from_support(n, p, beta, R):
    """Comparison constant ``holder_constant^{-(beta+1)}``."""
    return holder_constant(n, p, R) ** (-(beta + 1.0))


def holder_lower_bound_check(track, support_history, params, radius_scale=1.0):
    """``|F|^p <= (tau_n R^n)^{p-1} Pp`` at every recorded time (relative slack 1e-12)."""
    F = np.abs(np.asarray(track.F))
    Pp = np.asarray(track.Pp)
    R = np.array([s.R for s in support_history]) * radius_scale
    lhs = F**params.p
    rhs = holder_constant(params.n, params.p, R) * Pp
    return bool(np.all(lhs <= rhs + 1e-12 * np.maximum(lhs, rhs)))


def _track_from_fields(times, U, grid, p, R0):
    x = grid.x
    Fs, Pps, Rs, ms = [], [], [], []
    for u in U:
        F, Pp = moments(u, grid, p)
        Fs.append(F)
        Pps.append(Pp)
        Rs.append(support_radius(u, x, grid.dx))
        ms.append(float(np.max(np.abs(u))))
    Fs = np.array(Fs)
    Fdot = np.gradient(Fs, times) if len(times) > 1 else np.zeros_like(Fs)
    track = MomentTrack(np.asarray(times), Fs, Fdot, np.array(Pps), np.array(Rs), np.array(ms), x=x, fields=U)
    return track, [SupportInfo(R, R0) for R in Rs]


@dataclass
class _ConeQuadrature:
    """Cached kernel samples for trapezoid-in-time, Gauss-in-space evaluation of ``G``."""

    times: np.ndarray
    x: np.ndarray
    M: float
    cache: dict = field(default_factory=dict)

    def weight(self, l):
        h = self.times[1] - self.times[0]
        return 0.5 * h if l == 0 else h

    def pair(self, l, j):
        key = (l, j)
        if key not in self.cache:
            b, t = self.times[l], self.times[j]
            radius = -math.exp(-b) * math.expm1(-(t - b))
            offsets = radius * _GL_X
            K = kernel_values(self.M, b, t, offsets)
            self.cache[key] = (offsets, radius * _GL_W * K)
        return self.cache[key]

    def contribution(self, spline, l, j):
        """Trapezoid-weighted cone integral of level ``l`` seen from level ``j``."""
        offsets, wk = self.pair(l, j)
        pts = self.x[:, None] + offsets[None, :]
        vals = spline(pts)
        inside = (pts >= self.x[0]) & (pts <= self.x[-1])
        return self.weight(l) * np.sum(np.where(inside, vals, 0.0) * wk, axis=1)


def _source_levels(U, times, grid, params, gamma):
    out = np.empty_like(U)
    for k, u in enumerate(U):
        _, Pp = moments(u, grid, params.p)
        out[k] = _nonlinear_term(u, times[k], Pp, params, gamma)
    return out


def picard_map(U, U_lin, times, grid, params, gamma, quad=None):
    """One full Picard sweep ``U_lin + G[nonlinearity(U)]`` on all time levels."""
    quad = quad or _ConeQuadrature(np.asarray(times), grid.x, params.M)
    src = _source_levels(U, times, grid, params, gamma)
    splines = [CubicSpline(grid.x, s) for s in src]
    out = np.array(U_lin, dtype=float, copy=True)
    for j in range(1, len(times)):
        for l in range(j):
            out[j] += quad.contribution(splines[l], l, j)
    return out


def solve_picard(u0_run, grid, params, gamma, k_max=50, window=8, tol=1e-8):
    """Windowed Picard iteration around the linear run ``u0_run``.

    ``u0_run`` must be an :class:`FDRun` with stored fields and no
    nonlinearity; its record times are the Picard time levels.  Each window
    of ``window`` levels is iterated to sup-norm tolerance ``tol``.  A window
    that fails to settle is halved; if a single level fails, blow-up is
    flagged at the start of that window.

    Returns ``(track, support, report)`` like :func:`solve_fd`.
    """
    lin = u0_run.track
    if lin.fields is None:
        raise DomainError("linear run must keep its fields")
    times = np.asarray(lin.t)
    if len(times) < 2:
        raise DomainError("need at least two recorded time levels")
    U_lin = np.asarray(lin.fields)
    quad = _ConeQuadrature(times, grid.x, params.M)
    J = len(times)
    U = U_lin.copy()
    if gamma.kind == "zero":
        track, support = _track_from_fields(times, U, grid, params.p, u0_run.support[0].R_data)
        return track, support, BlowupReport("alive", float(times[-1]), detail="linear problem")

    splines = [None] * J

    def level_spline(l, u):
        _, Pp = moments(u, grid, params.p)
        return CubicSpline(grid.x, _nonlinear_term(u, times[l], Pp, params, gamma))

    splines[0] = level_spline(0, U[0])
    history = np.zeros_like(U)  # contributions of finalized levels
    for jj in range(1, J):
        history[jj] += quad.contribution(splines[0], 0, jj)
    done = 1
    width = max(1, int(window))
    report = None
    while done < J:
        end = min(J, done + width)
        fixed = history[done:end].copy()
        cur = U[done:end].copy()
        settled = False
        growth = 0
        last = math.inf
        for _ in range(k_max):
            new = U_lin[done:end] + fixed
            local = [level_spline(done + i, cur[i]) for i in range(end - done)]
            for jj in range(done, end):
                for l in range(done, jj):
                    new[jj - done] += quad.contribution(local[l - done], l, jj)
            if not np.all(np.isfinite(new)):
                break
            diff = float(np.max(np.abs(new - cur)))
            cur = new
            scale = max(1.0, float(np.max(np.abs(cur))))
            if diff <= tol * scale:
                settled = True
                break
            growth = growth + 1 if diff > last else 0
            last = diff
            if growth >= 3 or scale > BLOWUP_CAP:
                break
        if not settled:
            if width == 1:
                report = BlowupReport(
                    "blowup", float(times[-1]), T_est=float(times[done - 1]),
                    detail=f"Picard iteration diverged on the window starting at t={times[done - 1]:.6g}",
                )
                break
            width = max(1, width // 2)
            continue
        U[done:end] = cur
        for l in range(done, end):
            splines[l] = level_spline(l, U[l])
        for l in range(done, end):
            for jj in range(end, J):
                history[jj] += quad.contribution(splines[l], l, jj)
        done = end
        width = max(1, int(window))
    if report is None:
        report = BlowupReport("alive", float(times[-1]), detail="no blow-up before t_max at tested resolutions")
        kept = J
    else:
        kept = done
    track, support = _track_from_fields(times[:kept], U[:kept], grid, params.p, u0_run.support[0].R_data)
    return track, support, report


def run_manifest(params, grid, gamma, data, report, extra=None):
    """JSON-ready description of a run."""
    out = {
        "schema": 1,
        "params": params.to_dict(),
        "grid": grid.to_dict(),
        "gamma": gamma.to_dict(),
        "data": {"C0": data.C0, "C1": data.C1, "R0": data.R0},
        "classification": report.to_dict(),
    }
    if extra:
        out.update(extra)
    return out


def write_manifest(manifest, fh):
    json.dump(manifest, fh, indent=2, sort_keys=True)
    fh.write("\n")
