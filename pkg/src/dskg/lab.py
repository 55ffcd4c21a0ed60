"""Parameter sweeps over the weight scale ``c (1+t)^d1 e^{d0 t}``.

Each grid point is an independent PDE run at two resolutions with the
matching lemma certificate attached.  Points run in a process pool and are
merged in grid order, so output does not depend on scheduling.
"""

import csv
import io
import itertools
import json
import math
import os
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .blowup_ode import GammaSchedule, check_kato_power, check_lemma_small_energy
from .errors import DomainError
from .semilinear import CauchyData, Grid1D, PhysicalParams, solve_fd

SCHEMA_VERSION = 1
ALIVE_LABEL = "no blow-up before t_max at tested resolutions"
STATUS_CODE = {"blowup": 1, "alive": 0, "inconclusive": -1, "skipped": -2}
CSV_FIELDS = (
    "M", "m", "p", "beta", "c", "d0", "d1", "amplitude", "status", "T_est", "T_err",
    "certificate", "certificate_holds", "detail",
)
PLOT_FIELDS = ("M", "p", "beta", "amplitude", "d1", "d0", "code", "T_est")


class ConfigError(ValueError):
    pass


def _floats(value, name):
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list) and value and all(isinstance(v, (int, float)) for v in value):
        return [float(v) for v in value]
    raise ConfigError(f"{name!r} must be a number or a non-empty list of numbers")


def _dedupe(values, name):
    out = []
    for v in values:
        if v in out:
            warnings.warn(f"duplicate {name} value {v!r} dropped", stacklevel=3)
        else:
            out.append(v)
    return out


@dataclass(frozen=True)
class ScanSpec:
    """Grid over curved mass, nonlinearity, weight exponents and data size."""

    M: tuple
    p: tuple
    beta: tuple
    d0: tuple
    d1: tuple
    amplitude: tuple
    c: float = 1.0
    R0: float = 1.0
    t_max: float = 40.0
    dx: float = 0.02
    refine: bool = True
    eps: float = 0.5
    workers: int = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        version = data.pop("schema", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported scan schema {version!r}; expected {SCHEMA_VERSION}")
        known = {f for f in cls.__dataclass_fields__} | {"m"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown scan keys: {', '.join(unknown)}")
        if ("M" in data) == ("m" in data):
            raise ConfigError("give exactly one of 'M' (curved mass) or 'm' (mass)")
        if "m" in data:
            masses = _floats(data.pop("m"), "m")
            data["M"] = [math.sqrt(max(0.25 - m * m, 0.0)) if m <= 0.5 else -1.0 for m in masses]
        axes = {}
        for name in ("M", "p", "beta", "d0", "d1", "amplitude"):
            if name not in data:
                raise ConfigError(f"scan spec is missing {name!r}")
            axes[name] = tuple(_dedupe(_floats(data.pop(name), name), name))
        for name in ("c", "R0", "t_max", "dx", "eps"):
            if name in data:
                data[name] = float(data[name])
        if data.get("workers") is not None:
            data["workers"] = int(data["workers"])
        spec = cls(**axes, **data)
        if spec.t_max <= 0 or spec.dx <= 0 or spec.R0 <= 0 or spec.c <= 0:
            raise ConfigError("t_max, dx, R0 and c must be positive")
        return spec

    def points(self):
        for M, p, beta, amp, d1, d0 in itertools.product(
            self.M, self.p, self.beta, self.amplitude, self.d1, self.d0
        ):
            yield {"M": M, "p": p, "beta": beta, "amplitude": amp, "d1": d1, "d0": d0}


@dataclass
class RunRecord:
    M: float
    p: float
    beta: float
    c: float
    d0: float
    d1: float
    amplitude: float
    status: str
    m: float = None
    T_est: float = None
    T_err: float = None
    certificate: str = ""
    certificate_holds: bool = None
    detail: str = ""
    elapsed_s: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def predicts_blowup(self):
        return bool(self.certificate_holds)

    def csv_row(self):
        row = asdict(self)
        return [_fmt(row[k]) for k in CSV_FIELDS]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def attach_certificate(M, q_eff, gamma, eps):
    """Lemma certificate matching the weight: small-energy for M > 0, power law for M = 0."""
    if M > 0:
        cert = check_lemma_small_energy(M, gamma, q_eff, eps=eps)
    else:
        cert = check_kato_power(gamma, q_eff)
    return cert.lemma, cert.holds


def run_point(spec, point):
    """One grid point; failures come back as records, never as exceptions."""
    start = time.perf_counter()
    rec = RunRecord(
        M=point["M"], p=point["p"], beta=point["beta"], c=spec.c, d0=point["d0"], d1=point["d1"],
        amplitude=point["amplitude"], status="inconclusive",
    )
    try:
        params = PhysicalParams.from_curved_mass(point["M"], p=point["p"], beta=point["beta"])
    except DomainError as exc:
        rec.status = "skipped"
        rec.detail = f"invalid parameters: {exc}"
        return rec
    rec.m = params.m
    try:
        gamma = GammaSchedule.power_exp(spec.c, point["d0"], point["d1"])
        rec.certificate, rec.certificate_holds = attach_certificate(params.M, params.q_eff, gamma, spec.eps)
        data = CauchyData(point["amplitude"], point["amplitude"], spec.R0)
        grid = Grid1D.around_data(spec.R0, spec.dx, spec.t_max)
        _, _, report = solve_fd(data, grid, params, gamma, record_stride=8, refine=spec.refine)
        rec.status = report.status
        rec.T_est = report.T_est
        rec.T_err = report.T_err
        rec.detail = ALIVE_LABEL if report.status == "alive" else report.detail
    except Exception as exc:  # crash isolation: the sweep goes on
        rec.status = "inconclusive"
        rec.detail = f"{type(exc).__name__}: {exc}"
        rec.extra["traceback"] = traceback.format_exc(limit=3)
    rec.elapsed_s = time.perf_counter() - start
    return rec


def _run_job(job):
    return run_point(*job)


def worker_count(requested=None):
    cap = os.environ.get("DSKG_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"DSKG_THREADS must be an integer, got {cap!r}") from exc
    return max(1, n)


def run_scan(spec, runner=_run_job):
    """All grid points, in grid order."""
    jobs = [(spec, pt) for pt in spec.points()]
    workers = worker_count(spec.workers)
    if workers == 1 or len(jobs) <= 1:
        return [runner(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(runner, jobs))


def boundary_summary(records):
    """Empirical ``d0`` threshold per ``(M, p, beta, amplitude, d1)`` slice.

    The threshold is the midpoint between the largest alive ``d0`` and the
    smallest blow-up ``d0`` above it, compared with ``-M (p (beta + 1) - 1)``.
    """
    slices = {}
    for r in records:
        slices.setdefault((r.M, r.p, r.beta, r.amplitude, r.d1), []).append(r)
    out = []
    for (M, p, beta, amp, d1), recs in sorted(slices.items()):
        recs = sorted(recs, key=lambda r: r.d0)
        d0s = [r.d0 for r in recs]
        cell = min((b - a for a, b in zip(d0s, d0s[1:])), default=math.nan)
        predicted = -M * (p * (beta + 1.0) - 1.0)
        alive = [r.d0 for r in recs if r.status == "alive"]
        blow = [r.d0 for r in recs if r.status == "blowup"]
        lo = max(alive) if alive else None
        above = [d for d in blow if lo is None or d > lo]
        hi = min(above) if above else None
        monotone = not any(d < lo for d in blow) if lo is not None else True
        if lo is not None and hi is not None:
            threshold = 0.5 * (lo + hi)
        else:
            threshold = None
        distance = abs(threshold - predicted) if threshold is not None else None
        band_ok = True
        for r in recs:
            if r.status in ("inconclusive",) and threshold is not None:
                band_ok = band_ok and abs(r.d0 - threshold) <= cell
        out.append({
            "M": M, "p": p, "beta": beta, "amplitude": amp, "d1": d1,
            "predicted_d0": predicted,
            "last_alive_d0": lo,
            "first_blowup_d0": hi,
            "empirical_d0": threshold,
            "distance": distance,
            "cell": cell,
            "within_one_cell": distance is not None and distance <= cell,
            "monotone_in_d0": monotone,
            "inconclusive_on_band_only": band_ok,
            "alive_label": ALIVE_LABEL,
        })
    return out


def concordance_violations(records):
    """Records whose certificate predicts finite lifespan but whose run stayed alive."""
    return [r for r in records if r.predicts_blowup and r.status == "alive"]


def records_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def records_json(records, summary):
    payload = {
        "schema": SCHEMA_VERSION,
        "records": [{k: v for k, v in asdict(r).items() if k != "extra"} for r in records],
        "summary": summary,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def record_from_dict(data):
    fields = {k: data[k] for k in RunRecord.__dataclass_fields__ if k in data and k != "extra"}
    return RunRecord(**fields)


def emit_plotdata(records, path):
    """Phase-diagram rows ``(M, p, beta, amplitude, d1, d0, code, T_est)``.

    ``code`` is 1 for blow-up, 0 for alive, -1 inconclusive, -2 skipped.
    """
    rows = sorted(records, key=lambda r: (r.M, r.p, r.beta, r.amplitude, r.d1, r.d0))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(PLOT_FIELDS)
        for r in rows:
            writer.writerow([_fmt(r.M), _fmt(r.p), _fmt(r.beta), _fmt(r.amplitude), _fmt(r.d1),
                             _fmt(r.d0), STATUS_CODE[r.status], _fmt(r.T_est)])
    return path
