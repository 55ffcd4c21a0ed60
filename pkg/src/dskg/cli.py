"""``dskg`` command line.

Exit status: 0 when every check passed, 1 when a check failed, 2 for usage
or configuration errors.
"""

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import lab
from .blowup_ode import (
    CauchyMoments,
    ComparisonParams,
    GammaSchedule,
    MomentState,
    check_kato_power,
    check_large_data_conditions,
    check_lemma_large_energy,
    check_lemma_small_energy,
    integrate_moment_ode,
    lifespan_upper_bound,
)
from .cone_kernel import CurvedMassCtx, kernel_moment, kernel_moment_closed_form, kernel_values
from .descent import CASES, DimensionConstants, identity_sides
from .errors import DomainError, NumericError, PreconditionError
from .semilinear import (
    CauchyData,
    Grid1D,
    PhysicalParams,
    holder_lower_bound_check,
    run_fd,
    run_manifest,
    solve_fd,
    solve_picard,
    verify_moment_law,
    write_manifest,
)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _gamma_from_args(args):
    kind = args.gamma_kind
    if kind == "power_exp":
        return GammaSchedule.power_exp(args.c, args.d0, args.d1)
    if kind == "pure_exp":
        return GammaSchedule.pure_exp(args.rate)
    if kind == "kato_power":
        return GammaSchedule.kato_power(args.c, args.kato_q)
    raise UsageError(f"unknown weight kind {kind!r}")


def _add_gamma_args(p):
    p.add_argument("--gamma-kind", choices=("power_exp", "pure_exp", "kato_power"), default="power_exp")
    p.add_argument("--c", type=float, default=1.0, help="weight constant")
    p.add_argument("--d0", type=float, default=0.0, help="exponential rate of power_exp")
    p.add_argument("--d1", type=float, default=0.0, help="power of power_exp")
    p.add_argument("--rate", type=float, default=0.0, help="rate of pure_exp")
    p.add_argument("--kato-q", type=float, default=2.0, help="exponent of kato_power")


def _q_eff(args):
    if args.q_eff is not None:
        q = args.q_eff
    else:
        q = args.p * (args.beta + 1.0)
    if not q > 1:
        raise UsageError(f"q_eff = p(beta+1) = {q!r} must exceed 1 (the regime beta > 1/p - 1)")
    return q


def _add_exponent_args(p):
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--q-eff", type=float, default=None, help="overrides p(beta+1)")


def cmd_identity(args):
    if args.case not in CASES:
        raise UsageError(f"unknown case {args.case!r}; choose from {', '.join(CASES)}")
    base = args.case.split("_")[-1]
    dims = None
    if base != "i":
        n = args.n
        if base == "ii" and (n < 3 or n % 2 == 0):
            raise UsageError(f"case {args.case} needs odd n >= 3, got {n}")
        if base == "iii" and (n < 2 or n % 2):
            raise UsageError(f"case {args.case} needs even n >= 2, got {n}")
        dims = DimensionConstants.for_dimension(n)
    # quadrature cannot do better than ~1e-12; tighter requests just fail the comparison
    quad_tol = max(args.tol, 1e-12)
    numeric, closed = identity_sides(args.case, args.mass, args.b, args.t, dims=dims, tol=quad_tol)
    residual = abs(numeric - closed)
    ok = residual <= args.tol
    _emit({"case": args.case, "M": 0.0 if args.case.startswith("corollary") else args.mass,
           "b": args.b, "t": args.t, "n": args.n if dims else 1, "numeric": numeric,
           "closed_form": closed, "residual": residual, "tol": args.tol, "pass": ok})
    return EXIT_OK if ok else EXIT_CHECK


def cmd_kernel(args):
    rs = args.r or [0.0]
    vals = kernel_values(args.mass, args.b, args.t, np.array(rs))
    out = {"M": args.mass, "b": args.b, "t": args.t,
           "values": [{"r": r, "K": float(v)} for r, v in zip(rs, vals)]}
    ok = True
    if args.moment:
        num = kernel_moment(CurvedMassCtx(args.mass), args.b, args.t)
        closed = kernel_moment_closed_form(args.mass, args.b, args.t)
        out["moment"] = {"numeric": num, "closed_form": closed, "residual": abs(num - closed)}
        ok = abs(num - closed) <= args.tol
    _emit(out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_ode(args):
    q = _q_eff(args)
    params = ComparisonParams(args.mass, q, args.delta0, _gamma_from_args(args))
    init = MomentState(args.F0, args.Fdot0, args.t0)
    start = time.perf_counter()
    traj, report = integrate_moment_ode(init, params, args.t_max, args.tol)
    rec = {"params": {"M": args.mass, "q_eff": q, "delta0": args.delta0, "gamma": params.gamma.to_dict()},
           "init": {"F": args.F0, "Fdot": args.Fdot0, "t": args.t0},
           "classification": report.to_dict(), "elapsed_s": time.perf_counter() - start}
    if report.status == "alive":
        rec["classification"]["label"] = lab.ALIVE_LABEL
        t = np.array(traj.t)
        F = np.array(traj.F)
        tail = (t >= 0.5 * t[-1]) & (F > 0)
        if np.count_nonzero(tail) >= 2:
            rate, _ = np.polyfit(t[tail], np.log(F[tail]), 1)
            rec["exponential_fit_rate"] = float(rate)
    ok = True
    if args.F0 > 0 and args.Fdot0 >= 0:
        try:
            cert = check_lemma_large_energy(params, args.t0, args.F0, args.Fdot0)
            rec["large_energy_certificate"] = cert.to_dict()
            if cert.holds:
                rec["T_upper"] = lifespan_upper_bound(params, args.t0, args.F0)
                rec["T_est"] = report.T_est
                ok = report.status == "blowup" and report.T_est <= rec["T_upper"] * 1.05
        except PreconditionError as exc:
            rec["large_energy_certificate"] = {"skipped": str(exc)}
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            traj.write_csv(fh)
    _emit(rec)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_certify(args):
    q = _q_eff(args)
    gamma = _gamma_from_args(args)
    if args.lemma == "large_energy":
        params = ComparisonParams(args.mass, q, args.delta0, gamma)
        cert = check_lemma_large_energy(params, args.a, args.F_a, args.Fdot_a)
        out = cert.to_dict()
    elif args.lemma == "small_energy":
        out = check_lemma_small_energy(args.mass, gamma, q, eps=args.eps, a=args.a).to_dict()
    elif args.lemma == "kato_power":
        out = check_kato_power(gamma, q).to_dict()
    else:
        holds, margins = check_large_data_conditions(
            args.rate, q, args.delta0, CauchyMoments(args.C0, args.C1)
        )
        out = {"lemma": "large_data", "holds": holds, "margins": margins}
        if args.rate == 0:
            out["note"] = "gamma = 0 is covered by the small-energy route"
    _emit(out)
    return EXIT_OK if out["holds"] else EXIT_CHECK


PDE_DEFAULTS = {
    "physics": {"n": 1, "m": 0.0, "p": 2.0, "beta": 0.0},
    "gamma": {"kind": "power_exp", "c": 1.0, "d0": 0.0, "d1": 0.0},
    "data": {"C0": 0.0, "C1": 0.0, "R0": 1.0},
    "grid": {"dx": 0.02, "dt": None, "t_max": 10.0, "pad": 0.25},
    "record_stride": 4,
    "refine": True,
    "backend": "fd",
}


def load_pde_config(path, overrides):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if raw.get("schema") != lab.SCHEMA_VERSION:
        raise UsageError(f"unsupported pde schema {raw.get('schema')!r}; expected {lab.SCHEMA_VERSION}")
    cfg = json.loads(json.dumps(PDE_DEFAULTS))
    for key, value in raw.items():
        if key == "schema":
            continue
        if key not in cfg:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(cfg[key], dict):
            if not isinstance(value, dict):
                raise UsageError(f"config key {key!r} must be an object")
            cfg[key].update(value)
        else:
            cfg[key] = value
    for key, value in overrides.items():
        if value is None:
            continue
        section, _, name = key.partition(".")
        if name:
            cfg[section][name] = value
        else:
            cfg[section] = value
    return cfg


def _pde_objects(cfg):
    phys = dict(cfg["physics"])
    if "M" in phys:
        M = phys.pop("M")
        params = PhysicalParams.from_curved_mass(M, n=phys.get("n", 1), p=phys.get("p", 2.0),
                                                 beta=phys.get("beta", 0.0))
    else:
        params = PhysicalParams(**phys)
    gamma = GammaSchedule.from_dict(cfg["gamma"])
    data = CauchyData(**cfg["data"])
    g = cfg["grid"]
    dx = float(g["dx"])
    dt = g.get("dt")
    grid = Grid1D.around_data(data.R0, dx, float(g["t_max"]), dt=None if dt is None else float(dt),
                              pad=float(g.get("pad", 0.25)))
    return params, gamma, data, grid


def cmd_pde(args):
    overrides = {"grid.t_max": args.t_max, "grid.dx": args.dx, "backend": args.backend}
    if args.no_refine:
        overrides["refine"] = False
    cfg = load_pde_config(args.config, overrides)
    try:
        params, gamma, data, grid = _pde_objects(cfg)
    except (DomainError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid pde config: {exc}") from exc
    start = time.perf_counter()
    stride = int(cfg["record_stride"])
    if cfg["backend"] == "picard":
        lin = run_fd(data, grid, params, GammaSchedule.zero(), stride, keep_fields=True)
        track, support, report = solve_picard(lin, grid, params, gamma)
    elif cfg["backend"] == "fd":
        track, support, report = solve_fd(data, grid, params, gamma, stride, refine=bool(cfg["refine"]))
    else:
        raise UsageError(f"unknown backend {cfg['backend']!r}")
    holder_ok = holder_lower_bound_check(track, support, params)
    residual = verify_moment_law(track, params, gamma) if report.status != "blowup" else None
    manifest = run_manifest(params, grid, gamma, data, report, extra={
        "backend": cfg["backend"], "holder_check": holder_ok, "moment_law_residual": residual,
        "elapsed_s": time.perf_counter() - start,
    })
    if report.status == "alive":
        manifest["classification"]["label"] = lab.ALIVE_LABEL
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "moments.csv", "w", newline="") as fh:
            track.write_csv(fh)
        with open(out / "manifest.json", "w") as fh:
            write_manifest(manifest, fh)
    _emit(manifest)
    return EXIT_OK if holder_ok else EXIT_CHECK


def load_scan_spec(path, workers=None, t_max=None):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scan spec {path}: {exc}") from exc
    if workers is not None:
        raw["workers"] = workers
    if t_max is not None:
        raw["t_max"] = t_max
    try:
        return lab.ScanSpec.from_dict(raw)
    except (lab.ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_scan(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = load_scan_spec(args.spec, args.workers, args.t_max)
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    records = lab.run_scan(spec)
    summary = lab.boundary_summary(records)
    if args.csv:
        Path(args.csv).write_bytes(lab.records_csv(records).encode())
    if args.json:
        Path(args.json).write_text(lab.records_json(records, summary))
    if args.plot:
        lab.emit_plotdata(records, args.plot)
    if not (args.csv or args.json):
        sys.stdout.write(lab.records_csv(records))
    bad = lab.concordance_violations(records)
    for r in bad:
        sys.stderr.write(f"certificate predicts blow-up but run stayed alive: d0={r.d0}, d1={r.d1}\n")
    return EXIT_CHECK if bad else EXIT_OK


def cmd_plotdata(args):
    try:
        payload = json.loads(Path(args.records).read_text())
        records = [lab.record_from_dict(d) for d in payload.get("records", [])]
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"cannot read records {args.records}: {exc}") from exc
    lab.emit_plotdata(records, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dskg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identity", help="check a cone-integral identity")
    p.add_argument("--case", required=True)
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("kernel", help="evaluate the cone kernel")
    p.add_argument("--mass", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, action="append")
    p.add_argument("--moment", action="store_true", help="also integrate across the cone")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("ode", help="integrate the comparison ODE")
    p.add_argument("--mass", type=float, default=0.0)
    _add_exponent_args(p)
    p.add_argument("--delta0", type=float, default=1.0)
    _add_gamma_args(p)
    p.add_argument("--F0", type=float, required=True)
    p.add_argument("--Fdot0", type=float, required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--csv", help="write the trajectory here")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("certify", help="evaluate a blow-up certificate")
    p.add_argument("--lemma", required=True, choices=("large_energy", "small_energy", "kato_power", "large_data"))
    p.add_argument("--mass", type=float, default=0.0)
    _add_exponent_args(p)
    p.add_argument("--delta0", type=float, default=1.0)
    _add_gamma_args(p)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--F-a", type=float, default=1.0)
    p.add_argument("--Fdot-a", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--C0", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=1.0)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("pde", help="run the semilinear solver from a JSON config")
    p.add_argument("config")
    p.add_argument("--t-max", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--backend", choices=("fd", "picard"))
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("scan", help="sweep the weight exponents")
    p.add_argument("spec")
    p.add_argument("--workers", type=int)
    p.add_argument("--t-max", type=float)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("plotdata", help="phase-diagram rows from a scan JSON file")
    p.add_argument("records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "certify" and args.a is None:
        args.a = None if args.lemma == "small_energy" else 0.0
    try:
        return args.func(args)
    except (UsageError, DomainError, PreconditionError) as exc:
        sys.stderr.write(f"dskg {args.command}: {exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        sys.stderr.write(f"dskg {args.command}: numerical failure: {exc}\n")
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
