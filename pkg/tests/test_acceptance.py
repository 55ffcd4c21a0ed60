"""End-to-end acceptance checks, one test per criterion."""

import math
import time

import numpy as np
import pytest

from dskg import lab
from dskg.blowup_ode import (
    CauchyMoments,
    ComparisonParams,
    GammaSchedule,
    MomentState,
    check_large_data_conditions,
    check_lemma_large_energy,
    integrate_moment_ode,
    lifespan_upper_bound,
    remark_solution,
)
from dskg.cone_kernel import CurvedMassCtx, kernel_moment, kernel_moment_closed_form
from dskg.descent import DimensionConstants, identity_sides
from dskg.semilinear import (
    CauchyData,
    Grid1D,
    PhysicalParams,
    delta0_from_support,
    holder_lower_bound_check,
    run_fd,
    solve_fd,
    verify_moment_law,
)
from oracles import bump_source, moment_pair

RNG_SEED = 31415


# shared runs


@pytest.fixture(scope="session")
def linear_runs():
    params = PhysicalParams.from_curved_mass(0.4)
    data = CauchyData(1.0, 1.0)
    runs = {}
    for dx in (2e-3, 1e-3):
        grid = Grid1D.around_data(1.0, dx, 3.0, dt=dx / 2)
        runs[dx] = (params, run_fd(data, grid, params, GammaSchedule.zero(), record_stride=1))
    return runs


@pytest.fixture(scope="session")
def law_runs():
    params = PhysicalParams.from_curved_mass(0.4)
    gamma = GammaSchedule.constant(1.0)
    out = {}
    for dx in (4e-2, 2e-2, 1e-2, 5e-3):
        grid = Grid1D.around_data(1.0, dx, 2.0)
        out[dx] = (params, gamma, run_fd(CauchyData(1.0, 1.0), grid, params, gamma))
    return out


@pytest.fixture(scope="session")
def theorem_run():
    params = PhysicalParams(n=1, m=0.3, p=2.0, beta=0.0)
    M = params.M
    gamma = GammaSchedule.power_exp(1.0, -M * (params.p - 1.0), 3.0)
    grid = Grid1D.around_data(1.0, 2e-2, 40.0)
    track, support, report = solve_fd(CauchyData(1e-2, 1e-2), grid, params, gamma)
    return params, gamma, track, support, report


@pytest.fixture(scope="session")
def large_data_runs():
    params = PhysicalParams(n=1, m=0.3, p=2.0, beta=0.0)
    gamma = GammaSchedule.pure_exp(-1.0)
    # the solution stays inside |x| <= R0 + 1, which fixes the comparison constant
    delta0 = delta0_from_support(1, params.p, params.beta, 2.0)
    big = CauchyData(20.0, 50.0)
    certified, margins = check_large_data_conditions(-1.0, params.q_eff, delta0, CauchyMoments(big.C0, big.C1))
    runs = {}
    for label, data in (("large", big), ("small", big.scaled(1e-3))):
        grid = Grid1D.around_data(1.0, 2e-2, 15.0)
        runs[label] = solve_fd(data, grid, params, gamma)
    return params, certified, margins, runs


# criteria


def test_c01_one_dimensional_identity(verdict):
    rng = np.random.default_rng(RNG_SEED)
    start = time.perf_counter()
    worst = 0.0
    for M in (0.0, 0.1, 0.25, 0.5, 0.9, 1.5):
        for _ in range(10):
            b, t = np.sort(rng.uniform(0.0, 3.0, 2))
            num = kernel_moment(CurvedMassCtx(M), b, t, tol=1e-10)
            worst = max(worst, abs(num - kernel_moment_closed_form(M, b, t)))
    elapsed = time.perf_counter() - start
    ok = verdict(1, worst <= 1e-8 and elapsed <= 10.0, f"max residual {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c02_higher_dimensional_identities(verdict):
    rng = np.random.default_rng(RNG_SEED + 1)
    start = time.perf_counter()
    worst = 0.0
    dims3 = DimensionConstants.for_dimension(3)
    dims2 = DimensionConstants.for_dimension(2)
    for _ in range(20):
        M = rng.uniform(0.0, 1.5)
        b, t = np.sort(rng.uniform(0.0, 3.0, 2))
        for case, dims in (("ii", dims3), ("iii", dims2)):
            num, closed = identity_sides(case, M, b, t, dims=dims, tol=1e-9)
            worst = max(worst, abs(num - closed))
    elapsed = time.perf_counter() - start
    ok = verdict(2, worst <= 1e-7 and elapsed <= 60.0, f"max residual {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c03_source_moment_law(verdict):
    sources = [
        (bump_source(0.0, 0.5), 1.0, 0.0),
        (bump_source(0.1, 0.6), 1.3, 0.3),
        (bump_source(-0.4, 0.3, amp=2.0, wobble=0.8, freq=3.0), 2.0, 0.5),
        (bump_source(0.5, 0.8, wobble=-0.5, freq=0.5), 0.7, 1.0),
        (bump_source(0.0, 1.0, amp=0.5, wobble=0.0), 1.6, 0.25),
    ]
    start = time.perf_counter()
    worst = 0.0
    for f, t, M in sources:
        lhs, rhs = moment_pair(f, t, M)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    elapsed = time.perf_counter() - start
    ok = verdict(3, worst <= 1e-6 and elapsed <= 120.0, f"max relative error {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c04_exact_global_solution(verdict):
    params = ComparisonParams(0.0, 2.0, 1.0, GammaSchedule.pure_exp(-1.0))
    traj, rep = integrate_moment_ode(MomentState(1.0, 1.0), params, 10.0, tol=1e-12)
    track_err = abs(traj.F[-1] / math.exp(traj.t[-1]) - 1.0)
    t = np.linspace(0.0, 10.0, 101)
    F = remark_solution(1.0, 2.0, t)
    residual = float(np.max(np.abs(F - np.exp(-t) * F**2) / F))
    ok = rep.status == "alive" and track_err <= 1e-6 and residual <= 1e-10
    verdict(4, ok, f"relative error at t=10 {track_err:.2e}, analytic residual {residual:.1e}")
    assert ok


def test_c05_certificate_soundness(verdict):
    rng = np.random.default_rng(RNG_SEED + 5)
    draws = 0
    worst = 0.0
    failures = []
    while draws < 60:
        q = rng.uniform(1.5, 4.0)
        M = rng.choice([0.0, rng.uniform(0.0, 1.0)])
        delta0 = 10 ** rng.uniform(-1, 0.5)
        if rng.integers(2):
            gamma = GammaSchedule.pure_exp(-rng.uniform(0.0, 1.0))
        else:
            gamma = GammaSchedule.power_exp(rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5), rng.uniform(-2, 2))
        params = ComparisonParams(M, q, delta0, gamma)
        if gamma.monotonicity() == "mixed":
            continue
        Fa = 10 ** rng.uniform(0, 2)
        Fdot = math.sqrt(2.0 / (q + 1) * delta0 * gamma(0.0) * Fa ** (q + 1)) * rng.uniform(1.0, 3.0)
        if not check_lemma_large_energy(params, 0.0, Fa, Fdot, search_horizon=50.0).holds:
            continue
        draws += 1
        T_up = lifespan_upper_bound(params, 0.0, Fa)
        _, rep = integrate_moment_ode(MomentState(Fa, Fdot), params, 2 * T_up + 1)
        if rep.status != "blowup" or rep.T_est > 1.05 * T_up:
            failures.append((params, Fa, Fdot, rep))
        else:
            worst = max(worst, rep.T_est / T_up)
    ok = not failures
    verdict(5, ok, f"{draws} certified draws, {len(failures)} counterexamples, max T_est/T_upper {worst:.4f}")
    assert ok, failures


def test_c06_linear_moment(verdict, linear_runs):
    errs = {}
    for dx, (params, run) in linear_runs.items():
        tr = run.track
        exact = np.cosh(params.M * tr.t) + np.sinh(params.M * tr.t) / params.M
        errs[dx] = float(np.max(np.abs(tr.F - exact)))
    ratio = errs[2e-3] / errs[1e-3]
    ok = errs[1e-3] <= 1e-3 and 3.5 <= ratio <= 4.5
    verdict(6, ok, f"error {errs[1e-3]:.2e} at dx=1e-3, refinement ratio {ratio:.2f}")
    assert ok


def test_c07_moment_law_residual_order(verdict, law_runs):
    res = [verify_moment_law(run.track, params, gamma) for params, gamma, run in law_runs.values()]
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    alive = all(run.blowup_time is None for _, _, run in law_runs.values())
    ok = alive and min(orders) >= 1.8
    verdict(7, ok, "residuals " + ", ".join(f"{r:.2e}" for r in res) + "; orders "
            + ", ".join(f"{o:.2f}" for o in orders))
    assert ok


def test_c08_small_data_blowup_reproduction(verdict, theorem_run):
    _, _, _, _, report = theorem_run
    rel = report.T_err / report.T_est if report.status == "blowup" else math.inf
    ok = report.status == "blowup" and rel <= 0.02
    verdict(8, ok, f"{report.status}, T_est {report.T_est}, dx vs dx/2 spread {rel:.2%}")
    assert ok


def test_c09_large_data_blowup_reproduction(verdict, large_data_runs):
    _, certified, margins, runs = large_data_runs
    big = runs["large"][2]
    small = runs["small"][2]
    ok = certified and big.status == "blowup" and small.status == "alive"
    verdict(9, ok, f"certificate {certified} (margins {margins['kinetic']:.1f}, {margins['potential']:.1f}); "
            f"large data {big.status} at T_est {big.T_est}; scaled data {small.status} to t=15")
    assert ok


def test_c10_holder_bridge(verdict, linear_runs, law_runs, theorem_run, large_data_runs):
    checks = []
    for params, run in linear_runs.values():
        checks.append(holder_lower_bound_check(run.track, run.support, params))
    for params, _, run in law_runs.values():
        checks.append(holder_lower_bound_check(run.track, run.support, params))
    params, _, track, support, _ = theorem_run
    checks.append(holder_lower_bound_check(track, support, params))
    params, _, _, runs = large_data_runs
    for track, support, _ in runs.values():
        checks.append(holder_lower_bound_check(track, support, params))
    ok = all(checks)
    verdict(10, ok, f"{sum(checks)}/{len(checks)} acceptance runs satisfy the bound at every recorded step")
    assert ok


def test_c11_borderline_map(verdict):
    spec = lab.ScanSpec.from_dict({
        "schema": 1, "M": 0.5, "p": 2, "beta": 0,
        "d0": [-1.0, -0.75, -0.5, -0.25, 0.0], "d1": [0.0, 1.0, 2.0, 3.0, 4.0],
        "amplitude": 1e-3, "t_max": 40.0, "dx": 0.02,
    })
    start = time.perf_counter()
    records = lab.run_scan(spec)
    summary = {row["d1"]: row for row in lab.boundary_summary(records)}
    row = summary[3.0]
    band_ok = all(r["inconclusive_on_band_only"] for r in summary.values())
    concord = lab.concordance_violations(records)
    ok = row["within_one_cell"] and band_ok and not concord and len(records) == 25
    verdict(11, ok, f"d1=3 threshold {row['empirical_d0']} vs predicted {row['predicted_d0']} "
            f"(cell {row['cell']}), {len(concord)} concordance violations, {time.perf_counter() - start:.1f} s")
    assert ok
