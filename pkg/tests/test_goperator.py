import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dskg.errors import DomainError
from dskg.goperator import (
    SourceField,
    apply_G_1d,
    apply_G_radial_3d,
    moment_of_G,
    radial_wave_mean,
)
from dskg.descent import DimensionConstants, wave_mean
from dskg.quadrature import adaptive_gl
from oracles import bump_source, moment_pair


def _ones(radial=False, support=50.0):
    return SourceField(lambda y, b: np.ones(np.broadcast(y, b).shape), support=support, radial=radial)


def test_zero_time():
    assert apply_G_1d(bump_source(), 0.1, 0.0, 0.3) == 0.0
    assert apply_G_radial_3d(_ones(radial=True), 0.2, 0.0, 0.3) == 0.0


def test_half_mass_constant_source_closed_form():
    t = 2.0
    assert apply_G_1d(_ones(), 0.0, t, 0.5) == pytest.approx(4.0 * (math.cosh(t / 2) - 1.0), rel=1e-9)


def test_quadratic_start():
    f = bump_source()
    g1 = apply_G_1d(f, 0.0, 1e-2, 0.4, tol=1e-12)
    g2 = apply_G_1d(f, 0.0, 2e-2, 0.4, tol=1e-12)
    assert g2 / g1 == pytest.approx(4.0, rel=2e-2)


def test_moment_law_single_source():
    lhs, rhs = moment_pair(bump_source(0.1, 0.6), 1.3, 0.3)
    assert abs(lhs - rhs) <= 1e-6 * abs(rhs)


@pytest.mark.parametrize("x", [2.5, -2.2])
def test_causality(x):
    f = bump_source(0.0, 0.5)
    t = 1.0
    assert abs(x) - f.support > 1.0 - math.exp(-t)
    assert apply_G_1d(f, x, t, 0.3) == 0.0


def test_value_just_inside_reach_is_positive():
    f = bump_source(0.0, 0.5, wobble=0.0)
    t = 1.0
    assert apply_G_1d(f, 0.5 + 0.9 * (1.0 - math.exp(-t)), t, 0.3) > 0.0


@settings(max_examples=15)
@given(st.floats(-1.5, 1.5), st.floats(0.05, 2.0), st.floats(0.0, 1.5))
def test_positivity_preserved(x, t, M):
    f = bump_source(0.2, 0.4, wobble=0.5)
    assert apply_G_1d(f, x, t, M, tol=1e-7) >= -1e-12


def test_moment_of_G_examples():
    assert moment_of_G(0.0, 1.5, 0.3) == 0.0
    assert moment_of_G(1.0, 1.5, 0.0) == pytest.approx(1.5**2 / 2, rel=1e-12)
    assert moment_of_G(1.0, 1.5, 1.0) == pytest.approx(math.cosh(1.5) - 1.0, rel=1e-12)
    assert moment_of_G(lambda b: np.exp(-b), 2.0, 0.0) == pytest.approx(1.0 + math.exp(-2.0), rel=1e-12)


def test_radial_constant_source_drops_space():
    M, t = 0.4, 1.2
    expected = moment_of_G(1.0, t, M)
    for rho in (0.0, 0.3):
        assert apply_G_radial_3d(_ones(radial=True, support=10.0), rho, t, M) == pytest.approx(expected, rel=1e-8)


def test_radial_requires_radial_source():
    with pytest.raises(DomainError):
        apply_G_radial_3d(_ones(), 0.1, 1.0, 0.3)


@pytest.mark.parametrize("rho,r", [(0.0, 0.05), (0.0, 0.3), (0.2, 0.05), (0.2, 0.3)])
def test_radial_wave_mean_matches_sphere_quadrature(rho, r):
    src = SourceField(lambda s, b: np.exp(-np.asarray(s) ** 2 / 0.1) + 0 * np.asarray(b), radial=True)
    d3 = DimensionConstants.for_dimension(3)
    ref = wave_mean(lambda p: np.exp(-np.sum(p * p, axis=-1) / 0.1), np.array([0.0, 0.0, rho]), r, d3)
    assert radial_wave_mean(src, rho, np.array(r), 0.0) == pytest.approx(ref, rel=1e-7, abs=1e-10)


def test_radial_gaussian_moment():
    src = SourceField(lambda s, b: np.exp(-np.asarray(s) ** 2 / 0.1) + 0 * np.asarray(b), radial=True)
    M, t = 0.4, 1.2
    total = adaptive_gl(
        lambda rs: 4 * np.pi * rs**2 * np.array([apply_G_radial_3d(src, r, t, M, 1e-10) for r in rs]),
        0.0, 3.0, tol=1e-9,
    ).value
    assert total == pytest.approx(moment_of_G((np.pi * 0.1) ** 1.5, t, M), rel=1e-7)


def test_grid_source_interpolates_and_infers_support():
    x = np.linspace(-2, 2, 81)
    times = np.linspace(0, 1, 11)
    vals = np.outer(np.where(np.abs(x) < 1, 1 - x**2, 0.0) ** 2, 1 + times)
    src = SourceField.from_grid(x, times, vals)
    assert src.support == pytest.approx(1.0, abs=0.06)
    assert src(np.array([0.3]), 0.55)[0] == pytest.approx((1 - 0.09) ** 2 * 1.55, rel=1e-4)
    assert src(np.array([3.0]), 0.5)[0] == 0.0
