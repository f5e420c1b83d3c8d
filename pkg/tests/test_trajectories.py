from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from qedneg.trajectories import (
    BUMP_PEAK_SPEED,
    BumpProfile,
    SplineProfile,
    WorldlineBranch,
    build_scenario,
    bump_pair,
    coupling,
    kinematics,
    validate_scenario,
)


def standard(L=0.1, T=1.0):
    return WorldlineBranch("R", 0.0, BumpProfile((L, 0.0, 0.0), T))


def test_midpoint_is_half_L():
    X, v, a = kinematics(standard(), 0.5)
    assert X[0] == pytest.approx(0.05, abs=1e-15)
    assert v[0] == pytest.approx(0.0, abs=1e-15)


def test_start_of_window():
    X, v, a = kinematics(standard(), 0.0)
    assert np.all(X == 0) and np.all(v == 0)
    # X'' = 16 L / T^2 at s = 0
    assert a[0] == pytest.approx(16 * 0.1)


def test_quarter_point_and_finite_difference():
    b = standard()
    X, v, _ = kinematics(b, 0.25)
    assert X[0] == pytest.approx(9 * 0.1 / 32, rel=1e-14)
    h = 1e-6
    fd = (b.position_fn(np.array([0.25 + h]))[0, 0] - b.position_fn(np.array([0.25 - h]))[0, 0]) / (2 * h)
    assert fd == pytest.approx(v[0], rel=1e-8)


def test_rest_outside_window():
    b = WorldlineBranch("L", 2.0, BumpProfile((0.0, -0.1, 0.0), 1.0), (1.0, 1.0, 1.0))
    for t in (-5.0, 1.9, 3.1, 40.0):
        X, v, a = kinematics(b, t)
        np.testing.assert_array_equal(X, [1.0, 1.0, 1.0])
        assert not v.any() and not a.any()


# acceleration jumps at the window edges, so keep the stencil on one side
@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.6), st.floats(0.5, 3.0), st.one_of(st.floats(-0.2, -1e-3), st.floats(1e-3, 0.999), st.floats(1.001, 1.2)))
def test_derivatives_match_finite_differences(L, T, s):
    b = WorldlineBranch("R", 0.3, BumpProfile((L, 0.5 * L, 0.0), T))
    t = 0.3 + s * T
    h = 1e-5 * T
    tt = np.array([t - h, t, t + h])
    X, v, a = b.position_fn(tt), b.velocity_fn(tt), b.acceleration_fn(tt)
    np.testing.assert_allclose((X[2] - X[0]) / (2 * h), v[1], atol=1e-7 * L / T)
    np.testing.assert_allclose((v[2] - v[0]) / (2 * h), a[1], atol=1e-6 * L / T**2)


def test_peak_speed_constant_matches_maximisation():
    res = minimize_scalar(lambda t: -abs(standard(1.0).velocity_fn(np.array([t]))[0, 0]), bounds=(0, 0.5), method="bounded",
                          options={"xatol": 1e-12})
    assert -res.fun == pytest.approx(BUMP_PEAK_SPEED, rel=1e-9)


def test_branch_symmetry_and_delay():
    s = build_scenario("linear_delayed", 0.1, 1.0, 5.0)
    t = np.linspace(-1.0, 8.0, 101)
    for pair in (s.particle1, s.particle2):
        o = np.asarray(pair.R.origin)
        np.testing.assert_array_equal(pair.R.position_fn(t) - o, -(pair.L.position_fn(t) - o))
    np.testing.assert_allclose(
        s.particle2.R.position_fn(t + 5.0), s.particle1.R.position_fn(t) + [5.0, 0, 0], rtol=0, atol=1e-15
    )


def test_linear_simultaneous_offsets():
    s = build_scenario("linear_simultaneous", 0.1, 1.0, 0.3)
    t = np.array([0.2, 0.5])
    X = standard().position_fn(t)[:, 0]
    np.testing.assert_allclose(s.particle2.R.position_fn(t)[:, 0], 0.3 + X)
    np.testing.assert_allclose(s.particle2.L.position_fn(t)[:, 0], 0.3 - X)


def test_parallel_delayed_window():
    s = build_scenario("parallel_delayed", 0.1, 1.0, 5.0)
    np.testing.assert_allclose(s.particle2.R.position_fn(np.array([5.0]))[0], [0.0, 5.0, 0.0])
    assert s.particle2.window == (5.0, 6.0)


def test_overlap_rejected():
    with pytest.raises(ValueError, match="overlap"):
        build_scenario("linear_simultaneous", 0.3, 1.0, 0.2)


def test_bad_parameters():
    with pytest.raises(ValueError):
        build_scenario("hexagonal", 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_scenario("parallel_delayed", -0.1, 1.0, 1.0)
    with pytest.raises(ValueError, match="superluminal"):
        build_scenario("parallel_delayed", 0.7, 1.0, 1.0)


def test_validate_scenario_reports():
    assert validate_scenario(build_scenario("linear_simultaneous", 0.1, 1.0, 0.3)) == []
    ok = build_scenario("parallel_simultaneous", 0.5, 1.0, 1.0)
    assert validate_scenario(ok) == []
    touching = build_scenario("parallel_simultaneous", 0.1, 1.0, 0.5)
    coincident = type(touching)(touching.particle1, touching.particle1, 0.1, 1.0, 0.0, touching.alpha, "parallel_simultaneous")
    assert any("coincident" in p for p in validate_scenario(coincident))
    s = build_scenario("linear_simultaneous", 0.5, 1.0, 0.6)
    squeezed = type(s)(s.particle1, s.particle2, 0.5, 1.0, 0.4, s.alpha, "linear_simultaneous")
    problems = validate_scenario(squeezed)
    assert any("overlap" in p for p in problems) and not any("superluminal" in p for p in problems)


def test_spline_profile_reproduces_samples():
    times = tuple(np.linspace(0.0, 1.0, 9))
    pts = tuple((float(8 * 0.1 * s**2 * (1 - s) ** 2), 0.0, 0.0) for s in times)
    b = WorldlineBranch("R", 0.0, SplineProfile(times, pts))
    np.testing.assert_allclose(b.position_fn(np.array(times))[:, 0], [p[0] for p in pts], atol=1e-15)
    assert np.all(b.velocity_fn(np.array([0.0, 1.0])) == 0)
    assert b.max_speed < 1


def test_coupling_and_pair():
    assert coupling(1 / 137) == pytest.approx(4 * math.pi / 137)
    p = bump_pair(0.1, 1.0, axis=(0.0, 0.0, 2.0))
    np.testing.assert_allclose(p.R.position_fn(np.array([0.5]))[0], [0, 0, 0.05])
