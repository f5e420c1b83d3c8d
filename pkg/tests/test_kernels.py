from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qedneg.kernels import (
    FieldPoint,
    FieldStrength,
    hadamard_kernel,
    lw_field_batch,
    lw_fields,
    retarded_times,
    solve_retarded_time,
)
from qedneg.trajectories import BumpProfile, WorldlineBranch, build_scenario

E = math.sqrt(4 * math.pi / 137)


def static(origin=(0.0, 0.0, 0.0)):
    return WorldlineBranch("R", 0.0, BumpProfile((0.0, 0.0, 0.0), 1.0), origin)


def bump(L=0.3, axis=(1.0, 0.0, 0.0)):
    return WorldlineBranch("R", 0.0, BumpProfile(tuple(L * np.asarray(axis)), 1.0))


def test_kernel_coincident_time():
    assert hadamard_kernel(0.0, 1.0, 0.0) == pytest.approx(1 / (2 * math.pi**2))
    assert hadamard_kernel(0.0, 1.0, 0.0) == pytest.approx(0.050660, abs=1e-6)


def test_kernel_against_complex_arithmetic():
    z = 1.0 - 0.1j
    expected = 2 * (1 / -(z**2)).real / (4 * math.pi**2)
    assert hadamard_kernel(1.0, 0.0, 0.1) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(-0.04917, abs=5e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 5), st.floats(1e-3, 1))
def test_kernel_even_in_time(dt, r, eps):
    assert hadamard_kernel(dt, r, eps) == hadamard_kernel(-dt, r, eps)


def test_kernel_light_cone_rejected():
    with pytest.raises(ValueError):
        hadamard_kernel(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        hadamard_kernel(0.0, 1.0, -0.1)


def test_static_retarded_time():
    assert solve_retarded_time(static(), FieldPoint(10.0, (3.0, 0.0, 0.0))) == pytest.approx(7.0, abs=1e-12)


def test_retarded_time_bisection_oracle():
    from scipy.optimize import brentq

    b = bump()
    x = np.array([5.0, 0.0, 0.0])
    for t in (5.2, 5.5, 5.9):
        f = lambda tr: t - tr - np.linalg.norm(x - b.position_fn(np.array([tr]))[0])
        oracle = brentq(f, t - 10, t, xtol=1e-15)
        assert solve_retarded_time(b, FieldPoint(t, tuple(x))) == pytest.approx(oracle, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 3))
def test_retarded_time_monotone_in_t(x, y, z, dist):
    b = bump()
    p = np.array([x, y, z])
    p = p / max(np.linalg.norm(p), 1e-9) * dist + [0.1, 0, 0]
    t = np.linspace(-1, 4, 60)
    tr = retarded_times(b, t, np.tile(p, (60, 1)))
    assert np.all(np.diff(tr) >= -1e-13)


def test_coulomb_limit():
    A, Fv, Fa = lw_fields(static(), FieldPoint(3.0, (2.0, 0.0, 0.0)), E)
    assert A[0] == pytest.approx(-E / (4 * math.pi * 2.0))
    assert np.linalg.norm(Fv.E) == pytest.approx(E / (4 * math.pi * 4.0), rel=1e-14)
    # static limit: F^{0i} = -d_i A^0
    h = 1e-5
    Ap = lw_fields(static(), FieldPoint(3.0, (2.0 + h, 0.0, 0.0)), E)[0][0]
    Am = lw_fields(static(), FieldPoint(3.0, (2.0 - h, 0.0, 0.0)), E)[0][0]
    assert Fv.E[0] == pytest.approx(-(Ap - Am) / (2 * h), rel=1e-8)
    assert not np.any(Fa.E) and not np.any(Fa.B)


def test_on_worldline_rejected():
    with pytest.raises(ValueError):
        lw_fields(static(), FieldPoint(1.0, (0.0, 0.0, 0.0)), E)


def test_field_strength_matrix_round_trip():
    rng = np.random.default_rng(0)
    f = FieldStrength(rng.normal(size=3), rng.normal(size=3))
    F = f.matrix()
    np.testing.assert_array_equal(F, -F.T)
    g = FieldStrength.from_matrix(F)
    np.testing.assert_allclose(g.E, f.E)
    np.testing.assert_allclose(g.B, f.B)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.2, 4.0), st.integers(0, 2**32 - 1))
def test_acceleration_field_transverse(tr, R, seed):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    b = bump(0.3, (0.6, 0.8, 0.0))
    x = b.position_fn(np.array([tr]))[0] + R * n
    f = lw_field_batch(b, np.array([tr + R]), x[None, :], E)
    ea, ba = f.Fa.E[0], f.Fa.B[0]
    assert abs(n @ ea) <= 1e-10 * np.linalg.norm(ea)
    assert abs(n @ ba) <= 1e-10 * np.linalg.norm(ba)


def test_maxwell_source_free_by_finite_differences():
    b = bump()
    x0 = np.array([0.4, 0.7, -0.2])
    t0 = 1.1
    h = 1e-4

    def F(t, x):
        f = lw_field_batch(b, np.array([t]), x[None, :], E)
        return (f.Fv + f.Fa).matrix()[0]

    div = np.zeros(4)
    for mu in range(4):
        dt = h if mu == 0 else 0.0
        dx = np.zeros(3)
        if mu:
            dx[mu - 1] = h
        div += (F(t0 + dt, x0 + dx)[mu] - F(t0 - dt, x0 - dx)[mu]) / (2 * h)
    scale = np.abs(F(t0, x0)).max() / np.linalg.norm(x0 - b.position_fn(np.array([t0]))[0])
    assert np.abs(div).max() <= 1e-5 * scale


def test_distance_scaling_of_field_parts():
    b = bump(0.3, (1.0, 0.0, 0.0))
    n = np.array([0.0, 1.0, 0.0])
    d = np.geomspace(1.0, 100.0, 9)
    tr = 0.3
    x = b.position_fn(np.array([tr]))[0] + d[:, None] * n
    f = lw_field_batch(b, tr + d, x, E)
    sv = np.polyfit(np.log(d), np.log(np.linalg.norm(f.Fv.E, axis=1)), 1)[0]
    sa = np.polyfit(np.log(d), np.log(np.linalg.norm(f.Fa.E, axis=1)), 1)[0]
    assert sv == pytest.approx(-2.0, rel=0.01)
    assert sa == pytest.approx(-1.0, rel=0.01)


def test_retarded_time_residual_on_scenario_points():
    s = build_scenario("parallel_delayed", 0.1, 1.0, 5.0)
    t = np.linspace(5.0, 6.0, 50)
    x = s.particle2.R.position_fn(t)
    tr = retarded_times(s.particle1.L, t, x)
    res = t - tr - np.linalg.norm(x - s.particle1.L.position_fn(tr), axis=1)
    assert np.abs(res).max() <= 1e-12
