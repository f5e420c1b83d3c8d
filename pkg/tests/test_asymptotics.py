from __future__ import annotations

import math
import warnings

import pytest

from qedneg import asymptotics as asy
from qedneg.functionals import phi
from qedneg.trajectories import DEFAULT_ALPHA, build_scenario, coupling

E2 = coupling(DEFAULT_ALPHA)


def case(config, regime, L, D, T=1.0):
    return asy.RegimeCase(config, regime, L, T, D)


def quiet(c):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", asy.RegimeWarning)
        return asy.closed_forms(c)


def test_linear_far_lambda():
    b, lam = asy.closed_forms(case("linear", "D_gg_T_gg_L", 0.1, 5.0))
    expected = 16 * E2 / (3 * math.pi**2) * 0.01 - 16 * E2 / (315 * math.pi) * 0.01 / 125
    assert lam == pytest.approx(expected, rel=1e-14)
    assert lam > 0
    assert b.method_tags["source"] == "closed_form"


def test_parallel_far_phase_term():
    b, lam = asy.closed_forms(case("parallel", "D_gg_T_gg_L", 0.1, 5.0))
    half = 16 * E2 / (3 * math.pi**2) * 0.01
    assert half - lam == pytest.approx(16 * E2 / (105 * math.pi) * 0.01 / 5, rel=1e-14)


def test_linear_mid_phase_value():
    b, _ = quiet(case("linear", "T_gg_D_gg_L", 0.01, 0.1))
    assert b.phi == pytest.approx(64 * E2 / (315 * math.pi) * 1e-4 * (1e3 + 60), rel=1e-14)
    assert b.phi == pytest.approx(6.29e-4, rel=1e-3)


def test_gamma_self_closed_form_regime_independent():
    values = {quiet(case(c, r, 0.1, 0.2))[0].gamma1 for c, r in asy._SUPPORTED}
    assert values == {asy.gamma_self_closed(0.1, 1.0)}


def test_unsupported_pair_and_bad_case():
    with pytest.raises(ValueError, match="no closed forms"):
        asy.closed_forms(case("linear", "T_gg_L_gg_D", 0.1, 0.01))
    with pytest.raises(ValueError):
        asy.RegimeCase("diagonal", "T_gg_D_gg_L", 0.1, 1.0, 0.3)
    with pytest.raises(ValueError):
        asy.RegimeCase("linear", "T_gg_D_gg_L", 0.1, 1.0, -0.3)


def test_regime_warning_when_scales_close():
    with pytest.warns(asy.RegimeWarning, match="D/L"):
        asy.closed_forms(case("linear", "T_gg_D_gg_L", 0.1, 0.2))
    with warnings.catch_warnings():
        warnings.simplefilter("error", asy.RegimeWarning)
        asy.closed_forms(case("linear", "D_gg_T_gg_L", 0.1, 5.0))


def test_coulomb_far_field_example():
    phi_c, neg = asy.coulomb_phase(0.01, 1.0, 0.1)
    assert phi_c == pytest.approx(asy.coulomb_far_phase(0.01, 1.0, 0.1), rel=0.05)
    assert neg == 0.5 * abs(math.sin(phi_c / 2))


def test_coulomb_trivial_and_overlap():
    assert asy.coulomb_phase(0.0, 1.0, 0.3) == (0.0, 0.0)
    with pytest.raises(ValueError, match="overlap"):
        asy.coulomb_phase(0.3, 1.0, 0.2)


def test_coulomb_monotone_in_D():
    vals = [asy.coulomb_phase(0.1, 1.0, D)[0] for D in (0.25, 0.4, 0.55, 0.7, 0.85, 1.0)]
    assert all(a > b > 0 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("D", [0.15, 0.3, 0.8])
def test_coulomb_matches_nonrel_method(D):
    s = build_scenario("linear_simultaneous", 0.1, 1.0, D)
    assert asy.coulomb_phase(0.1, 1.0, D)[0] == pytest.approx(phi(s, "nonrel").value, rel=1e-9)


def test_decoherence_estimates():
    n, var = asy.decoherence_estimates(0.1, 1.0)
    assert n == var == pytest.approx(E2 * 0.01)
    assert n == pytest.approx(9.17e-4, rel=1e-3)
    assert asy.decoherence_estimates(0.0, 1.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        asy.decoherence_estimates(0.1, 0.0)


def _errors(values):
    return [abs(v - 1) for v in values]


def test_parallel_near_phase_converges():
    # expansion phase over the closed form as T/D and L/D grow
    ratios = []
    for D in (0.01, 0.003, 0.001):
        b, _ = quiet(case("parallel", "T_gg_L_gg_D", 0.1, D))
        ratios.append(phi(build_scenario("parallel_simultaneous", 0.1, 1.0, D), "expansion_1c2").value / b.phi)
    e = _errors(ratios)
    assert e[0] > e[1] > e[2]


def test_parallel_far_acceleration_phase_converges():
    ratios = []
    for D in (3.0, 10.0, 30.0):
        p = phi(build_scenario("parallel_delayed", 0.01, 1.0, D), "surface")
        b, _ = asy.closed_forms(case("parallel", "D_gg_T_gg_L", 0.01, D))
        ratios.append(-p.phi_a / b.phi)
    e = _errors(ratios)
    assert e[0] > e[1] > e[2] and e[2] < 1e-6


def test_linear_near_phase_matches_closed_form_integral():
    b, _ = quiet(case("linear", "T_gg_D_sim_L", 0.1, 0.2))
    s = build_scenario("linear_simultaneous", 0.1, 1.0, 0.2)
    assert phi(s, "expansion_1c2").value == pytest.approx(b.phi, rel=1e-10)
    with pytest.raises(ValueError):
        asy.linear_near_phi(0.1, 1.0, 0.1)


def test_coulomb_far_field_gap_closes_with_L():
    gaps = [asy.coulomb_phase(L, 1.0, 0.3)[0] / asy.coulomb_far_phase(L, 1.0, 0.3) - 1 for L in (0.1, 0.05, 0.025)]
    assert gaps[0] == pytest.approx(0.090, abs=2e-3)
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[1] / gaps[2] == pytest.approx(4.0, rel=0.1)
