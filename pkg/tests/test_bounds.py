import math

import pytest

from sops import bounds
from sops.enumeration import count_even_connected_through_edge, count_loops_through_edge


# -- convergence checks ---------------------------------------------------------------


def test_loop_coefficients_agree_with_enumerator():
    for k, v in bounds.LOOP_COUNTS.items():
        assert count_loops_through_edge(k).count == v


def test_even_set_coefficients_agree_with_enumerator():
    for k, v in bounds.EVEN_SET_COUNTS.items():
        assert count_even_connected_through_edge(k).count == v


def test_loop_check_at_large_gamma():
    for counts in (bounds.PROOF_LOOP_COUNTS, bounds.LOOP_COUNTS):
        r = bounds.kp_loop_check(4 ** 1.25, 1e-4, counts)
        assert r.passed and r.tail_valid and r.decided_by_interval
    proof = bounds.kp_loop_check(4 ** 1.25, 1e-4, bounds.PROOF_LOOP_COUNTS)
    assert proof.lhs == pytest.approx(6.144743197520221e-05, rel=1e-12)
    assert bounds.kp_loop_check(4 ** 1.25, 1e-4).lhs < proof.lhs


def test_loop_check_truncation_matters_near_the_edge():
    five = bounds.kp_loop_check(2.71, 0.05, bounds.PROOF_LOOP_COUNTS)
    six = bounds.kp_loop_check(2.71, 0.05)
    assert five.lhs == pytest.approx(0.05107475318430147, rel=1e-12) and not five.passed
    assert five.terms_through == 14
    assert six.lhs == pytest.approx(0.03386517513787445, rel=1e-12) and six.passed
    assert six.terms_through == 16


def test_default_loop_counts_agree_with_enumerator_through_sixteen():
    assert bounds.LOOP_COUNTS == {k: count_loops_through_edge(k).count for k in range(6, 17, 2)}


def test_loop_check_tail_needs_gamma_above_two_e_c():
    r = bounds.kp_loop_check(2.0, 1e-4)
    assert not r.tail_valid and not r.passed
    with pytest.raises(ValueError):
        bounds.kp_loop_check(-1.0, 1e-4)


def test_high_temperature_checks():
    r = bounds.kp_ht_check(0.0125, 1e-5)
    assert r.passed and r.lhs == pytest.approx(4.020283800719149e-06, rel=1e-12)
    assert bounds.kp_ht_check(0.1, 0.02).passed
    zero = bounds.kp_ht_check(0.0, 1e-5)
    assert zero.passed and zero.lhs == 0
    assert not bounds.kp_ht_check(0.5, 1e-5).tail_valid
    assert not bounds.kp_ht_check(0.1, 1e-5).passed
    with pytest.raises(ValueError):
        bounds.kp_ht_check(1.5, 1e-5)


def test_loop_lhs_is_decreasing_in_gamma():
    vals = [bounds.kp_loop_check(g, 1e-4).lhs for g in (3.0, 4.0, 5.0, 6.0, 8.0)]
    assert vals == sorted(vals, reverse=True)


def test_z_of_gamma():
    assert bounds.z_of_gamma(1) == 0
    assert bounds.z_of_gamma(81 / 79) == pytest.approx(1 / 80)


# -- thresholds -------------------------------------------------------------------------------


def test_large_gamma_alpha_threshold():
    a = bounds.compression_alpha_threshold(4, 8, "large_gamma")
    assert a == pytest.approx(3.5908361480323054, rel=1e-12)
    assert 2 * math.sqrt(3) * a == pytest.approx(12.4390, abs=1e-3)


def test_alpha_threshold_preconditions():
    assert bounds.compression_alpha_threshold(1, 2, "large_gamma") is None  # gamma too small
    assert bounds.compression_alpha_threshold(0.5, 6, "large_gamma") is None  # lam*gamma too small
    assert bounds.compression_alpha_threshold(6, 1, "near_one") == pytest.approx(3.2225041429, rel=1e-9)
    assert bounds.compression_alpha_threshold(6, 1.5, "near_one") is None
    assert bounds.compression_alpha_threshold(1, 1, "near_one") is None
    with pytest.raises(ValueError):
        bounds.compression_alpha_threshold(4, 8, "other")


def test_alpha_threshold_decreases_with_lambda():
    vals = [bounds.compression_alpha_threshold(lam, 8) for lam in (2, 4, 8, 16, 64)]
    assert vals == sorted(vals, reverse=True) and vals[-1] > 1


def test_separation_condition_as_stated():
    a = bounds.compression_alpha_threshold(4, 8)
    beta_star = bounds.separation_beta_threshold(a, 5 / 12, 8)
    assert beta_star == pytest.approx(190.108154022, rel=1e-9)
    assert not bounds.separation_condition(a, beta_star * 0.999, 5 / 12, 8)
    assert bounds.separation_condition(a, beta_star * 1.001, 5 / 12, 8)


def test_separation_needs_delta_above_one_third_at_gamma_eight():
    assert bounds.min_separation_delta(8) == pytest.approx(1 / 3)
    a = bounds.compression_alpha_threshold(4, 8)
    assert bounds.separation_beta_threshold(a, 0.3, 8) is None
    assert bounds.separation_beta_threshold(a, 0.34, 8) is not None


def test_separation_holds_for_huge_gamma():
    assert bounds.separation_condition(1.0, 10.0, 0.4, 1e12)


def test_separation_preconditions():
    with pytest.raises(ValueError):
        bounds.separation_condition(3.0, 10.0, 0.4, 8)  # beta <= 2 sqrt3 alpha
    with pytest.raises(ValueError):
        bounds.separation_condition(1.0, 10.0, 0.5, 8)
    with pytest.raises(ValueError):
        bounds.separation_condition(1.0, 10.0, 0.0, 8)


def test_bridge_exponent_override_reproduces_alternative_reading():
    a = bounds.compression_alpha_threshold(4, 8)
    d = 5 / 12
    beta = bounds.separation_beta_threshold(a, d, 8, bridge_exponent=(1 + 3 * d) * d / 4)
    assert beta == pytest.approx(22.5313, abs=1e-3)


# -- integration window -------------------------------------------------------------------------


def test_integration_optimum():
    eps, upper = bounds.integration_optimum()
    assert eps == pytest.approx(0.217812, abs=1e-5)
    assert upper == pytest.approx(1.02564, abs=1e-5)


def test_integration_window_at_81_over_79():
    w = bounds.integration_condition(81 / 79, 0.0)
    assert w is not None and w.eps_low < 0.22 < w.eps_high
    lo, hi = bounds.integration_gamma_bounds(0.22, 0.0)
    assert lo < 81 / 79 < hi


def test_gamma_one_is_always_feasible():
    for d in (0.0, 0.01, 0.1, 0.2, 0.24):
        assert bounds.integration_condition(1.0, d) is not None


def test_integration_infeasible_far_from_one():
    assert bounds.integration_condition(1.03, 0.0) is None
    assert bounds.integration_condition(0.97, 0.0) is None
    assert bounds.integration_condition(1.02, 0.1) is None


def test_integration_window_ends_are_sharp():
    w = bounds.integration_condition(1.02, 0.0)
    for eps, inside in [(w.eps_low + 1e-6, True), (w.eps_high - 1e-6, True),
                        (w.eps_low - 1e-4, False), (w.eps_high + 1e-4, False)]:
        lo, hi = bounds.integration_gamma_bounds(eps, 0.0)
        assert (lo < 1.02 < hi) == inside


def test_integration_preconditions():
    with pytest.raises(ValueError):
        bounds.integration_condition(1.0, 0.25)
    with pytest.raises(ValueError):
        bounds.integration_condition(0.0, 0.1)


def test_regime_report():
    r = bounds.regime_report(4, 8)
    assert r.separation_alpha_min == pytest.approx(3.5908361480323054)
    assert r.integration_alpha_min is None and r.integration_window is None
    r = bounds.regime_report(6, 1)
    assert r.separation_alpha_min is None and r.integration_window is not None
    assert '"lam": 6' in bounds.report_json(r)


def test_loop_lhs_matches_plain_float_formula():
    for gamma, c in [(4 ** 1.25, 1e-4), (2.71, 0.05), (3.3, 0.01)]:
        r = math.exp(c) / gamma
        t = 2 * r
        direct = 2 * r**6 + 10 * r**10 + 8 * r**12 + 56 * r**14 + t**16 / (1 - t * t)
        got = bounds.kp_loop_check(gamma, c, bounds.PROOF_LOOP_COUNTS).lhs
        assert got == pytest.approx(direct, rel=1e-12)
        direct = direct - t**16 / (1 - t * t) + 96 * r**16 + t**18 / (1 - t * t)
        assert bounds.kp_loop_check(gamma, c).lhs == pytest.approx(direct, rel=1e-12)


def test_ht_lhs_matches_plain_float_formula():
    for z, a in [(0.0125, 1e-5), (0.1, 0.02), (0.15, 0.001)]:
        u = z * math.exp(5 * a)
        direct = 2 * u**3 + 4 * u**4 + 10 * u**5 + (5 * u) ** 6 / (5 * (1 - 5 * u))
        assert bounds.kp_ht_check(z, a).lhs == pytest.approx(direct, rel=1e-12)
