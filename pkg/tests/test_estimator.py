import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contivote.estimator import (
    EtaBarResolution,
    PopulationSpec,
    UndefinedEstimateError,
    confidence_interval,
    resolve_eta_bar,
    rmse_curve,
    rmse_curve_csv,
    simulate_tally,
    stderr_indexes,
)
from contivote.indexes import InvariantViolation, Tally

# z(0.95), frozen from standard normal tables.
Z_95 = 1.9599639845400545


class TestPopulationSpec:
    def test_probability_bounds(self):
        with pytest.raises(InvariantViolation):
            PopulationSpec(p_plus=0.7, p_minus=0.4)
        with pytest.raises(InvariantViolation):
            PopulationSpec(p_plus=-0.1, p_minus=0.2)

    def test_derived_constants(self):
        spec = PopulationSpec(p_plus=0.4, p_minus=0.1)
        assert spec.true_alpha == pytest.approx(0.3)
        assert spec.true_gamma == pytest.approx(0.5)
        assert spec.p_zero == pytest.approx(0.5)


class TestStderr:
    def test_all_indifferent_sample_has_zero_error(self):
        se_alpha, se_gamma = stderr_indexes(Tally("a", 0, 0, 50))
        assert se_alpha == 0.0
        assert se_gamma == 0.0

    def test_split_sample_analytic_value(self):
        se_alpha, se_gamma = stderr_indexes(Tally("a", 50, 50, 100))
        assert se_alpha == pytest.approx(0.1)
        assert se_gamma == 0.0  # gamma_hat = 1 exactly

    def test_boundary_sample_has_zero_plugin_variance(self):
        se_alpha, _ = stderr_indexes(Tally("a", 100, 0, 100))
        assert se_alpha == 0.0

    def test_unexhibited_raises(self):
        with pytest.raises(UndefinedEstimateError):
            stderr_indexes(Tally("a"))

    def test_split_sample_value_matches_monte_carlo(self):
        # 1e5 simulated tallies of eta=100 draws from p+=p-=0.5; the
        # empirical stdev of alpha_hat is the oracle for the 0.1 claim.
        rng = np.random.default_rng(20260811)
        draws = rng.multinomial(100, [0.5, 0.5, 0.0], size=100_000)
        alpha_hat = (draws[:, 0] - draws[:, 1]) / 100.0
        empirical = float(np.std(alpha_hat))
        assert abs(empirical - 0.1) / 0.1 < 0.03

    @given(st.integers(1, 30), st.integers(0, 30), st.integers(0, 30), st.integers(1, 6))
    @settings(max_examples=200)
    def test_nonincreasing_in_eta_for_fixed_ratio(self, base_eta, plus, minus, scale):
        if plus + minus > base_eta:
            return
        small = Tally("a", plus, minus, base_eta)
        large = Tally("a", plus * scale, minus * scale, base_eta * scale)
        se_small = stderr_indexes(small)
        se_large = stderr_indexes(large)
        assert se_large[0] <= se_small[0] + 1e-12
        assert se_large[1] <= se_small[1] + 1e-12

    def test_vanishes_as_eta_grows(self):
        ses = [stderr_indexes(Tally("a", n // 2, n // 4, n))[0] for n in (4, 400, 40_000)]
        assert ses[0] > ses[1] > ses[2]
        assert ses[2] < 0.005


class TestConfidenceInterval:
    def test_zero_stderr_collapses_interval(self):
        alpha_ci, gamma_ci = confidence_interval(Tally("a", 0, 0, 50), level=0.95)
        assert alpha_ci.lower == alpha_ci.point == alpha_ci.upper == 0.0
        assert gamma_ci.lower == gamma_ci.point == gamma_ci.upper == 0.0

    def test_split_sample_width(self):
        alpha_ci, _ = confidence_interval(Tally("a", 50, 50, 100), level=0.95)
        assert alpha_ci.point == 0.0
        assert alpha_ci.stderr == pytest.approx(0.1)
        assert alpha_ci.lower == pytest.approx(-Z_95 * 0.1, abs=1e-9)
        assert alpha_ci.upper == pytest.approx(Z_95 * 0.1, abs=1e-9)

    def test_clipping_to_natural_range(self):
        # alpha_hat = 0.95 with a wide-ish interval must clip at 1.
        tally = Tally("a", 39, 1, 40)  # alpha = 0.95, gamma = 1
        alpha_ci, gamma_ci = confidence_interval(tally, level=0.95)
        assert alpha_ci.upper == 1.0
        assert alpha_ci.lower >= -1.0
        assert gamma_ci.upper <= 1.0

    def test_level_validation(self):
        with pytest.raises(InvariantViolation):
            confidence_interval(Tally("a", 1, 0, 2), level=1.5)
        with pytest.raises(UndefinedEstimateError):
            confidence_interval(Tally("a"), level=0.9)

    def test_empirical_coverage_with_wald_slack(self):
        # 2000 simulated tallies at eta=400 from (0.4, 0.2): the 95%
        # normal-approximation interval must cover true alpha >= 90%.
        spec = PopulationSpec(0.4, 0.2)
        covered = 0
        trials = 2000
        for i in range(trials):
            tally = simulate_tally(spec, eta=400, seed=9_000 + i)
            alpha_ci, _ = confidence_interval(tally, level=0.95)
            if alpha_ci.lower <= spec.true_alpha <= alpha_ci.upper:
                covered += 1
        assert covered / trials >= 0.90


def brute_force_eta_bar(etas, fraction):
    n = len(etas)
    for t in range(0, max(etas) + 2):
        if sum(1 for e in etas if e > t) / n <= fraction:
            return t
    raise AssertionError("no candidate found")


class TestResolveEtaBar:
    def test_distinct_etas_hit_fraction_exactly(self):
        res = resolve_eta_bar(range(1, 101), 0.15)
        assert res == EtaBarResolution(eta_bar=85, achieved_fraction=0.15)

    def test_all_equal_collapses(self):
        res = resolve_eta_bar([7, 7, 7, 7, 7], 0.2)
        assert res.eta_bar == 7
        assert res.achieved_fraction == 0.0

    def test_ties_can_make_fraction_unattainable(self):
        # {10,10,10,100} with p=0.2: any cut below 100 selects 1/4 or more,
        # so the smallest valid threshold jumps to 100 with share 0.
        res = resolve_eta_bar([10, 10, 10, 100], 0.20)
        assert res.eta_bar == 100
        assert res.achieved_fraction == 0.0
        assert brute_force_eta_bar([10, 10, 10, 100], 0.20) == 100

    def test_empty_set_rejected(self):
        with pytest.raises(InvariantViolation):
            resolve_eta_bar([], 0.15)

    def test_fraction_range_enforced(self):
        with pytest.raises(InvariantViolation):
            resolve_eta_bar([1, 2, 3], 0.5)

    @given(
        st.lists(st.integers(0, 60), min_size=1, max_size=40),
        st.floats(0.10, 0.20),
    )
    @settings(max_examples=300)
    def test_minimality_against_brute_force(self, etas, fraction):
        res = resolve_eta_bar(etas, fraction)
        assert res.achieved_fraction <= fraction
        assert res.eta_bar == brute_force_eta_bar(etas, fraction)


class TestSimulateTally:
    def test_degenerate_all_approve(self):
        tally = simulate_tally(PopulationSpec(1.0, 0.0), eta=10, seed=3)
        assert (tally.v_plus, tally.v_minus, tally.eta) == (10, 0, 10)

    def test_degenerate_all_indifferent(self):
        tally = simulate_tally(PopulationSpec(0.0, 0.0), eta=7, seed=3)
        assert (tally.v_plus, tally.v_minus, tally.eta) == (0, 0, 7)

    def test_same_seed_same_tally(self):
        spec = PopulationSpec(0.3, 0.3)
        assert simulate_tally(spec, 500, seed=42) == simulate_tally(spec, 500, seed=42)

    def test_negative_eta_rejected(self):
        with pytest.raises(InvariantViolation):
            simulate_tally(PopulationSpec(0.5, 0.5), eta=-1, seed=0)


class TestRmseCurve:
    def test_zero_variance_population(self):
        rows = rmse_curve(PopulationSpec(1.0, 0.0), [1, 10, 100], trials=50, seed=5)
        assert all(r[1] == 0.0 and r[2] == 0.0 for r in rows)

    def test_inverse_sqrt_eta_scaling(self):
        rows = rmse_curve(PopulationSpec(0.5, 0.5), [100, 1600], trials=2500, seed=7)
        ratio = rows[0][1] / rows[1][1]
        assert abs(ratio - 4.0) / 4.0 < 0.15

    def test_monotone_decreasing_up_to_noise(self):
        rows = rmse_curve(PopulationSpec(0.5, 0.5), [100, 400], trials=2000, seed=8)
        assert rows[1][1] < rows[0][1]

    def test_single_trial_reproducible(self):
        a = rmse_curve(PopulationSpec(0.2, 0.1), [50], trials=1, seed=99)
        b = rmse_curve(PopulationSpec(0.2, 0.1), [50], trials=1, seed=99)
        assert a == b

    def test_validation(self):
        with pytest.raises(InvariantViolation):
            rmse_curve(PopulationSpec(0.5, 0.5), [100], trials=0, seed=1)
        with pytest.raises(InvariantViolation):
            rmse_curve(PopulationSpec(0.5, 0.5), [0], trials=10, seed=1)

    def test_csv_export_shape(self):
        rows = rmse_curve(PopulationSpec(0.4, 0.2), [10, 20], trials=5, seed=2)
        text = rmse_curve_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "eta,rmse_alpha,rmse_gamma"
        assert len(lines) == 3
        eta, rmse_a, rmse_g = lines[1].split(",")
        assert int(eta) == 10
        assert math.isfinite(float(rmse_a)) and math.isfinite(float(rmse_g))
