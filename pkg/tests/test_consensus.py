"""Consensus-path analysis: the deterministic map, sum certificates, and
immediate-agreement bounds."""

import math

import numpy as np
import pytest

from herdlearn import (
    GaussianFamilyParams,
    InvalidParameterError,
    SumVerdict,
    consensus_path,
    divergence_test,
    eventual_monotonicity_threshold,
    immediate_agreement_prob,
    jump_b,
    make_gaussian_model,
    phi,
)
from herdlearn.consensus import tail_sum_upper_bound
from herdlearn.dynamics import R_CAP

import oracles


class TestPhi:
    def test_at_zero(self, gauss_fat):
        assert phi(gauss_fat, 0.0) == pytest.approx(oracles.JUMP_G_AT_0_SIGMA1, abs=1e-12)

    def test_at_minus5(self, gauss_fat):
        assert phi(gauss_fat, -5.0) == pytest.approx(
            -5.0 + oracles.JUMP_G_AT_M5_SIGMA1, abs=1e-10
        )

    def test_mirror_of_b_jump(self, gauss_fat):
        assert phi(gauss_fat, 0.0) == pytest.approx(
            -(0.0 + float(jump_b(gauss_fat, 0.0))), abs=1e-12
        )


class TestConsensusPath:
    def test_first_three_values(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 3)
        np.testing.assert_allclose(
            path.values,
            [0.0, oracles.JUMP_G_AT_0_SIGMA1, oracles.PATH3_SIGMA1],
            atol=1e-12,
        )
        assert not path.absorbed

    def test_mirrored_is_negated(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 50)
        np.testing.assert_array_equal(path.mirrored().values, -path.values)

    def test_strictly_increasing(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 500)
        assert np.all(np.diff(path.values) > 0)

    def test_prior_shifted_start(self, gauss_fat):
        path = consensus_path(gauss_fat, -3.0, 10)
        assert path.values[0] == -3.0
        assert path.values[1] == pytest.approx(phi(gauss_fat, -3.0), abs=0.0)

    def test_absorption_at_cap(self, gauss_fat):
        path = consensus_path(gauss_fat, R_CAP, 3)
        assert path.absorbed
        assert np.all(np.abs(path.values) <= R_CAP)

    def test_validation(self, gauss_fat):
        with pytest.raises(InvalidParameterError):
            consensus_path(gauss_fat, 0.0, 0)
        with pytest.raises(InvalidParameterError):
            consensus_path(gauss_fat, math.inf, 5)


class TestDivergenceTest:
    def test_fatter_noise_diverges(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 2000)
        result = divergence_test(gauss_fat, path, "0", "left")
        assert result.verdict is SumVerdict.DIVERGES
        assert result.partial_sums[-1] >= 20.0

    def test_thinner_noise_converges_with_certificate(self, gauss_thin):
        path = consensus_path(gauss_thin, 0.0, 3000)
        result = divergence_test(gauss_thin, path, "0", "left")
        assert result.verdict is SumVerdict.CONVERGES
        assert result.tail_bound < 1e-9

    def test_wrong_state_tail_diverges_structurally(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 1000)
        result = divergence_test(gauss_fat, path, "b", "left")
        assert result.verdict is SumVerdict.DIVERGES
        assert math.isinf(result.sum_lower_bound)

    def test_right_tail_of_good_state_matches_by_symmetry(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 1000)
        result = divergence_test(gauss_fat, path, "g", "right")
        assert result.verdict is SumVerdict.DIVERGES
        assert math.isinf(result.sum_lower_bound)

    def test_boundary_is_inconclusive(self, gauss_boundary):
        path = consensus_path(gauss_boundary, 0.0, 5000)
        result = divergence_test(gauss_boundary, path, "0", "left")
        assert result.verdict is SumVerdict.INCONCLUSIVE

    def test_prior_independence_of_convergence(self, gauss_thin):
        """Convergence from one start implies it from the uniform start."""
        for start in (2.0, 0.0, -1.0):
            path = consensus_path(gauss_thin, start, 4000)
            result = divergence_test(gauss_thin, path, "0", "left")
            assert result.verdict is SumVerdict.CONVERGES, start

    def test_partial_sums_monotone_in_noise_spread(self, gauss_fat):
        """Widening the noise law only raises the left-tail partial sums."""
        path = consensus_path(gauss_fat, 0.0, 400)
        previous = None
        for tau in (0.6, 1.0, 1.5, 2.0):
            model = make_gaussian_model(GaussianFamilyParams(sigma=1.0, tau=tau))
            sums = divergence_test(model, path, "0", "left").partial_sums
            if previous is not None:
                assert np.all(sums >= previous - 1e-12)
            previous = sums

    def test_empty_path_rejected(self, gauss_fat):
        path = consensus_path(gauss_fat, 0.0, 1)
        stub = type(path)(initial_r=0.0, values=np.array([]), absorbed=False)
        with pytest.raises(InvalidParameterError):
            divergence_test(gauss_fat, stub, "0", "left")


class TestTailBoundSoundness:
    """The certified remainder bound must dominate the true remainder."""

    @pytest.mark.parametrize("tau,horizon", [(0.5, 2000), (0.6, 20000)])
    def test_bound_dominates_brute_force_tail(self, tau, horizon):
        model = make_gaussian_model(GaussianFamilyParams(sigma=1.0, tau=tau))
        extended = consensus_path(model, 0.0, horizon + 300_000)
        rs = extended.values
        h = np.exp(np.asarray(model.log_tail("0", "left", rs)))
        brute_tail = float(h[horizon:].sum())
        rho = phi(model, float(rs[horizon - 1]))
        bound = tail_sum_upper_bound(model, "0", "left", rho)
        assert math.isfinite(bound)
        assert brute_tail <= bound, (brute_tail, bound)
        assert bound < 1e-6

    def test_bound_requires_monotone_jump_flag(self, gauss_thin):
        stripped = type(gauss_thin)(
            cdf_g=gauss_thin.cdf_g,
            cdf_b=gauss_thin.cdf_b,
            cdf_0=gauss_thin.cdf_0,
            jump_decreasing=False,
        )
        assert math.isinf(tail_sum_upper_bound(stripped, "0", "left", 8.0))


class TestImmediateAgreement:
    def test_wrong_state_run_has_probability_zero(self, gauss_fat):
        estimate = immediate_agreement_prob(gauss_fat, "b", 0.0, 1000)
        assert estimate.diverged
        assert estimate.lower == 0.0
        assert estimate.upper == 0.0

    def test_thin_noise_bracket_is_tight(self, gauss_thin):
        estimate = immediate_agreement_prob(gauss_thin, "0", 0.0, 10_000)
        assert estimate.lower > 0.0
        assert estimate.upper - estimate.lower < 1e-6
        assert not estimate.diverged

    def test_good_state_from_strong_prior(self, gauss_fat):
        estimate = immediate_agreement_prob(gauss_fat, "g", 10.0, 1000)
        assert estimate.lower >= 0.99

    def test_positive_from_moderate_prior(self, gauss_fat):
        # A herd on the correct action has positive probability from a
        # favourable start.
        estimate = immediate_agreement_prob(gauss_fat, "g", 2.0, 2000)
        assert estimate.lower > 0.0

    def test_truncated_product_frozen_value(self, gauss_thin):
        estimate = immediate_agreement_prob(gauss_thin, "0", 0.0, 20)
        assert estimate.truncated_product == pytest.approx(
            oracles.ALL_G_20_PRODUCT_SIGMA1_TAU05, abs=1e-12
        )

    def test_product_sum_duality(self):
        """diverged is set exactly when the companion sum test diverges."""
        for sigma, tau, regime in [
            (1.0, 2.0, "0"),
            (1.0, 0.5, "0"),
            (1.0, 2.0, "b"),
            (1.0, 0.5, "g"),
        ]:
            model = make_gaussian_model(GaussianFamilyParams(sigma=sigma, tau=tau))
            path = consensus_path(model, 0.0, 2000)
            verdict = divergence_test(model, path, regime, "left").verdict
            estimate = immediate_agreement_prob(model, regime, 0.0, 2000)
            assert estimate.diverged == (verdict is SumVerdict.DIVERGES)

    def test_mirror_symmetry(self, gauss_fat):
        """An all-B run judged by F_g equals an all-G run judged by F_b."""
        horizon = 500
        path = consensus_path(gauss_fat, 0.0, horizon)
        mirrored = path.mirrored()
        # Factor per step is F_g(-r_t^b); log_tail("left") maps x to F(-x).
        log_all_b_under_g = float(
            np.sum(np.asarray(gauss_fat.log_tail("g", "left", mirrored.values)))
        )
        estimate = immediate_agreement_prob(gauss_fat, "b", 0.0, horizon)
        assert log_all_b_under_g == pytest.approx(
            math.log(estimate.truncated_product), rel=1e-9
        )

    def test_bracket_ordering(self, gauss_fat, gauss_thin):
        for model, regime in [(gauss_fat, "0"), (gauss_thin, "0"), (gauss_fat, "g")]:
            estimate = immediate_agreement_prob(model, regime, 0.0, 500)
            assert 0.0 <= estimate.lower <= estimate.upper <= 1.0


class TestEventualMonotonicity:
    def test_gaussian_map_is_monotone_from_the_left_edge(self, gauss_fat):
        threshold = eventual_monotonicity_threshold(gauss_fat, 50.0)
        assert threshold is not None
        assert threshold == pytest.approx(-50.0)

    def test_grid_property_beyond_threshold(self, gauss_fat):
        threshold = eventual_monotonicity_threshold(gauss_fat, 30.0)
        xs = np.linspace(threshold, 30.0, 2000)
        phis = xs + np.asarray(
            gauss_fat.log_tail("g", "right", -xs)
        ) - np.asarray(gauss_fat.log_tail("b", "right", -xs))
        assert np.all(np.diff(phis) >= -1e-12)

    def test_validation(self, gauss_fat):
        with pytest.raises(InvalidParameterError):
            eventual_monotonicity_threshold(gauss_fat, -1.0)
