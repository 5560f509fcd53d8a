"""Tail-ratio evaluation and relative tail-thickness classification."""

import math

import numpy as np
import pytest

from herdlearn import (
    GaussianFamilyParams,
    InvalidParameterError,
    LlrModel,
    NormalCdf,
    Verdict,
    classify_empirical,
    classify_gaussian,
    classify_mixture,
    make_gaussian_model,
    tail_ratios,
)

import oracles


class TestTailRatios:
    def test_domain(self, gauss_fat):
        with pytest.raises(InvalidParameterError):
            tail_ratios(gauss_fat, -0.5)

    def test_frozen_value(self, gauss_fat):
        # log L_b(8) = log Phi(-2) - log Phi(-3) for sigma=1, tau=2.
        _, log_l_b, _, _ = tail_ratios(gauss_fat, 8.0)
        assert log_l_b == pytest.approx(oracles.LOG_L_B_AT_8_SIGMA1_TAU2, abs=1e-11)

    def test_mixture_floor(self, mixture_half):
        xs = np.linspace(0.0, 120.0, 200)
        _, log_l_b, log_r_g, _ = tail_ratios(mixture_half, xs)
        assert np.all(log_l_b >= math.log(0.5) - 1e-12)
        assert np.all(log_r_g >= math.log(0.5) - 1e-12)

    def test_symmetric_noise_mirrors(self, gauss_fat):
        # m0 = 0 makes all three laws symmetric, so L_b(x) = R_g(x).
        xs = np.linspace(0.0, 150.0, 100)
        log_l_g, log_l_b, log_r_g, log_r_b = tail_ratios(gauss_fat, xs)
        np.testing.assert_allclose(log_l_b, log_r_g, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(log_l_g, log_r_b, rtol=1e-12, atol=1e-12)

    def test_finite_everywhere(self, gauss_fat, gauss_thin, gauss_boundary, mixture_half):
        xs = np.linspace(0.0, 200.0, 64)
        for model in (gauss_fat, gauss_thin, gauss_boundary, mixture_half):
            for values in tail_ratios(model, xs):
                assert np.all(np.isfinite(values))


class TestClassifyGaussian:
    def test_fatter(self):
        result = classify_gaussian(GaussianFamilyParams(sigma=1.0, tau=2.0))
        assert result.verdict is Verdict.FATTER
        assert result.authoritative

    def test_thinner(self):
        result = classify_gaussian(GaussianFamilyParams(sigma=1.0, tau=0.5))
        assert result.verdict is Verdict.THINNER

    def test_neither_with_shifted_mean(self):
        result = classify_gaussian(GaussianFamilyParams(sigma=1.0, tau=1.0, m0=0.3))
        assert result.verdict is Verdict.NEITHER

    def test_mean_never_changes_verdict(self):
        for m0 in (-2.0, -0.5, 0.0, 0.5, 2.0):
            assert (
                classify_gaussian(GaussianFamilyParams(1.0, 2.0, m0)).verdict
                is Verdict.FATTER
            )
            assert (
                classify_gaussian(GaussianFamilyParams(1.0, 0.5, m0)).verdict
                is Verdict.THINNER
            )

    def test_evidence_shape(self):
        result = classify_gaussian(GaussianFamilyParams(1.0, 2.0), n_grid=32)
        assert result.evidence.shape == (32, 5)


class TestClassifyMixture:
    def test_always_fatter_with_exact_floor(self, mixture_half):
        result = classify_mixture(0.5, mixture_half)
        assert result.verdict is Verdict.FATTER
        assert result.epsilon_estimate == pytest.approx(0.5)
        assert result.authoritative


class TestClassifyEmpirical:
    def test_validation(self, gauss_fat):
        with pytest.raises(InvalidParameterError):
            classify_empirical(gauss_fat, x_max=0.0)
        with pytest.raises(InvalidParameterError):
            classify_empirical(gauss_fat, x_max=100.0, n_grid=8)

    def test_mixture_is_fatter_with_half_floor(self, mixture_half):
        result = classify_empirical(mixture_half, x_max=200.0)
        assert result.verdict is Verdict.FATTER
        assert result.epsilon_estimate >= 0.5 - 1e-9

    def test_first_order_dominant_noise_is_thinner(self, gauss_fat):
        # Noise that first-order dominates the good informative law:
        # Normal(3, 4) against the sigma=1 pair.
        model = LlrModel(
            cdf_g=gauss_fat.cdf_g,
            cdf_b=gauss_fat.cdf_b,
            cdf_0=NormalCdf(3.0, 2.0),
            jump_decreasing=True,
        )
        result = classify_empirical(model, x_max=200.0)
        assert result.verdict is Verdict.THINNER

    def test_equal_variance_is_undetermined(self, gauss_boundary):
        result = classify_empirical(gauss_boundary, x_max=200.0)
        assert result.verdict is Verdict.UNDETERMINED
        assert not result.authoritative

    def test_agrees_with_closed_form_away_from_boundary(self):
        rng = np.random.default_rng(57)
        for _ in range(50):
            sigma = rng.uniform(0.5, 2.0)
            gap = rng.uniform(0.1, 1.5) * (1 if rng.random() < 0.5 else -1)
            tau = max(sigma + gap, 0.05)
            if abs(tau - sigma) <= 0.1:
                continue
            m0 = rng.uniform(-1.5, 1.5)
            params = GaussianFamilyParams(sigma=sigma, tau=tau, m0=m0)
            closed = classify_gaussian(params).verdict
            empirical = classify_empirical(
                make_gaussian_model(params), x_max=200.0
            ).verdict
            assert closed is empirical, (sigma, tau, m0, closed, empirical)

    def test_monotone_separation_for_fatter(self):
        # tau > sigma: log L_b runs away along the grid.
        params = GaussianFamilyParams(sigma=1.0, tau=2.0)
        result = classify_empirical(make_gaussian_model(params), x_max=120.0)
        log_l_b = result.evidence[:, 1]
        assert log_l_b[-1] - log_l_b[0] > 10.0

    def test_verdicts_are_exclusive(self, gauss_fat, gauss_thin, mixture_half):
        for model in (gauss_fat, gauss_thin, mixture_half):
            verdict = classify_empirical(model, x_max=200.0).verdict
            assert verdict in (Verdict.FATTER, Verdict.THINNER)
