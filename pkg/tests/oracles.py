"""Independent oracles for the test suite.

Everything here is deliberately computed by a different route than the
library: extended-precision mpmath for normal tails, and the full
four-hypothesis posterior for the decision rule.
"""

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 50


def normal_log_cdf(x: float, mean: float = 0.0, sd: float = 1.0) -> float:
    z = (mp.mpf(x) - mp.mpf(mean)) / mp.mpf(sd)
    return float(mp.log(mp.ncdf(z)))


def normal_log_sf(x: float, mean: float = 0.0, sd: float = 1.0) -> float:
    z = (mp.mpf(x) - mp.mpf(mean)) / mp.mpf(sd)
    return float(mp.log(mp.ncdf(-z)))


def normal_cdf(x: float, mean: float = 0.0, sd: float = 1.0) -> float:
    return float(mp.ncdf((mp.mpf(x) - mp.mpf(mean)) / mp.mpf(sd)))


def mills_log_cdf_3term(x: float) -> float:
    """Asymptotic log Phi(-x) for large x via the three-term Mills series."""
    return float(
        -(x * x) / 2.0
        - math.log(x * math.sqrt(2.0 * math.pi))
        + math.log(1.0 - x**-2 + 3.0 * x**-4)
    )


def four_state_actions(
    r: np.ndarray,
    llr: np.ndarray,
    q: np.ndarray,
    info_mean: float,
    info_sd: float,
    noise_mean: np.ndarray,
    noise_sd: np.ndarray,
) -> np.ndarray:
    """Actions from the full posterior over (informativeness, payoff state).

    The history enters through the public LLR r (the log ratio of the two
    informative-hypothesis weights) and an arbitrary informativeness
    weight q; the uninformative hypotheses keep a uniform payoff-state
    split, which is why their density contributions cancel.  Returns a
    boolean array, True where the chosen action is G.
    """

    ld = np.longdouble

    def normal_pdf(x, mean, sd):
        z = (ld(x) - ld(mean)) / ld(sd)
        return np.exp(-z * z / 2) / (ld(sd) * np.sqrt(2 * ld(np.pi)))

    w_good = ld(q) / (1 + np.exp(-ld(r)))
    w_bad = ld(q) / (1 + np.exp(ld(r)))
    w_noise = (1 - ld(q)) / 2
    common = w_noise * normal_pdf(llr, noise_mean, noise_sd)
    score_good = w_good * normal_pdf(llr, info_mean, info_sd) + common
    score_bad = w_bad * normal_pdf(llr, -info_mean, info_sd) + common
    return score_good >= score_bad


# Frozen constants, all computed with mpmath at 50 digits.
PHI_MINUS_1 = 0.15865525393145705
PHI_PLUS_1 = 0.84134474606854295
LOG_PHI_MINUS_1 = -1.8410216450092635
LOG_PHI_MINUS_101 = -5106.0341570556379747
LOG_PHI_MINUS_1414 = -999706.17311687981
JUMP_G_AT_0_SIGMA1 = 1.6682678659858136
JUMP_G_AT_M5_SIGMA1 = 5.6601209075202031
Q3_AFTER_GG_SIGMA1_TAU2 = 0.57141295878869215
MIX_ALPHA03_CDF0_AT_M4 = 0.11146364716150896
LOG_L_B_AT_8_SIGMA1_TAU2 = 2.8245418878283176
PATH3_SIGMA1 = 2.4687916925214598
ALL_G_20_PRODUCT_SIGMA1_TAU05 = 0.47196155205056649
