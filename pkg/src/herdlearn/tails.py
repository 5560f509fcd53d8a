"""Relative tail thickness of the uninformative signal law.

Whether an outside observer can ever learn that the source is uninformative
comes down to how the tails of the noise law compare with the tails of the
informative laws.  This module evaluates the four log tail-ratios, applies
the closed-form variance rule for the Gaussian family, and offers a
finite-grid heuristic classifier for arbitrary models.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beliefs import (
    ArrayLike,
    GaussianFamilyParams,
    InvalidParameterError,
    LlrModel,
    make_gaussian_model,
)

__all__ = [
    "Verdict",
    "TailClassification",
    "tail_ratios",
    "classify_gaussian",
    "classify_mixture",
    "classify_empirical",
]

# Trend threshold for the heuristic classifier: least-squares slope of a
# log-ratio (per unit x) smaller than this in magnitude counts as flat.
TREND_SLOPE_TOL = 1e-3


class Verdict(str, enum.Enum):
    FATTER = "Fatter"
    THINNER = "Thinner"
    NEITHER = "Neither"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class TailClassification:
    """Outcome of a tail comparison.

    evidence is a (n, 5) array with columns x, log L_b, log R_g, log L_g,
    log R_b.  epsilon_estimate, when present, is a lower bound on the
    constant in the fatter-tails definition (Fatter) or on the constant
    whose reciprocal bounds the ratio (Thinner).  authoritative marks
    closed-form verdicts; grid-based ones are advisory.
    """

    verdict: Verdict
    evidence: np.ndarray
    epsilon_estimate: Optional[float] = None
    authoritative: bool = False

    EVIDENCE_COLUMNS = ("x", "log_L_b", "log_R_g", "log_L_g", "log_R_b")


def tail_ratios(model: LlrModel, x: ArrayLike) -> tuple:
    """(log L_g, log L_b, log R_g, log R_b) at x >= 0.

    L_t(x) = F_0(-x) / F_t(-x) and R_t(x) = (1-F_0(x)) / (1-F_t(x)); each
    is a difference of stable log tails, finite for all finite x because
    the three laws are mutually absolutely continuous.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise InvalidParameterError("tail ratios are defined for x >= 0")
    left_0 = np.asarray(model.log_tail("0", "left", x))
    right_0 = np.asarray(model.log_tail("0", "right", x))
    log_l_g = left_0 - np.asarray(model.log_tail("g", "left", x))
    log_l_b = left_0 - np.asarray(model.log_tail("b", "left", x))
    log_r_g = right_0 - np.asarray(model.log_tail("g", "right", x))
    log_r_b = right_0 - np.asarray(model.log_tail("b", "right", x))
    if np.ndim(x) == 0:
        return (float(log_l_g), float(log_l_b), float(log_r_g), float(log_r_b))
    return (log_l_g, log_l_b, log_r_g, log_r_b)


def _evidence_grid(model: LlrModel, x_max: float, n_grid: int) -> np.ndarray:
    xs = np.geomspace(1.0, x_max, n_grid)
    log_l_g, log_l_b, log_r_g, log_r_b = tail_ratios(model, xs)
    return np.column_stack([xs, log_l_b, log_r_g, log_l_g, log_r_b])


def classify_gaussian(
    params: GaussianFamilyParams, x_max: float = 200.0, n_grid: int = 64
) -> TailClassification:
    """Closed-form rule for the Gaussian family: the variances decide.

    The noise law has fatter tails iff tau > sigma and thinner iff
    tau < sigma; equal variances give neither.  The mean m0 only shifts
    the law and cannot change the tail order.  This verdict is exact;
    the attached grid is illustration, not evidence.
    """
    model = make_gaussian_model(params)
    evidence = _evidence_grid(model, x_max, n_grid)
    if abs(params.tau - params.sigma) < 1e-12:
        verdict = Verdict.NEITHER
    elif params.tau > params.sigma:
        verdict = Verdict.FATTER
    else:
        verdict = Verdict.THINNER
    return TailClassification(verdict=verdict, evidence=evidence, authoritative=True)


def classify_mixture(
    alpha: float, model: LlrModel, x_max: float = 200.0, n_grid: int = 64
) -> TailClassification:
    """Closed-form rule for mixture noise: always fatter.

    With F_0 = alpha*F_g + (1-alpha)*F_b, dropping one term gives
    L_b >= 1-alpha and R_g >= alpha pointwise, so the fatter-tails
    condition holds with epsilon = min(alpha, 1-alpha) exactly.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    evidence = _evidence_grid(model, x_max, n_grid)
    return TailClassification(
        verdict=Verdict.FATTER,
        evidence=evidence,
        epsilon_estimate=min(alpha, 1.0 - alpha),
        authoritative=True,
    )


def _slope(xs: np.ndarray, ys: np.ndarray) -> float:
    """Least-squares slope of ys against xs."""
    x_c = xs - xs.mean()
    return float(np.dot(x_c, ys - ys.mean()) / np.dot(x_c, x_c))


def classify_empirical(
    model: LlrModel, x_max: float, n_grid: int = 64
) -> TailClassification:
    """Finite-grid heuristic: trend of the log tail-ratios on the top half.

    Fatter needs both log L_b and log R_g non-decreasing (slope above
    -TREND_SLOPE_TOL) on the top half of a geometric grid; thinner needs
    log L_g or log R_b decisively decreasing.  This reports finite-grid
    evidence only -- it cannot certify an asymptotic statement, so anything
    ambiguous comes back Undetermined with the grid attached.
    """
    if not x_max > 0:
        raise InvalidParameterError(f"x_max must be positive, got {x_max}")
    if n_grid < 16:
        raise InvalidParameterError(f"n_grid must be >= 16, got {n_grid}")
    evidence = _evidence_grid(model, x_max, n_grid)
    top = evidence[n_grid // 2 :]
    xs = top[:, 0]
    slope_l_b = _slope(xs, top[:, 1])
    slope_r_g = _slope(xs, top[:, 2])
    slope_l_g = _slope(xs, top[:, 3])
    slope_r_b = _slope(xs, top[:, 4])

    fatter = slope_l_b >= -TREND_SLOPE_TOL and slope_r_g >= -TREND_SLOPE_TOL
    thinner = slope_l_g <= -TREND_SLOPE_TOL or slope_r_b <= -TREND_SLOPE_TOL
    if fatter and not thinner:
        eps = math.exp(float(np.minimum(top[:, 1], top[:, 2]).min()))
        return TailClassification(Verdict.FATTER, evidence, epsilon_estimate=eps)
    if thinner and not fatter:
        bounded = []
        if slope_l_g <= -TREND_SLOPE_TOL:
            bounded.append(float(top[:, 3].max()))
        if slope_r_b <= -TREND_SLOPE_TOL:
            bounded.append(float(top[:, 4].max()))
        # Largest witness on the grid; saturates to inf when the bounded
        # ratio has already vanished there.
        with np.errstate(over="ignore"):
            eps = float(np.exp(-max(bounded)))
        return TailClassification(Verdict.THINNER, evidence, epsilon_estimate=eps)
    return TailClassification(Verdict.UNDETERMINED, evidence)
