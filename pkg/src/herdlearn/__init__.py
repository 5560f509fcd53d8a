"""Sequential social learning with a signal source of unknown informativeness.

Agents act in order on a private log-likelihood ratio plus the public belief
implied by earlier actions; an outside observer watches only the actions and
filters for whether the source is informative at all.  The package simulates
the action dynamics, runs the observer's exact filter, classifies the
relative tail thickness that governs whether the observer can ever learn,
and certifies the deterministic consensus-path sums behind that dichotomy.
"""

__version__ = "0.1.0"

from .beliefs import (
    BAD,
    GOOD,
    DistinctnessError,
    GaussianFamilyParams,
    InvalidParameterError,
    LlrModel,
    MixtureCdf,
    NormalCdf,
    WorldState,
    log_tail,
    make_gaussian_model,
    make_mixture_model,
    sample_llr,
    sample_world,
)
from .consensus import (
    AgreementEstimate,
    ConsensusPath,
    DivergenceResult,
    SumVerdict,
    consensus_path,
    divergence_test,
    eventual_monotonicity_threshold,
    immediate_agreement_prob,
    phi,
)
from .dynamics import (
    PublicBelief,
    Trajectory,
    agent_action,
    jump_b,
    jump_g,
    simulate_trajectory,
    update_public,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentResult,
    GaussianSpec,
    MixtureSpec,
    build_model,
    run_experiment,
    same_variance_experiment,
)
from .observer import (
    ObserverState,
    batch_posterior,
    history_log_prob,
    observer_init,
    observer_update,
    replay,
)
from .tails import (
    TailClassification,
    Verdict,
    classify_empirical,
    classify_gaussian,
    classify_mixture,
    tail_ratios,
)
