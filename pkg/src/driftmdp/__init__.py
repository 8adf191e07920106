"""Online Markov decision processes against scripted adversaries.

A library and CLI for simulating finite MDPs whose transition model and
loss table change every round, learners that lazily switch among a
finite policy class with multiplicative-weight guarantees, uniform-
mixing certification, and epsilon-covers of the continuous policy
space, plus a Monte Carlo harness that measures regret against the
theory bounds.
"""

from ._backend import BACKEND_NAME
from .adversary import (
    AdversaryScript,
    MaterializedAdversary,
    emit,
    expert_stream,
    precompute,
)
from .core import (
    LossFunction,
    Policy,
    ProblemShape,
    StateDistribution,
    TransitionMatrix,
    TransitionModel,
    enumerate_deterministic_policies,
    expected_loss,
    induce_transition_matrix,
    l1_distance,
    policy_distance,
    propagate,
    sample_action,
    sample_next_state,
)
from .cover import (
    CoverSpec,
    build_cover,
    cover_regret_bound,
    lipschitz_check,
    policy_value,
    round_to_grid,
)
from .experts import (
    ExpertState,
    ewa_choose,
    ewa_update,
    initial_state,
    learning_rate,
    run_ewa,
    run_sd,
    sd_choose,
    sd_update,
)
from .harness import (
    GameTrace,
    RegretReport,
    comparator_losses,
    fast_game_trace,
    monte_carlo,
    regret_report,
    run_game,
    script_certificate,
    simulation_tables,
    theory_bounds,
)
from .mixing import (
    MixingCertificate,
    MixingRefutation,
    MixingRefutedError,
    certify_mixing,
    contraction_coefficient,
    smooth_model,
    verify_contraction_empirically,
)
from .sdmdp import EwaMdpLearner, SdMdpLearner

__version__ = "0.1.0"

__all__ = [
    "AdversaryScript",
    "BACKEND_NAME",
    "CoverSpec",
    "EwaMdpLearner",
    "ExpertState",
    "GameTrace",
    "LossFunction",
    "MaterializedAdversary",
    "MixingCertificate",
    "MixingRefutation",
    "MixingRefutedError",
    "Policy",
    "ProblemShape",
    "RegretReport",
    "SdMdpLearner",
    "StateDistribution",
    "TransitionMatrix",
    "TransitionModel",
    "build_cover",
    "certify_mixing",
    "comparator_losses",
    "contraction_coefficient",
    "cover_regret_bound",
    "emit",
    "fast_game_trace",
    "enumerate_deterministic_policies",
    "ewa_choose",
    "ewa_update",
    "expected_loss",
    "expert_stream",
    "induce_transition_matrix",
    "initial_state",
    "l1_distance",
    "learning_rate",
    "lipschitz_check",
    "monte_carlo",
    "policy_distance",
    "policy_value",
    "precompute",
    "propagate",
    "regret_report",
    "round_to_grid",
    "run_ewa",
    "run_game",
    "run_sd",
    "sample_action",
    "sample_next_state",
    "script_certificate",
    "sd_choose",
    "sd_update",
    "simulation_tables",
    "smooth_model",
    "theory_bounds",
    "verify_contraction_empirically",
]
