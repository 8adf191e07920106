"""Game loop, regret accounting and Monte Carlo aggregation.

The protocol per round: the learner lazily keeps or redraws its acting
policy, the scripted adversary reveals this round's (model, loss) pair,
the learner samples an action in its current state and pays the loss,
the state advances through the revealed model, and the learner scores
the full policy class on the revealed pair.

Regret accounting splits the realized excess loss over a comparator
policy into two parts: a drift term (realized total minus the played
policies' expected totals — the price of the learner's state law lagging
behind its policy changes) and a policy-competition term (the played
policies' expected totals minus the comparator's).  The two sum to the
regret by construction.

``run_game`` is the reference object-level loop.  ``monte_carlo`` runs
the same game through precomputed tables and the sampling backend —
valid because the adversary is oblivious, so comparator scores and
weight tables are learner-independent — and produces bit-identical
traces for the same generator.

The comparator totals used for regret are exact expectations (variance-
free); ``comparator_losses_sampled`` offers the sampled-trajectory
variant for illustration.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _backend, experts
from .adversary import AdversaryScript, precompute
from .core import (
    Policy,
    StateDistribution,
    draw_index,
    expected_loss,
    induce_transition_matrix,
    policy_stack,
    propagate,
)
from .mixing import (
    MixingCertificate,
    MixingRefutation,
    MixingRefutedError,
    certify_kernel_array,
)
from .sdmdp import comparator_step

IDENTITY_TOL = 1e-9


@dataclass
class GameTrace:
    """Per-round record of one game."""

    adversary: str
    horizon: int
    x0: int
    states: np.ndarray
    actions: np.ndarray
    policy_indices: np.ndarray
    switched: np.ndarray
    realized_losses: np.ndarray
    chosen_expected: np.ndarray  # expected loss of the acting policy each round
    seed: int | None = None

    @property
    def realized_total(self) -> float:
        return float(self.realized_losses.sum())

    @property
    def switch_count(self) -> int:
        return int(self.switched.sum())


@dataclass
class RegretReport:
    """Totals, regret decomposition and theory bound values for one trace."""

    horizon: int
    num_comparators: int
    realized_total: float
    comparator_totals: np.ndarray
    regrets: np.ndarray  # realized_total - comparator totals
    drift_term: float  # realized_total - played policies' expected total
    competition_terms: np.ndarray  # played expected total - comparator totals
    switch_count: int
    tau: float
    bound_thm2: float
    bound_thm1: float
    best_comparator: int = field(init=False)
    best_regret: float = field(init=False)

    def __post_init__(self):
        self.best_comparator = int(np.argmin(self.comparator_totals))
        self.best_regret = float(self.regrets[self.best_comparator])


def adversary_descriptor(script: AdversaryScript) -> str:
    parts = [f"kind={script.kind}", f"seed={script.seed}", f"gamma={script.gamma}"]
    if script.period is not None:
        parts.append(f"period={script.period}")
    return "adversary(" + ", ".join(parts) + ")"


@lru_cache(maxsize=16)
def script_certificate(
    script: AdversaryScript, horizon: int
) -> MixingCertificate | MixingRefutation:
    """Mixing scan over every distinct kernel a script emits up to `horizon`.

    The refutation/certificate witness model index is the 0-based round
    index of the first round using the witness kernel.
    """
    materialized = precompute(script, horizon)
    first_round: dict[bytes, int] = {}
    for t in range(materialized.horizon):
        first_round.setdefault(materialized.kernels[t].tobytes(), t)
    rounds = sorted(first_round.values())
    distinct = materialized.kernels[rounds]
    result = certify_kernel_array(distinct, script.shape)
    policy_idx, model_idx = result.witness
    witness = (policy_idx, rounds[model_idx])
    if isinstance(result, MixingRefutation):
        return MixingRefutation(delta_max=result.delta_max, witness=witness)
    return MixingCertificate(
        delta_max=result.delta_max, tau=result.tau, witness=witness
    )


def _require_certified(script: AdversaryScript, horizon: int, allow_unmixed: bool):
    result = script_certificate(script, horizon)
    if isinstance(result, MixingRefutation) and not allow_unmixed:
        raise MixingRefutedError(result)
    return result


def run_game(
    learner,
    script: AdversaryScript,
    horizon: int,
    x0: int,
    rng: np.random.Generator,
    allow_unmixed: bool = False,
) -> GameTrace:
    """Reference game loop over live learner objects.

    Per-round generator draw order (the reproducibility contract):
    policy stay/redraw decision (fresh draw only at round 1), policy
    redraw sample if the decision fell through, action, next state.
    Requires a mixing certificate for the script unless `allow_unmixed`.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if horizon > script.horizon:
        raise ValueError(f"horizon {horizon} exceeds the script horizon {script.horizon}")
    if learner.horizon != horizon:
        raise ValueError(
            f"learner tuned for horizon {learner.horizon}, game runs {horizon}"
        )
    if learner.shape != script.shape:
        raise ValueError("learner and adversary shapes do not match")
    if learner.x0 != x0:
        raise ValueError(f"learner initialized at {learner.x0}, game starts at {x0}")
    _require_certified(script, horizon, allow_unmixed)

    materialized = precompute(script, horizon)
    states = np.empty(horizon, dtype=np.int64)
    actions = np.empty(horizon, dtype=np.int64)
    policy_indices = np.empty(horizon, dtype=np.int64)
    switched = np.zeros(horizon, dtype=bool)
    realized = np.empty(horizon)
    chosen_expected = np.empty(horizon)

    state = x0
    for t in range(1, horizon + 1):
        idx, did_switch = learner.choose_policy(rng)
        model = materialized.model(t)
        loss = materialized.loss(t)
        policy = learner.policy_class[idx]
        action_cdf = np.cumsum(policy.probs[state])
        action = draw_index(action_cdf, rng.random())
        next_cdf = np.cumsum(model.kernel[state, action])
        next_state = draw_index(next_cdf, rng.random())
        scores = learner.observe(model, loss)

        states[t - 1] = state
        actions[t - 1] = action
        policy_indices[t - 1] = idx
        switched[t - 1] = did_switch
        realized[t - 1] = loss.values[state, action]
        chosen_expected[t - 1] = scores[idx]
        state = next_state

    return GameTrace(
        adversary=adversary_descriptor(script),
        horizon=horizon,
        x0=x0,
        states=states,
        actions=actions,
        policy_indices=policy_indices,
        switched=switched,
        realized_losses=realized,
        chosen_expected=chosen_expected,
    )


def comparator_losses(
    policy_class, script: AdversaryScript, horizon: int, x0: int
) -> np.ndarray:
    """Exact expected loss of each class policy at each round, as (N, T).

    Pure propagation from a shared point mass at x0; no randomness and
    no learner involvement.
    """
    stack = policy_stack(policy_class)
    num_policies = stack.shape[0]
    if horizon < 0 or horizon > script.horizon:
        raise ValueError(f"horizon {horizon} out of range 0..{script.horizon}")
    materialized = precompute(script, horizon)
    dists = np.zeros((num_policies, script.shape.num_states))
    dists[:, x0] = 1.0
    out = np.empty((num_policies, horizon))
    for t in range(horizon):
        scores, dists = comparator_step(
            stack, dists, materialized.kernels[t], materialized.losses[t]
        )
        out[:, t] = scores
    return out


def comparator_losses_sampled(
    policy_class,
    script: AdversaryScript,
    horizon: int,
    x0: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sampled-trajectory counterpart of `comparator_losses` (illustrative).

    Each policy walks one random trajectory under its own actions; entry
    (n, t) is the realized loss, whose expectation is the exact score.
    """
    materialized = precompute(script, horizon)
    out = np.empty((len(policy_class), horizon))
    for n, policy in enumerate(policy_class):
        state = x0
        for t in range(1, horizon + 1):
            action = draw_index(np.cumsum(policy.probs[state]), rng.random())
            out[n, t - 1] = materialized.losses[t - 1][state, action]
            state = draw_index(
                np.cumsum(materialized.kernels[t - 1][state, action]), rng.random()
            )
    return out


def theory_bounds(num_comparators: int, horizon: int, tau: float) -> tuple[float, float]:
    """(lazy-over-class bound with drift, drift-free experts bound)."""
    log_n = math.log(num_comparators)
    root = math.sqrt(horizon * log_n)
    return (4.0 + 2.0 * tau * tau) * root + log_n, 4.0 * root + log_n


def regret_report(
    trace: GameTrace,
    comparator_matrix: np.ndarray,
    certificate: MixingCertificate | MixingRefutation,
) -> RegretReport:
    """Totals, decomposition and bounds for one trace.

    regrets[n] = drift_term + competition_terms[n] by construction
    (associativity noise below 1e-9).  A refutation in place of a
    certificate yields tau = inf and infinite bounds (the drift part of
    the guarantee has no finite time constant to lean on).
    """
    num_comparators, horizon = comparator_matrix.shape
    if horizon != trace.horizon:
        raise ValueError("comparator matrix horizon does not match the trace")
    realized_total = trace.realized_total
    played_total = float(trace.chosen_expected.sum())
    comparator_totals = comparator_matrix.sum(axis=1)
    tau = certificate.tau if isinstance(certificate, MixingCertificate) else math.inf
    bound2, bound1 = theory_bounds(num_comparators, horizon, tau)
    return RegretReport(
        horizon=horizon,
        num_comparators=num_comparators,
        realized_total=realized_total,
        comparator_totals=comparator_totals,
        regrets=realized_total - comparator_totals,
        drift_term=realized_total - played_total,
        competition_terms=played_total - comparator_totals,
        switch_count=trace.switch_count,
        tau=tau,
        bound_thm2=bound2,
        bound_thm1=bound1,
    )


@dataclass
class SimulationTables:
    """Learner-independent tables driving the fast game path."""

    script: AdversaryScript
    horizon: int
    x0: int
    lazy: bool
    eta: float
    comparators: np.ndarray  # (N, T) exact per-round scores
    log_weights: np.ndarray  # (T+1, N)
    qcdf: np.ndarray  # (T, N)
    action_cdf: np.ndarray  # (N, X, A)
    kernel_cdf: np.ndarray  # (T, X, A, X)
    loss_table: np.ndarray  # (T, X, A)


def simulation_tables(
    policy_class,
    script: AdversaryScript,
    horizon: int,
    x0: int,
    lazy: bool = True,
) -> SimulationTables:
    """Precompute every table the sampling backend needs for one game setup."""
    stack = policy_stack(policy_class)
    materialized = precompute(script, horizon)
    comparators = comparator_losses(policy_class, script, horizon, x0)
    eta = experts.learning_rate(stack.shape[0], horizon)
    log_weights = experts.log_weight_table(
        comparators.T, eta, lazy=lazy
    )
    qcdf = experts.weight_cdf_table(log_weights[:horizon])
    return SimulationTables(
        script=script,
        horizon=horizon,
        x0=x0,
        lazy=lazy,
        eta=eta,
        comparators=comparators,
        log_weights=log_weights,
        qcdf=qcdf,
        action_cdf=np.cumsum(stack, axis=2),
        kernel_cdf=np.cumsum(materialized.kernels, axis=3),
        loss_table=materialized.losses,
    )


def fast_game_trace(
    tables: SimulationTables, rng: np.random.Generator, seed: int | None = None
) -> GameTrace:
    """Run one game through the sampling backend; draw-for-draw equal to run_game."""
    chosen, switched, states, actions, realized = _backend.simulate_game(
        tables.log_weights,
        tables.qcdf,
        tables.action_cdf,
        tables.kernel_cdf,
        tables.loss_table,
        tables.x0,
        rng,
        tables.lazy,
    )
    return GameTrace(
        adversary=adversary_descriptor(tables.script),
        horizon=tables.horizon,
        x0=tables.x0,
        states=states,
        actions=actions,
        policy_indices=chosen,
        switched=switched.astype(bool),
        realized_losses=realized,
        chosen_expected=tables.comparators[chosen, np.arange(tables.horizon)],
        seed=seed,
    )


@dataclass
class SweepRow:
    """Aggregate over seeds for one horizon: one CSV line of a sweep."""

    horizon: int
    num_seeds: int
    mean_regret: float
    stderr: float
    bound_thm2: float
    switches_mean: float
    tau: float
    mean_realized: float
    best_comparator: int


@dataclass
class SweepReport:
    rows: list[SweepRow]
    per_seed_regrets: dict[int, np.ndarray]
    per_seed_switches: dict[int, np.ndarray]
    growth_slope: float | None


def growth_slope(horizons, mean_regrets) -> float:
    """Least-squares slope of log mean-regret against log horizon."""
    horizons = np.asarray(horizons, dtype=np.float64)
    means = np.asarray(mean_regrets, dtype=np.float64)
    if len(horizons) < 2:
        raise ValueError("need at least two horizons for a growth slope")
    if np.any(means <= 0.0):
        raise ValueError("growth slope undefined for nonpositive mean regret")
    return float(np.polyfit(np.log(horizons), np.log(means), 1)[0])


def monte_carlo(config, workers: int = 1) -> SweepReport:
    """Seed-averaged regret against the best comparator over a horizon grid.

    The adversary is materialized once per horizon and shared; each seed
    owns an independent generator, so results do not depend on worker
    scheduling.  Requires at least two seeds for a standard error.
    """
    from .config import ExperimentConfig, build_policy_class, build_script

    if not isinstance(config, ExperimentConfig):
        raise TypeError("monte_carlo expects an ExperimentConfig")
    if len(config.seeds) < 2:
        raise ValueError("monte_carlo needs at least 2 seeds")
    policy_class = build_policy_class(config)
    lazy = config.learner == "sd-mdp"

    rows: list[SweepRow] = []
    per_seed_regrets: dict[int, np.ndarray] = {}
    per_seed_switches: dict[int, np.ndarray] = {}
    for horizon in config.horizons:
        script = build_script(config, horizon)
        result = _require_certified(script, horizon, config.allow_unmixed)
        tau = result.tau if isinstance(result, MixingCertificate) else math.inf
        tables = simulation_tables(policy_class, script, horizon, config.x0, lazy)
        totals = tables.comparators.sum(axis=1)
        best_idx = int(np.argmin(totals))
        best_total = float(totals[best_idx])

        def one_seed(seed: int) -> tuple[float, int]:
            trace = fast_game_trace(tables, np.random.default_rng(seed), seed)
            return trace.realized_total - best_total, trace.switch_count

        if workers > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(one_seed, config.seeds))
        else:
            outcomes = [one_seed(seed) for seed in config.seeds]
        regrets = np.array([r for r, _ in outcomes])
        switches = np.array([s for _, s in outcomes])
        bound2, _ = theory_bounds(len(policy_class), horizon, tau)
        rows.append(
            SweepRow(
                horizon=horizon,
                num_seeds=len(config.seeds),
                mean_regret=float(regrets.mean()),
                stderr=float(regrets.std(ddof=1) / math.sqrt(len(regrets))),
                bound_thm2=bound2,
                switches_mean=float(switches.mean()),
                tau=tau,
                mean_realized=float(regrets.mean() + best_total),
                best_comparator=best_idx,
            )
        )
        per_seed_regrets[horizon] = regrets
        per_seed_switches[horizon] = switches

    slope = None
    if len(rows) >= 2 and all(row.mean_regret > 0.0 for row in rows):
        slope = growth_slope(
            [row.horizon for row in rows], [row.mean_regret for row in rows]
        )
    return SweepReport(
        rows=rows,
        per_seed_regrets=per_seed_regrets,
        per_seed_switches=per_seed_switches,
        growth_slope=slope,
    )


def state_law_sequence(
    policy: Policy, script: AdversaryScript, horizon: int, x0: int
) -> list[StateDistribution]:
    """Laws of the state under one fixed policy, rounds 1..T (pre-transition)."""
    materialized = precompute(script, horizon)
    law = StateDistribution.point_mass(x0, script.shape.num_states)
    laws = []
    for t in range(1, horizon + 1):
        laws.append(law)
        law = propagate(law, induce_transition_matrix(policy, materialized.model(t)))
    return laws


def fixed_policy_expected_total(
    policy: Policy, script: AdversaryScript, horizon: int, x0: int
) -> float:
    """Σ_t expected loss of one fixed policy under its own propagated law."""
    materialized = precompute(script, horizon)
    total = 0.0
    for t, law in enumerate(
        state_law_sequence(policy, script, horizon, x0), start=1
    ):
        total += expected_loss(law, policy, materialized.loss(t))
    return total
