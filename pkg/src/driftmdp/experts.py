"""Full-information expert learners with switch accounting.

Two learners over N experts, both driven by per-round loss vectors in
[0, 1]^N and both maintaining multiplicative weights in log space:

* ``ewa_*``  — exponentially weighted averaging: weights decay by
  exp(-eta * loss) and the acting expert is redrawn fresh from the
  normalized weights every round.
* ``sd_*``   — lazy-switching ("shrinking dartboard") variant: weights
  decay by (1 - eta) ** loss, and at each round the learner keeps its
  previous expert with probability equal to that expert's one-round
  weight ratio, redrawing from the normalized weights otherwise.  The
  lazy rule preserves the EWA marginals exactly while making the acting
  index change with probability at most eta per round.

A "switch" is counted when the acting index actually changes between
consecutive rounds; a redraw that lands on the same index is not a
switch.  Round 1 draws from the initial (uniform) weights and counts no
switch.

``run_sd`` / ``run_ewa`` replay a whole loss matrix through the fast
sampling backend and return per-round traces for benchmarking; they are
sample-path identical to driving the per-round functions by hand with
the same generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .core import draw_index

LOSS_TOL = 1e-9


def learning_rate(num_experts: int, horizon: int) -> float:
    """min(sqrt(ln N / T), 1/2) — the tuned rate for a known horizon."""
    if num_experts < 1 or horizon < 1:
        raise ValueError("need at least one expert and one round")
    return min(math.sqrt(math.log(num_experts) / horizon), 0.5)


@dataclass
class ExpertState:
    """Mutable learner state shared by the EWA and lazy-switching updates.

    ``log_weights`` holds the current natural-log weights, and
    ``prev_log_weights`` the weights one update earlier (used by the
    lazy stay probability).  ``round`` is the 1-based index of the round
    about to be played; ``current_expert`` is None before the first draw.
    """

    log_weights: np.ndarray
    prev_log_weights: np.ndarray
    eta: float
    current_expert: int | None = None
    round: int = 1
    switch_count: int = 0

    @property
    def num_experts(self) -> int:
        return self.log_weights.shape[0]


def initial_state(num_experts: int, eta: float) -> ExpertState:
    """Uniform-weight state at round 1."""
    if num_experts < 1:
        raise ValueError("need at least one expert")
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta!r}")
    return ExpertState(
        log_weights=np.zeros(num_experts),
        prev_log_weights=np.zeros(num_experts),
        eta=eta,
    )


def weight_cdf(log_weights: np.ndarray) -> np.ndarray:
    """Normalized cumulative weights, computed by max-shifted exponentiation."""
    w = np.exp(log_weights - log_weights.max())
    csum = np.cumsum(w)
    return csum / csum[-1]


def _check_round(state: ExpertState) -> None:
    if state.round < 1:
        raise ValueError(f"invalid state round {state.round}")


def _check_losses(state: ExpertState, losses) -> np.ndarray:
    arr = np.asarray(losses, dtype=np.float64)
    if arr.shape != (state.num_experts,):
        raise ValueError(
            f"loss vector shape {arr.shape} does not match {state.num_experts} experts"
        )
    if arr.min() < -LOSS_TOL or arr.max() > 1.0 + LOSS_TOL:
        raise ValueError("losses must lie in [0, 1]")
    return arr


def sd_choose(state: ExpertState, rng: np.random.Generator) -> tuple[int, bool]:
    """Pick the acting expert for this round under the lazy-switching rule.

    Keeps the previous expert with probability
    exp(log_weights[i] - prev_log_weights[i]) — its one-round weight
    ratio — and otherwise redraws from the normalized current weights.
    Returns (index, switched); the first round always draws fresh and
    reports switched=False.
    """
    _check_round(state)
    if state.current_expert is None:
        state.current_expert = draw_index(weight_cdf(state.log_weights), rng.random())
        return state.current_expert, False
    prev = state.current_expert
    stay = math.exp(state.log_weights[prev] - state.prev_log_weights[prev])
    if rng.random() < stay:
        return prev, False
    drawn = draw_index(weight_cdf(state.log_weights), rng.random())
    switched = drawn != prev
    if switched:
        state.switch_count += 1
        state.current_expert = drawn
    return drawn, switched


def sd_update(state: ExpertState, losses) -> ExpertState:
    """Decay weights by (1 - eta) ** loss and advance the round counter."""
    arr = _check_losses(state, losses)
    state.prev_log_weights = state.log_weights
    state.log_weights = state.log_weights + arr * math.log1p(-state.eta)
    state.round += 1
    return state


def ewa_choose(state: ExpertState, rng: np.random.Generator) -> int:
    """Fresh independent draw from the normalized weights (no laziness)."""
    _check_round(state)
    drawn = draw_index(weight_cdf(state.log_weights), rng.random())
    if state.current_expert is not None and drawn != state.current_expert:
        state.switch_count += 1
    state.current_expert = drawn
    return drawn


def ewa_update(state: ExpertState, losses) -> ExpertState:
    """Decay weights by exp(-eta * loss) and advance the round counter."""
    arr = _check_losses(state, losses)
    state.prev_log_weights = state.log_weights
    state.log_weights = state.log_weights - state.eta * arr
    state.round += 1
    return state


def regret_bound(num_experts: int, horizon: int) -> float:
    """Theory guarantee for the lazy learner: 4*sqrt(T ln N) + ln N."""
    log_n = math.log(num_experts)
    return 4.0 * math.sqrt(horizon * log_n) + log_n


def log_weight_table(loss_matrix: np.ndarray, eta: float, *, lazy: bool) -> np.ndarray:
    """Log weights after 0..T updates as a (T+1, N) table.

    Row t holds the log weights after the first t loss vectors have been
    applied; row 0 is the initial all-zeros state.  The decay factor is
    (1 - eta) ** loss for the lazy learner and exp(-eta * loss) for EWA.
    """
    rate = math.log1p(-eta) if lazy else -eta
    horizon, num_experts = loss_matrix.shape
    table = np.empty((horizon + 1, num_experts))
    table[0] = 0.0
    np.cumsum(loss_matrix * rate, axis=0, out=table[1:])
    return table


def weight_cdf_table(log_weight_rows: np.ndarray) -> np.ndarray:
    """Row-wise normalized cumulative weights for a block of log-weight rows."""
    w = np.exp(log_weight_rows - log_weight_rows.max(axis=1, keepdims=True))
    csum = np.cumsum(w, axis=1)
    return csum / csum[:, -1:]


@dataclass
class ExpertRunResult:
    """Per-round trace of one expert-learner run on a fixed loss matrix."""

    eta: float
    chosen: np.ndarray
    switched: np.ndarray
    realized: np.ndarray
    redraw_probs: np.ndarray
    cumulative_regret: np.ndarray
    total_switches: int = field(init=False)
    regret_vs_best: float = field(init=False)

    def __post_init__(self):
        self.total_switches = int(self.switched.sum())
        self.regret_vs_best = float(self.cumulative_regret[-1])


def _run_result(loss_matrix, eta, chosen, switched, redraw_probs) -> ExpertRunResult:
    horizon = loss_matrix.shape[0]
    realized = loss_matrix[np.arange(horizon), chosen]
    cum_best = np.cumsum(loss_matrix, axis=0).min(axis=1)
    cumulative = np.cumsum(realized) - cum_best
    return ExpertRunResult(
        eta=eta,
        chosen=chosen,
        switched=switched.astype(bool),
        realized=realized,
        redraw_probs=redraw_probs,
        cumulative_regret=cumulative,
    )


def run_sd(
    loss_matrix: np.ndarray, rng: np.random.Generator, eta: float | None = None
) -> ExpertRunResult:
    """Replay a (T, N) loss matrix through the lazy-switching learner.

    ``redraw_probs[t]`` is the closed-form probability 1 - stay of a
    fresh draw at round t+1 (0 for the first round, which has no lazy
    decision); it never exceeds eta.
    """
    loss_matrix = np.asarray(loss_matrix, dtype=np.float64)
    horizon, num_experts = loss_matrix.shape
    if eta is None:
        eta = learning_rate(num_experts, horizon)
    table = log_weight_table(loss_matrix, eta, lazy=True)
    qcdf = weight_cdf_table(table[:horizon])
    chosen, switched = _backend.sd_chain(table, qcdf, rng)

    redraw_probs = np.zeros(horizon)
    if horizon > 1:
        prev_idx = chosen[:-1]
        steps = np.arange(1, horizon)
        stay = np.exp(table[steps, prev_idx] - table[steps - 1, prev_idx])
        redraw_probs[1:] = 1.0 - stay
    return _run_result(loss_matrix, eta, chosen, switched, redraw_probs)


def run_ewa(
    loss_matrix: np.ndarray, rng: np.random.Generator, eta: float | None = None
) -> ExpertRunResult:
    """Replay a (T, N) loss matrix through EWA (fresh draw every round)."""
    loss_matrix = np.asarray(loss_matrix, dtype=np.float64)
    horizon, num_experts = loss_matrix.shape
    if eta is None:
        eta = learning_rate(num_experts, horizon)
    table = log_weight_table(loss_matrix, eta, lazy=False)
    qcdf = weight_cdf_table(table[:horizon])
    chosen, switched = _backend.fresh_chain(qcdf, rng)
    redraw_probs = np.ones(horizon)
    redraw_probs[0] = 0.0
    return _run_result(loss_matrix, eta, chosen, switched, redraw_probs)
