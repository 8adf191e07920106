"""Lazy-switching learner over a finite policy class.

Each round the learner (a) lazily keeps or redraws its acting policy via
the expert machinery, (b) scores every policy in the class by its exact
counterfactual expected loss — the mean of the round's loss table under
that policy and its own propagated state law — and (c) pushes each
policy's state law one step through the revealed model.  Losses are
always evaluated on the pre-propagation laws, so ``observe`` scores the
round that was just played.

All policies and the learner share one initial point-mass state law, so
their laws start coincident and drift apart only through the models.
"""

from __future__ import annotations

import numpy as np

from . import experts
from .core import (
    LossFunction,
    Policy,
    ProblemShape,
    StateDistribution,
    TransitionModel,
    policy_stack,
)

ROW_TOL = 1e-12


def comparator_step(
    stack: np.ndarray, dists: np.ndarray, kernel: np.ndarray, loss_values: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Score one round for every policy and push their state laws one step.

    stack: (N, X, A) policy rows; dists: (N, X) per-policy state laws;
    kernel: (X, A, X); loss_values: (X, A).  Returns (losses (N,),
    new_dists (N, X)).  New laws are clamped/renormalized only when
    rounding drift exceeds ``ROW_TOL``, mirroring single-law propagation.
    """
    per_state = np.einsum("nxa,xa->nx", stack, loss_values)
    losses = np.clip(np.einsum("nx,nx->n", dists, per_state), 0.0, 1.0)
    chains = np.einsum("nxa,xay->nxy", stack, kernel)
    new_dists = np.einsum("nx,nxy->ny", dists, chains)
    sums = new_dists.sum(axis=1)
    bad = np.abs(sums - 1.0) > ROW_TOL
    if np.any(bad):
        fixed = np.clip(new_dists[bad], 0.0, None)
        new_dists[bad] = fixed / fixed.sum(axis=1, keepdims=True)
    return losses, new_dists


class _PolicyClassLearner:
    """Shared plumbing: policy class, expert state, per-policy state laws."""

    def __init__(self, policy_class, shape: ProblemShape, horizon: int, x0: int):
        if len(policy_class) == 0:
            raise ValueError("policy class is empty")
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 <= x0 < shape.num_states:
            raise ValueError(f"initial state {x0} out of range")
        stack = policy_stack(policy_class)
        if stack.shape[1:] != (shape.num_states, shape.num_actions):
            raise ValueError(
                f"policy class shape {stack.shape[1:]} does not match problem "
                f"shape ({shape.num_states}, {shape.num_actions})"
            )
        self.policy_class: list[Policy] = list(policy_class)
        self.stack = stack
        self.shape = shape
        self.horizon = horizon
        self.x0 = x0
        self.expert_state = experts.initial_state(
            len(policy_class), experts.learning_rate(len(policy_class), horizon)
        )
        dists = np.zeros((len(policy_class), shape.num_states))
        dists[:, x0] = 1.0
        self.policy_dists = dists

    @property
    def eta(self) -> float:
        return self.expert_state.eta

    @property
    def num_policies(self) -> int:
        return len(self.policy_class)

    def policy_distributions(self) -> list[StateDistribution]:
        """Current per-policy state laws as distribution objects."""
        return [StateDistribution(row) for row in self.policy_dists]

    def observe(self, model: TransitionModel, loss: LossFunction) -> np.ndarray:
        """Score the played round for every policy, update weights, push laws."""
        if model.kernel.shape[:2] != (self.shape.num_states, self.shape.num_actions):
            raise ValueError("model shape does not match the learner's problem shape")
        if loss.values.shape != (self.shape.num_states, self.shape.num_actions):
            raise ValueError("loss shape does not match the learner's problem shape")
        losses, new_dists = comparator_step(
            self.stack, self.policy_dists, model.kernel, loss.values
        )
        self._update(losses)
        self.policy_dists = new_dists
        return losses


class SdMdpLearner(_PolicyClassLearner):
    """Lazy-switching (stay with probability = one-round weight ratio) learner."""

    def choose_policy(self, rng: np.random.Generator) -> tuple[int, bool]:
        return experts.sd_choose(self.expert_state, rng)

    def _update(self, losses: np.ndarray) -> None:
        experts.sd_update(self.expert_state, losses)


class EwaMdpLearner(_PolicyClassLearner):
    """Fresh-draw variant: redraws the acting policy every round."""

    def choose_policy(self, rng: np.random.Generator) -> tuple[int, bool]:
        prev = self.expert_state.current_expert
        drawn = experts.ewa_choose(self.expert_state, rng)
        return drawn, prev is not None and drawn != prev

    def _update(self, losses: np.ndarray) -> None:
        experts.ewa_update(self.expert_state, losses)
