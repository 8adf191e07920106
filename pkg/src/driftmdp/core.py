"""Finite Markov decision process primitives.

Dense float64 containers for policies, transition kernels, induced state
chains, loss tables and state distributions, plus the exact operations
(policy-induced mixture matrices, distribution pushforward, expected
losses, norms, seeded sampling) that the learners and the experiment
harness are built from.

Containers are immutable after construction and validate their
stochasticity invariants (nonnegative entries, unit row sums within
``ROW_TOL``) up front, so downstream code never has to re-check them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

# Absolute tolerance for "this vector sums to one" checks everywhere.
ROW_TOL = 1e-12

# Refuse to enumerate deterministic policy classes larger than this.
DETERMINISTIC_POLICY_CAP = 4096


def _frozen_array(values, *, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_rows_stochastic(rows: np.ndarray, name: str) -> None:
    if np.any(rows < 0.0):
        raise ValueError(f"{name} has negative entries")
    drift = np.abs(rows.sum(axis=-1) - 1.0).max()
    if drift > ROW_TOL:
        raise ValueError(
            f"{name} rows must sum to 1 within {ROW_TOL}; worst drift {drift:.3e}"
        )


@dataclass(frozen=True)
class ProblemShape:
    """State/action space sizes of a finite MDP."""

    num_states: int
    num_actions: int

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1:
            raise ValueError(
                f"shape must have at least one state and one action, "
                f"got {self.num_states} x {self.num_actions}"
            )


@dataclass(frozen=True)
class Policy:
    """Per-state action distribution; probs[x, a] is the chance of action a in state x."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.probs, ndim=2, name="policy")
        _check_rows_stochastic(arr, "policy")
        object.__setattr__(self, "probs", arr)

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    @property
    def shape(self) -> ProblemShape:
        return ProblemShape(*self.probs.shape)

    @classmethod
    def uniform(cls, shape: ProblemShape) -> "Policy":
        return cls(np.full((shape.num_states, shape.num_actions), 1.0 / shape.num_actions))

    @classmethod
    def deterministic(cls, actions, num_actions: int) -> "Policy":
        """Point-mass policy playing actions[x] in state x."""
        actions = np.asarray(actions, dtype=np.int64)
        if actions.ndim != 1:
            raise ValueError("actions must be a flat sequence, one entry per state")
        if np.any(actions < 0) or np.any(actions >= num_actions):
            raise ValueError("action index out of range")
        probs = np.zeros((actions.shape[0], num_actions))
        probs[np.arange(actions.shape[0]), actions] = 1.0
        return cls(probs)


@dataclass(frozen=True)
class TransitionModel:
    """State/action-conditioned next-state law; kernel[x, a, y] = P(y | x, a)."""

    kernel: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.kernel, ndim=3, name="transition model")
        _check_rows_stochastic(arr.reshape(-1, arr.shape[-1]), "transition model")
        object.__setattr__(self, "kernel", arr)

    @property
    def shape(self) -> ProblemShape:
        return ProblemShape(self.kernel.shape[0], self.kernel.shape[1])


@dataclass(frozen=True)
class TransitionMatrix:
    """State-to-state chain; rows[x, y] = P(y | x) once a policy is fixed."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.rows, ndim=2, name="transition matrix")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"transition matrix must be square, got {arr.shape}")
        _check_rows_stochastic(arr, "transition matrix")
        object.__setattr__(self, "rows", arr)

    @property
    def num_states(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class LossFunction:
    """Bounded per-(state, action) loss table; values[x, a] lies in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, ndim=2, name="loss table")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("loss table entries must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> ProblemShape:
        return ProblemShape(*self.values.shape)


@dataclass(frozen=True)
class StateDistribution:
    """Probability vector over states."""

    mass: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.mass, ndim=1, name="state distribution")
        if np.any(arr < 0.0):
            raise ValueError("state distribution has negative entries")
        drift = abs(arr.sum() - 1.0)
        if drift > ROW_TOL:
            raise ValueError(
                f"state distribution must sum to 1 within {ROW_TOL}; drift {drift:.3e}"
            )
        object.__setattr__(self, "mass", arr)

    @property
    def num_states(self) -> int:
        return self.mass.shape[0]

    @classmethod
    def point_mass(cls, state: int, num_states: int) -> "StateDistribution":
        if not 0 <= state < num_states:
            raise ValueError(f"state index {state} out of range for {num_states} states")
        mass = np.zeros(num_states)
        mass[state] = 1.0
        return cls(mass)

    @classmethod
    def uniform(cls, num_states: int) -> "StateDistribution":
        return cls(np.full(num_states, 1.0 / num_states))


def _require_same_shape(policy: Policy, model: TransitionModel) -> None:
    if policy.probs.shape != model.kernel.shape[:2]:
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match "
            f"model shape {model.kernel.shape[:2]}"
        )


def induce_transition_matrix(policy: Policy, model: TransitionModel) -> TransitionMatrix:
    """State chain obtained by averaging the kernel over the policy's action choice."""
    _require_same_shape(policy, model)
    rows = np.einsum("xa,xay->xy", policy.probs, model.kernel)
    return TransitionMatrix(rows)


def propagate(dist: StateDistribution, matrix: TransitionMatrix) -> StateDistribution:
    """Push a state distribution one step through a chain.

    The exact product can drift away from unit mass by accumulated rounding;
    if the drift exceeds ``ROW_TOL`` the result is clamped to nonnegative
    entries and renormalized, otherwise it is returned as computed.
    """
    if dist.num_states != matrix.num_states:
        raise ValueError(
            f"distribution over {dist.num_states} states cannot be propagated "
            f"through a {matrix.num_states}-state chain"
        )
    out = dist.mass @ matrix.rows
    if abs(out.sum() - 1.0) > ROW_TOL:
        out = np.clip(out, 0.0, None)
        out = out / out.sum()
    return StateDistribution(out)


def expected_loss(dist: StateDistribution, policy: Policy, loss: LossFunction) -> float:
    """Mean loss of playing `policy` when the state is drawn from `dist`."""
    if dist.num_states != policy.num_states or policy.probs.shape != loss.values.shape:
        raise ValueError("distribution, policy and loss table shapes do not agree")
    return float(np.einsum("x,xa,xa->", dist.mass, policy.probs, loss.values))


def l1_distance(a: StateDistribution, b: StateDistribution) -> float:
    """Total-variation-style L1 distance between two state distributions."""
    if a.num_states != b.num_states:
        raise ValueError("distributions live on different state spaces")
    return float(np.abs(a.mass - b.mass).sum())


def policy_distance(a: Policy, b: Policy) -> float:
    """Max over states of the L1 distance between the per-state action rows."""
    if a.probs.shape != b.probs.shape:
        raise ValueError("policies have different shapes")
    return float(np.abs(a.probs - b.probs).sum(axis=1).max())


def draw_index(cdf: np.ndarray, u: float) -> int:
    """Smallest k with u < cdf[k]; clamps to the last index on terminal rounding gaps."""
    k = int(np.searchsorted(cdf, u, side="right"))
    return min(k, len(cdf) - 1)


def sample_action(policy: Policy, state: int, rng: np.random.Generator) -> int:
    """Draw one action from policy's row at `state` using a single uniform."""
    if not 0 <= state < policy.num_states:
        raise ValueError(f"state index {state} out of range")
    cdf = np.cumsum(policy.probs[state])
    return draw_index(cdf, rng.random())


def sample_next_state(
    model: TransitionModel, state: int, action: int, rng: np.random.Generator
) -> int:
    """Draw one successor state from kernel[state, action] using a single uniform."""
    num_states, num_actions = model.kernel.shape[0], model.kernel.shape[1]
    if not 0 <= state < num_states:
        raise ValueError(f"state index {state} out of range")
    if not 0 <= action < num_actions:
        raise ValueError(f"action index {action} out of range")
    cdf = np.cumsum(model.kernel[state, action])
    return draw_index(cdf, rng.random())


def deterministic_action_table(
    shape: ProblemShape, cap: int = DETERMINISTIC_POLICY_CAP
) -> np.ndarray:
    """All action assignments as an (N, num_states) int array.

    Rows are ordered lexicographically by the action chosen in state 0,
    then state 1, and so on; row 0 is the all-zeros assignment.  Raises
    if the class size num_actions ** num_states exceeds `cap`.
    """
    count = shape.num_actions**shape.num_states
    if count > cap:
        raise ValueError(
            f"deterministic policy class has {count} members, exceeding the cap {cap}"
        )
    table = np.array(
        list(itertools.product(range(shape.num_actions), repeat=shape.num_states)),
        dtype=np.int64,
    )
    return table.reshape(count, shape.num_states)


def enumerate_deterministic_policies(
    shape: ProblemShape, cap: int = DETERMINISTIC_POLICY_CAP
) -> list[Policy]:
    """All deterministic policies for `shape`, in lexicographic action order."""
    table = deterministic_action_table(shape, cap)
    return [Policy.deterministic(row, shape.num_actions) for row in table]


def random_policy(shape: ProblemShape, rng: np.random.Generator) -> Policy:
    """Policy with rows drawn uniformly from the action simplex."""
    return Policy(rng.dirichlet(np.ones(shape.num_actions), size=shape.num_states))


def random_model(shape: ProblemShape, rng: np.random.Generator) -> TransitionModel:
    """Transition model with next-state rows drawn uniformly from the state simplex."""
    rows = rng.dirichlet(
        np.ones(shape.num_states), size=shape.num_states * shape.num_actions
    )
    return TransitionModel(
        rows.reshape(shape.num_states, shape.num_actions, shape.num_states)
    )


def random_distribution(num_states: int, rng: np.random.Generator) -> StateDistribution:
    """State distribution drawn uniformly from the simplex."""
    return StateDistribution(rng.dirichlet(np.ones(num_states)))


def policy_stack(policies) -> np.ndarray:
    """Stack a policy class into one (N, num_states, num_actions) array."""
    if len(policies) == 0:
        raise ValueError("policy class is empty")
    shape = policies[0].probs.shape
    for p in policies:
        if p.probs.shape != shape:
            raise ValueError("policies in a class must share one shape")
    return np.stack([p.probs for p in policies])
