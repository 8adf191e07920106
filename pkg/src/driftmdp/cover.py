"""Finite covers of the continuous policy space.

Policies are compared in the max-over-states L1 metric (worst per-state
action-distribution gap).  The cover is a per-state grid: every action
distribution whose entries are multiples of 1/k with k = ceil(2|A|/eps)
— see ``grid_resolution`` — combined across states.  Rounding any policy
to the grid (floor coordinates, hand the remaining mass to the largest
remainders) moves each per-state row by at most |A|/k <= eps/2, so the
grid is an eps-cover with room to spare.

``policy_value`` scores a single policy against a whole script by exact
propagation, and ``lipschitz_check`` tests how the value gap between two
policies compares with tau * T * distance, using the geometric-series
constant max(tau, 1/(1 - exp(-1/tau))) that the propagation argument
actually supports (for tau < 1 the series term exceeds tau).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .adversary import AdversaryScript
from .core import Policy, ProblemShape, l1_distance, policy_distance
from .harness import fixed_policy_expected_total, state_law_sequence

DEFAULT_SIZE_CAP = 1_000_000

LIPSCHITZ_TOL = 1e-9


@dataclass(frozen=True)
class CoverSpec:
    """A constructed finite cover of the policy space.

    ``size_bound`` is the covering-number target (|A|/eps) ** (|A|*|X|)
    for the optimal cover; our constructive grid can exceed it, so
    ``within_size_bound`` reports the comparison (always True when
    eps > 1, where the target is not claimed).
    """

    epsilon: float
    shape: ProblemShape
    grid_resolution: int
    policies: tuple[Policy, ...]
    size_bound: float
    within_size_bound: bool

    @property
    def size(self) -> int:
        return len(self.policies)


def grid_resolution(num_actions: int, epsilon: float) -> int:
    """k = ceil(2|A|/eps), with a tiny guard against division rounding."""
    return math.ceil(2.0 * num_actions / epsilon - 1e-9)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def simplex_grid(num_actions: int, resolution: int) -> np.ndarray:
    """All distributions over `num_actions` with entries in multiples of
    1/resolution, in lexicographic order of the count vectors."""
    counts = np.array(list(_compositions(resolution, num_actions)), dtype=np.float64)
    return counts / resolution


def build_cover(
    shape: ProblemShape, epsilon: float, size_cap: int = DEFAULT_SIZE_CAP
) -> CoverSpec:
    """Per-state grid cover with guaranteed distance <= epsilon to any policy."""
    if not 0.0 < epsilon <= 2.0:
        raise ValueError(f"epsilon must lie in (0, 2], got {epsilon!r}")
    resolution = grid_resolution(shape.num_actions, epsilon)
    per_state = math.comb(resolution + shape.num_actions - 1, shape.num_actions - 1)
    total = per_state**shape.num_states
    if total > size_cap:
        raise ValueError(
            f"cover would hold {total} policies, exceeding the size cap {size_cap}"
        )
    grid = simplex_grid(shape.num_actions, resolution)
    policies = tuple(
        Policy(np.stack(rows))
        for rows in itertools.product(grid, repeat=shape.num_states)
    )
    size_bound = (shape.num_actions / epsilon) ** (
        shape.num_actions * shape.num_states
    )
    within = True if epsilon > 1.0 else (total <= size_bound)
    return CoverSpec(
        epsilon=epsilon,
        shape=shape,
        grid_resolution=resolution,
        policies=policies,
        size_bound=size_bound,
        within_size_bound=within,
    )


def round_to_grid(policy: Policy, resolution: int) -> Policy:
    """Nearest-grid rounding: floor each row to multiples of 1/resolution,
    then give the leftover mass, one unit at a time, to the largest
    remainders (ties to the lowest action index)."""
    scaled = policy.probs * resolution
    base = np.floor(scaled)
    remainder = scaled - base
    rounded = base.copy()
    for x in range(policy.num_states):
        deficit = int(round(resolution - base[x].sum()))
        if deficit > 0:
            order = np.argsort(-remainder[x], kind="stable")
            rounded[x, order[:deficit]] += 1.0
    return Policy(rounded / resolution)


def policy_value(
    policy: Policy, script: AdversaryScript, horizon: int, x0: int
) -> float:
    """L_T(policy): total expected loss over the script, by exact propagation."""
    return fixed_policy_expected_total(policy, script, horizon, x0)


def stepwise_constant(tau: float) -> float:
    """Law-gap factor supported by the contraction argument.

    One policy swap perturbs the state law by at most the policy
    distance per step, and older perturbations shrink geometrically:
    sum_k exp(-k/tau) = 1/(1 - exp(-1/tau)).  For tau < 1 that series
    exceeds tau itself, hence the max.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    if tau == 0.0:
        return 1.0
    return max(tau, 1.0 / (1.0 - math.exp(-1.0 / tau)))


def stepwise_law_check(
    p1: Policy,
    p2: Policy,
    script: AdversaryScript,
    horizon: int,
    x0: int,
    tau: float,
) -> tuple[float, float, bool]:
    """Largest per-round law gap between two fixed policies vs its bound.

    Returns (max_t ||u1_t - u2_t||_1, stepwise_constant(tau) * distance, ok).
    """
    laws1 = state_law_sequence(p1, script, horizon, x0)
    laws2 = state_law_sequence(p2, script, horizon, x0)
    worst = max(l1_distance(a, b) for a, b in zip(laws1, laws2))
    bound = stepwise_constant(tau) * policy_distance(p1, p2)
    return worst, bound, worst <= bound + LIPSCHITZ_TOL


def lipschitz_check(
    p1: Policy,
    p2: Policy,
    script: AdversaryScript,
    horizon: int,
    x0: int,
    tau: float,
) -> tuple[float, float, bool]:
    """Value-gap check: |L_T(p1) - L_T(p2)| vs constant * T * distance.

    The constant is ``stepwise_constant(tau)`` (at least 1, at least tau).
    Returns (lhs, rhs, lhs <= rhs + tolerance).
    """
    lhs = abs(
        policy_value(p1, script, horizon, x0) - policy_value(p2, script, horizon, x0)
    )
    rhs = stepwise_constant(tau) * horizon * policy_distance(p1, p2)
    return lhs, rhs, lhs <= rhs + LIPSCHITZ_TOL


def cover_regret_bound(
    cover_size: int, horizon: int, tau: float, epsilon: float
) -> float:
    """Regret target vs any continuous policy when learning on the cover:
    (4 + 2 tau^2) sqrt(T ln N) + ln N + tau*T*epsilon."""
    log_n = math.log(cover_size)
    return (
        (4.0 + 2.0 * tau * tau) * math.sqrt(horizon * log_n)
        + log_n
        + tau * horizon * epsilon
    )
