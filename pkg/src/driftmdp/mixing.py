"""Uniform-mixing certification for sets of transition models.

A set of models mixes uniformly at time constant ``tau`` when every
policy-induced chain contracts the L1 distance between any two state
distributions by at least ``exp(-1/tau)`` per step.  The tightest valid
per-matrix factor is the classical ergodicity coefficient

    delta(P) = (1/2) * max_{i,j} ||row_i - row_j||_1,

and checking the deterministic policies is enough: an arbitrary policy's
chain is a per-state convex mixture of deterministic rows, so its row
gaps never exceed the deterministic worst case.

``certify_mixing`` scans the full (deterministic policy) x (model) grid
and returns either a `MixingCertificate` with the tightest tau or a
`MixingRefutation` carrying the witness pair when some chain fails to
contract at all (delta >= 1).  `smooth_model` manufactures model sets
that certify by construction: blending any kernel with the uniform one
at weight gamma forces every pair of rows to overlap by at least gamma,
hence delta <= 1 - gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ProblemShape,
    TransitionMatrix,
    TransitionModel,
    deterministic_action_table,
)

DETERMINISTIC_POLICY_CAP = 4096

# Grid chunk (in model count) for the vectorized certification scan.
_CERTIFY_CHUNK = 2048


@dataclass(frozen=True)
class MixingCertificate:
    """Proof that every policy/model chain contracts: delta_max < 1.

    ``tau`` is the smallest time constant consistent with the observed
    contraction, -1/ln(delta_max), with delta_max = 0 mapped to tau = 0
    (instant mixing).  ``witness`` is the (policy index, model index)
    pair achieving delta_max, with policies in lexicographic order.
    """

    delta_max: float
    tau: float
    witness: tuple[int, int]


@dataclass(frozen=True)
class MixingRefutation:
    """Witness that some policy/model chain fails to contract (delta >= 1)."""

    delta_max: float
    witness: tuple[int, int]


class MixingRefutedError(RuntimeError):
    """Raised when a game requires certified mixing but the model set refutes it."""

    def __init__(self, refutation: MixingRefutation):
        self.refutation = refutation
        policy_idx, model_idx = refutation.witness
        super().__init__(
            f"mixing refuted: delta_max = {refutation.delta_max!r} >= 1 "
            f"(witness policy {policy_idx}, model {model_idx})"
        )


def tau_from_delta(delta_max: float) -> float:
    """Smallest time constant with exp(-1/tau) >= delta_max; 0 means instant mixing."""
    if delta_max < 0.0 or delta_max >= 1.0:
        raise ValueError(f"delta_max must lie in [0, 1), got {delta_max!r}")
    if delta_max == 0.0:
        return 0.0
    return -1.0 / math.log(delta_max)


def _delta_of_rows(rows: np.ndarray) -> float:
    """Ergodicity coefficient of one row-stochastic matrix."""
    num_states = rows.shape[0]
    worst = 0.0
    for i in range(num_states - 1):
        gaps = np.abs(rows[i + 1 :] - rows[i]).sum(axis=1)
        worst = max(worst, float(gaps.max()))
    return 0.5 * worst


def contraction_coefficient(matrix: TransitionMatrix) -> float:
    """delta(P) = half the largest L1 gap between two rows of P.

    Guarantees ||dP - d'P||_1 <= delta(P) * ||d - d'||_1 for all
    distributions d, d'.
    """
    return _delta_of_rows(matrix.rows)


def _stack_kernels(models) -> np.ndarray:
    if len(models) == 0:
        raise ValueError("certify_mixing needs at least one model")
    kernels = [m.kernel if isinstance(m, TransitionModel) else np.asarray(m) for m in models]
    shape = kernels[0].shape
    for k in kernels:
        if k.shape != shape:
            raise ValueError("all models must share one shape")
    return np.stack(kernels)


def certify_kernel_array(
    kernels: np.ndarray, shape: ProblemShape, cap: int = DETERMINISTIC_POLICY_CAP
) -> MixingCertificate | MixingRefutation:
    """Certification scan over a pre-stacked (M, X, A, X) kernel array."""
    if kernels.ndim != 4 or kernels.shape[1:] != (
        shape.num_states,
        shape.num_actions,
        shape.num_states,
    ):
        raise ValueError(
            f"kernel array shape {kernels.shape} does not match problem shape {shape}"
        )
    actions = deterministic_action_table(shape, cap)
    num_policies = actions.shape[0]
    num_states = shape.num_states
    state_idx = np.broadcast_to(np.arange(num_states), (num_policies, num_states))

    delta_max = -1.0
    witness = (0, 0)
    for start in range(0, kernels.shape[0], _CERTIFY_CHUNK):
        chunk = kernels[start : start + _CERTIFY_CHUNK]
        # chains[m, n, x, :] = chunk[m, x, actions[n, x], :]
        chains = chunk[:, state_idx, actions]
        worst = np.zeros(chains.shape[:2])
        for i in range(num_states - 1):
            for j in range(i + 1, num_states):
                gaps = np.abs(chains[:, :, i, :] - chains[:, :, j, :]).sum(axis=-1)
                np.maximum(worst, gaps, out=worst)
        worst *= 0.5
        flat = int(np.argmax(worst))
        model_off, policy_idx = divmod(flat, num_policies)
        value = float(worst[model_off, policy_idx])
        if value > delta_max:
            delta_max = value
            witness = (policy_idx, start + model_off)
    if delta_max >= 1.0:
        return MixingRefutation(delta_max=delta_max, witness=witness)
    return MixingCertificate(
        delta_max=delta_max, tau=tau_from_delta(delta_max), witness=witness
    )


def certify_mixing(
    models, shape: ProblemShape, cap: int = DETERMINISTIC_POLICY_CAP
) -> MixingCertificate | MixingRefutation:
    """Worst contraction coefficient over all deterministic policies and models.

    Returns a certificate (delta_max < 1, with the induced tau) or a
    refutation carrying the witness (policy index, model index).
    """
    return certify_kernel_array(_stack_kernels(models), shape, cap)


def smooth_model(raw: TransitionModel, gamma: float) -> TransitionModel:
    """Blend a kernel with the uniform one: (1-gamma)*raw + gamma/|X|.

    Every output entry is at least gamma/|X|, so any policy-induced chain
    has contraction coefficient at most 1 - gamma.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma!r}")
    num_states = raw.kernel.shape[0]
    return TransitionModel((1.0 - gamma) * raw.kernel + gamma / num_states)


def verify_contraction_empirically(
    models,
    shape: ProblemShape,
    num_samples: int,
    rng: np.random.Generator,
    cap: int = DETERMINISTIC_POLICY_CAP,
) -> float:
    """Worst observed ||dP - d'P||_1 / ||d - d'||_1 over random samples.

    Each sample draws a model, a deterministic policy and two independent
    uniform-simplex distributions; coincident pairs (zero distance) are
    skipped.  For a certified set the result never exceeds delta_max.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    kernels = _stack_kernels(models)
    actions = deterministic_action_table(shape, cap)
    num_states = shape.num_states
    state_idx = np.broadcast_to(
        np.arange(num_states), (actions.shape[0], num_states)
    )
    # chains[m, n] is the chain of deterministic policy n under model m.
    chains = kernels[:, state_idx, actions]

    model_draw = rng.integers(0, kernels.shape[0], size=num_samples)
    policy_draw = rng.integers(0, actions.shape[0], size=num_samples)
    first = rng.dirichlet(np.ones(num_states), size=num_samples)
    second = rng.dirichlet(np.ones(num_states), size=num_samples)

    gap_in = np.abs(first - second).sum(axis=1)
    keep = gap_in > 0.0
    if not np.any(keep):
        return 0.0
    selected = chains[model_draw[keep], policy_draw[keep]]
    diff = first[keep] - second[keep]
    gap_out = np.abs(np.einsum("sx,sxy->sy", diff, selected)).sum(axis=1)
    return float((gap_out / gap_in[keep]).max())
