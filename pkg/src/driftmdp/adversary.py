"""Seeded oblivious adversaries producing per-round (model, loss) pairs.

A script fixes the whole sequence in advance: ``emit(script, t)`` is a
pure function of the script fields and the round index, never of
anything the learner did.  All generator kinds smooth their kernels
toward uniform at level ``gamma`` (default 0.25), so every emitted model
set certifies mixing by construction.  The one exception is the
``fixed`` kind loading explicit files, which are used verbatim — that is
the supported route for exercising mixing refutations.

Kinds
-----
fixed
    One (model, loss) pair for every round, either generated from the
    seed or loaded verbatim from ``model_file`` / ``loss_file``.
model-switching
    Two seeded smoothed kernels and two loss tables, alternating in
    blocks of ``period`` rounds (period 2*period overall).  Loss tables
    favor action 0 in every state by a clear margin, so the class has a
    dominant comparator and regret growth is measurable.
random-smoothed
    Fresh smoothed kernel and uniform-random loss table every round.
leader-punisher-oblivious
    Fixed seeded kernel; at each block boundary the script inspects its
    own cumulative loss totals and assigns high loss to the per-state
    actions that look best in hindsight, low loss elsewhere.  The totals
    come from the script's emitted losses alone, so replay is identical.
sinusoidal-loss
    Fixed seeded kernel; losses oscillate as 0.5 + 0.5*sin over the
    given period with seeded per-(state, action) phases.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import textio
from .core import LossFunction, ProblemShape, TransitionModel
from .mixing import smooth_model

KINDS = (
    "fixed",
    "model-switching",
    "random-smoothed",
    "leader-punisher-oblivious",
    "sinusoidal-loss",
)

_PERIODIC_KINDS = ("model-switching", "leader-punisher-oblivious", "sinusoidal-loss")

DEFAULT_GAMMA = 0.25

# Refuse to materialize sequences larger than this many bytes.
MEMORY_CAP_BYTES = 2_000_000_000


@dataclass(frozen=True)
class AdversaryScript:
    """Immutable description of one oblivious adversary."""

    kind: str
    shape: ProblemShape
    horizon: int
    seed: int
    gamma: float = DEFAULT_GAMMA
    period: int | None = None
    model_file: str | None = None
    loss_file: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; choose from {KINDS}")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if self.kind in _PERIODIC_KINDS:
            if self.period is None or self.period < 1:
                raise ValueError(f"kind {self.kind!r} needs a positive period")
        if self.kind != "fixed" and (self.model_file or self.loss_file):
            raise ValueError("model_file/loss_file are only valid for the fixed kind")


@dataclass(frozen=True)
class MaterializedAdversary:
    """Dense per-round arrays for one script prefix."""

    script: AdversaryScript
    kernels: np.ndarray  # (T, X, A, X)
    losses: np.ndarray  # (T, X, A)

    @property
    def horizon(self) -> int:
        return self.kernels.shape[0]

    def model(self, t: int) -> TransitionModel:
        _check_round(t, self.horizon)
        return TransitionModel(self.kernels[t - 1])

    def loss(self, t: int) -> LossFunction:
        _check_round(t, self.horizon)
        return LossFunction(self.losses[t - 1])

    def export(self, directory) -> None:
        """Write the distinct models/losses plus a per-round schedule CSV."""
        os.makedirs(directory, exist_ok=True)
        model_ids: dict[bytes, int] = {}
        loss_ids: dict[bytes, int] = {}
        schedule = []
        for t in range(self.horizon):
            mkey = self.kernels[t].tobytes()
            if mkey not in model_ids:
                model_ids[mkey] = len(model_ids)
                textio.save_model(
                    os.path.join(directory, f"model_{model_ids[mkey]:04d}.txt"),
                    TransitionModel(self.kernels[t]),
                )
            lkey = self.losses[t].tobytes()
            if lkey not in loss_ids:
                loss_ids[lkey] = len(loss_ids)
                textio.save_loss(
                    os.path.join(directory, f"loss_{loss_ids[lkey]:04d}.txt"),
                    LossFunction(self.losses[t]),
                )
            schedule.append((t + 1, model_ids[mkey], loss_ids[lkey]))
        with open(os.path.join(directory, "schedule.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "model_id", "loss_id"])
            writer.writerows(schedule)


def _check_round(t: int, horizon: int) -> None:
    if not 1 <= t <= horizon:
        raise ValueError(f"round {t} out of range 1..{horizon}")


def _rng(script: AdversaryScript, *tags: int) -> np.random.Generator:
    return np.random.default_rng([script.seed, *tags])


def _smoothed_kernel(script: AdversaryScript, *tags: int) -> np.ndarray:
    shape = script.shape
    rows = _rng(script, *tags).dirichlet(
        np.ones(shape.num_states), size=shape.num_states * shape.num_actions
    )
    raw = TransitionModel(
        rows.reshape(shape.num_states, shape.num_actions, shape.num_states)
    )
    return smooth_model(raw, script.gamma).kernel


def _uniform_losses(script: AdversaryScript, *tags: int, size=None) -> np.ndarray:
    shape = script.shape
    dims = (shape.num_states, shape.num_actions) if size is None else size
    return _rng(script, *tags).uniform(0.0, 1.0, size=dims)


def _gapped_losses(script: AdversaryScript, *tags: int) -> np.ndarray:
    """Loss table with action 0 clearly best in every state."""
    shape = script.shape
    rng = _rng(script, *tags)
    table = rng.uniform(0.65, 0.8, size=(shape.num_states, shape.num_actions))
    table[:, 0] = rng.uniform(0.2, 0.3, size=shape.num_states)
    return table


def _build_fixed(script: AdversaryScript, horizon: int):
    if script.model_file is not None:
        kernel = textio.load_model(script.model_file).kernel
        if kernel.shape[:2] != (script.shape.num_states, script.shape.num_actions):
            raise ValueError("model file shape does not match the script shape")
    else:
        kernel = _smoothed_kernel(script, 1)
    if script.loss_file is not None:
        loss = textio.load_loss(script.loss_file).values
        if loss.shape != (script.shape.num_states, script.shape.num_actions):
            raise ValueError("loss file shape does not match the script shape")
    else:
        loss = _uniform_losses(script, 2)
    kernels = np.broadcast_to(kernel, (horizon, *kernel.shape)).copy()
    losses = np.broadcast_to(loss, (horizon, *loss.shape)).copy()
    return kernels, losses


def _build_model_switching(script: AdversaryScript, horizon: int):
    kernel_pair = np.stack(
        [_smoothed_kernel(script, 1), _smoothed_kernel(script, 2)]
    )
    loss_pair = np.stack([_gapped_losses(script, 3), _gapped_losses(script, 4)])
    blocks = (np.arange(horizon) // script.period) % 2
    return kernel_pair[blocks], loss_pair[blocks]


def _build_random_smoothed(script: AdversaryScript, horizon: int):
    shape = script.shape
    kernels = np.empty(
        (horizon, shape.num_states, shape.num_actions, shape.num_states)
    )
    losses = np.empty((horizon, shape.num_states, shape.num_actions))
    for t in range(1, horizon + 1):
        kernels[t - 1] = _smoothed_kernel(script, 5, t)
        losses[t - 1] = _uniform_losses(script, 6, t)
    return kernels, losses


def _build_leader_punisher(script: AdversaryScript, horizon: int):
    shape = script.shape
    kernel = _smoothed_kernel(script, 1)
    kernels = np.broadcast_to(
        kernel, (horizon, *kernel.shape)
    ).copy() if horizon else np.empty((0, *kernel.shape))
    losses = np.empty((horizon, shape.num_states, shape.num_actions))
    cumulative = np.zeros((shape.num_states, shape.num_actions))
    block_table = None
    for t in range(horizon):
        if t % script.period == 0:
            leaders = np.argmin(cumulative, axis=1)
            block = t // script.period
            jitter = _rng(script, 7, block).uniform(
                0.0, 0.1, size=(shape.num_states, shape.num_actions)
            )
            block_table = 0.15 + jitter
            block_table[np.arange(shape.num_states), leaders] = 0.9
        losses[t] = block_table
        cumulative += block_table
    return kernels, losses


def _build_sinusoidal(script: AdversaryScript, horizon: int):
    shape = script.shape
    kernel = _smoothed_kernel(script, 1)
    kernels = np.broadcast_to(
        kernel, (horizon, *kernel.shape)
    ).copy() if horizon else np.empty((0, *kernel.shape))
    phases = _rng(script, 8).uniform(
        0.0, 2.0 * np.pi, size=(shape.num_states, shape.num_actions)
    )
    steps = np.arange(1, horizon + 1)
    angles = 2.0 * np.pi * steps[:, None, None] / script.period + phases
    losses = 0.5 + 0.5 * np.sin(angles)
    np.clip(losses, 0.0, 1.0, out=losses)
    return kernels, losses


_BUILDERS = {
    "fixed": _build_fixed,
    "model-switching": _build_model_switching,
    "random-smoothed": _build_random_smoothed,
    "leader-punisher-oblivious": _build_leader_punisher,
    "sinusoidal-loss": _build_sinusoidal,
}


@lru_cache(maxsize=8)
def precompute(script: AdversaryScript, horizon: int) -> MaterializedAdversary:
    """Materialize the first `horizon` rounds of a script as dense arrays.

    Results are cached (the adversary does not vary across Monte Carlo
    seeds); the estimated footprint is checked against the memory cap
    before building.
    """
    if horizon < 0 or horizon > script.horizon:
        raise ValueError(f"horizon {horizon} out of range 0..{script.horizon}")
    shape = script.shape
    per_round = shape.num_states * shape.num_actions * (shape.num_states + 1) * 8
    if horizon * per_round > MEMORY_CAP_BYTES:
        raise MemoryError(
            f"materializing {horizon} rounds needs about {horizon * per_round} "
            f"bytes, over the cap {MEMORY_CAP_BYTES}"
        )
    kernels, losses = _BUILDERS[script.kind](script, horizon)
    np.clip(losses, 0.0, 1.0, out=losses)
    kernels.setflags(write=False)
    losses.setflags(write=False)
    return MaterializedAdversary(script=script, kernels=kernels, losses=losses)


def emit(script: AdversaryScript, t: int) -> tuple[TransitionModel, LossFunction]:
    """The round-t (model, loss) pair — a pure function of (script, t)."""
    _check_round(t, script.horizon)
    materialized = precompute(script, script.horizon)
    return materialized.model(t), materialized.loss(t)


def expert_stream(
    kind: str,
    num_experts: int,
    horizon: int,
    seed: int,
    period: int = 100,
) -> np.ndarray:
    """Synthetic (T, N) loss matrices for benchmarking the expert learners.

    fixed-gap
        Bernoulli losses, expert 0 at mean 0.45 and the rest at 0.55.
    rotating-punisher
        In block k (of `period` rounds) expert k mod N pays 0.1 and all
        others pay 0.9 — adversarial pressure against weight chasing.
    random
        iid uniform [0, 1] losses.
    """
    if num_experts < 1 or horizon < 1:
        raise ValueError("need at least one expert and one round")
    if kind == "fixed-gap":
        rng = np.random.default_rng([seed, 21])
        means = np.full(num_experts, 0.55)
        means[0] = 0.45
        return (rng.random((horizon, num_experts)) < means).astype(np.float64)
    if kind == "rotating-punisher":
        if period < 1:
            raise ValueError("period must be positive")
        blocks = (np.arange(horizon) // period) % num_experts
        table = np.full((horizon, num_experts), 0.9)
        table[np.arange(horizon), blocks] = 0.1
        return table
    if kind == "random":
        rng = np.random.default_rng([seed, 22])
        return rng.random((horizon, num_experts))
    raise ValueError(f"unknown expert stream kind {kind!r}")
