"""Plain-text serialization for policies, models, losses and distributions.

One file holds one object.  The first line is a header naming the kind and
its dimensions; every following non-blank line is a row of whitespace-
separated decimal floats:

    policy X A      X rows of A floats (action distribution per state)
    model X A       X*A rows of X floats, one per (state, action) pair,
                    ordered by state then action
    loss X A        X rows of A floats
    dist X          one row of X floats
    policyset N X A N consecutive policy blocks of X rows each

Floats are written with ``repr`` (shortest exact round-trip), so save/load
is bit-faithful.  Blank lines and lines starting with '#' are ignored on
read.
"""

from __future__ import annotations

import numpy as np

from .core import LossFunction, Policy, StateDistribution, TransitionModel


def _format_rows(rows: np.ndarray) -> list[str]:
    return [" ".join(repr(float(v)) for v in row) for row in np.atleast_2d(rows)]


def _read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh]
    return [line for line in lines if line and not line.startswith("#")]


def _parse_header(line: str, kind: str, num_dims: int, path) -> list[int]:
    parts = line.split()
    if not parts or parts[0] != kind:
        raise ValueError(f"{path}: expected '{kind}' header, got {line!r}")
    if len(parts) != 1 + num_dims:
        raise ValueError(f"{path}: '{kind}' header needs {num_dims} dimensions")
    try:
        dims = [int(p) for p in parts[1:]]
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer dimension in header {line!r}") from exc
    if any(d < 1 for d in dims):
        raise ValueError(f"{path}: dimensions must be positive, got {dims}")
    return dims


def _parse_rows(lines: list[str], num_rows: int, num_cols: int, path) -> np.ndarray:
    if len(lines) != num_rows:
        raise ValueError(f"{path}: expected {num_rows} data rows, found {len(lines)}")
    out = np.empty((num_rows, num_cols))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != num_cols:
            raise ValueError(
                f"{path}: row {i + 1} has {len(parts)} entries, expected {num_cols}"
            )
        try:
            out[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 1} has a non-numeric entry") from exc
    return out


def save_policy(path, policy: Policy) -> None:
    lines = [f"policy {policy.num_states} {policy.num_actions}"]
    lines += _format_rows(policy.probs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_policy(path) -> Policy:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty file")
    num_states, num_actions = _parse_header(lines[0], "policy", 2, path)
    return Policy(_parse_rows(lines[1:], num_states, num_actions, path))


def save_model(path, model: TransitionModel) -> None:
    num_states, num_actions = model.kernel.shape[0], model.kernel.shape[1]
    lines = [f"model {num_states} {num_actions}"]
    lines += _format_rows(model.kernel.reshape(num_states * num_actions, num_states))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> TransitionModel:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty file")
    num_states, num_actions = _parse_header(lines[0], "model", 2, path)
    rows = _parse_rows(lines[1:], num_states * num_actions, num_states, path)
    return TransitionModel(rows.reshape(num_states, num_actions, num_states))


def save_loss(path, loss: LossFunction) -> None:
    lines = [f"loss {loss.values.shape[0]} {loss.values.shape[1]}"]
    lines += _format_rows(loss.values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_loss(path) -> LossFunction:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty file")
    num_states, num_actions = _parse_header(lines[0], "loss", 2, path)
    return LossFunction(_parse_rows(lines[1:], num_states, num_actions, path))


def save_distribution(path, dist: StateDistribution) -> None:
    lines = [f"dist {dist.num_states}"]
    lines += _format_rows(dist.mass)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_distribution(path) -> StateDistribution:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty file")
    (num_states,) = _parse_header(lines[0], "dist", 1, path)
    return StateDistribution(_parse_rows(lines[1:], 1, num_states, path)[0])


def save_policy_set(path, policies: list[Policy]) -> None:
    if not policies:
        raise ValueError("cannot save an empty policy set")
    num_states = policies[0].num_states
    num_actions = policies[0].num_actions
    lines = [f"policyset {len(policies)} {num_states} {num_actions}"]
    for policy in policies:
        if policy.probs.shape != (num_states, num_actions):
            raise ValueError("policies in a set must share one shape")
        lines += _format_rows(policy.probs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_policy_set(path) -> list[Policy]:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}: empty file")
    count, num_states, num_actions = _parse_header(lines[0], "policyset", 3, path)
    rows = _parse_rows(lines[1:], count * num_states, num_actions, path)
    return [
        Policy(rows[i * num_states : (i + 1) * num_states]) for i in range(count)
    ]
