"""Pure-Python sampling kernels (reference implementations).

These mirror the compiled kernels in ``_kernels.pyx`` draw for draw: the
same generator produces bit-identical outputs on either backend.  All
probability tables are precomputed by the caller; the kernels only
consume uniforms in a documented order.

Per-round draw order for the lazy chains:

    round 1:  one uniform (fresh draw from the round-1 weight cdf)
    round t:  one uniform (stay/redraw decision); if it falls at or
              above the stay probability, one more uniform (redraw from
              the round-t weight cdf)

``simulate_game`` appends, after the policy decision of each round, one
uniform for the action draw and one for the next-state draw.

Scalar stay probabilities use ``math.exp`` (libm), matching the C
``exp`` used by the compiled backend bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .core import draw_index

BACKEND_NAME = "pure"


def sd_chain(log_weights, qcdf, rng):
    """Lazy-switching expert chain.

    log_weights: (T+1, N) log-weight rows (row t = after t updates).
    qcdf: (T, N) normalized cumulative weights; row t-1 serves round t.
    Returns (chosen int64 (T,), switched uint8 (T,)).
    """
    horizon = qcdf.shape[0]
    chosen = np.empty(horizon, dtype=np.int64)
    switched = np.zeros(horizon, dtype=np.uint8)
    cur = draw_index(qcdf[0], rng.random())
    chosen[0] = cur
    for t in range(1, horizon):
        stay = math.exp(log_weights[t, cur] - log_weights[t - 1, cur])
        if rng.random() >= stay:
            nxt = draw_index(qcdf[t], rng.random())
            if nxt != cur:
                switched[t] = 1
                cur = nxt
        chosen[t] = cur
    return chosen, switched


def fresh_chain(qcdf, rng):
    """Fresh-draw expert chain (EWA): one draw from qcdf[t] per round."""
    horizon = qcdf.shape[0]
    chosen = np.empty(horizon, dtype=np.int64)
    switched = np.zeros(horizon, dtype=np.uint8)
    cur = draw_index(qcdf[0], rng.random())
    chosen[0] = cur
    for t in range(1, horizon):
        nxt = draw_index(qcdf[t], rng.random())
        if nxt != cur:
            switched[t] = 1
            cur = nxt
        chosen[t] = cur
    return chosen, switched


def simulate_game(log_weights, qcdf, action_cdf, kernel_cdf, loss_table, x0, rng, lazy):
    """One full game trajectory against a materialized adversary.

    action_cdf: (N, X, A) per-policy cumulative action rows.
    kernel_cdf: (T, X, A, X) cumulative next-state rows.
    loss_table: (T, X, A) per-round losses.
    Returns (chosen, switched, states, actions, realized).
    """
    horizon = qcdf.shape[0]
    chosen = np.empty(horizon, dtype=np.int64)
    switched = np.zeros(horizon, dtype=np.uint8)
    states = np.empty(horizon, dtype=np.int64)
    actions = np.empty(horizon, dtype=np.int64)
    realized = np.empty(horizon)

    state = x0
    cur = 0
    for t in range(horizon):
        if t == 0:
            cur = draw_index(qcdf[0], rng.random())
        elif lazy:
            stay = math.exp(log_weights[t, cur] - log_weights[t - 1, cur])
            if rng.random() >= stay:
                nxt = draw_index(qcdf[t], rng.random())
                if nxt != cur:
                    switched[t] = 1
                    cur = nxt
        else:
            nxt = draw_index(qcdf[t], rng.random())
            if nxt != cur:
                switched[t] = 1
                cur = nxt
        chosen[t] = cur
        action = draw_index(action_cdf[cur, state], rng.random())
        states[t] = state
        actions[t] = action
        realized[t] = loss_table[t, state, action]
        state = draw_index(kernel_cdf[t, state, action], rng.random())
    return chosen, switched, states, actions, realized
