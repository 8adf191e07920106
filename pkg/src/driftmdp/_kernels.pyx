# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels.

Draw-for-draw mirrors of ``_kernels_py``: same uniforms consumed in the
same order from the generator's bit stream, so outputs are bit-identical
across backends.  See the pure module's docstring for the draw-order
contract.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp
from numpy.random cimport bitgen_t

cnp.import_array()

BACKEND_NAME = "compiled"


cdef bitgen_t *_bitgen(rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline Py_ssize_t _scan(const double *cdf, Py_ssize_t n, double u) nogil:
    # Smallest k with u < cdf[k]; clamps to the last index.
    cdef Py_ssize_t k
    for k in range(n - 1):
        if u < cdf[k]:
            return k
    return n - 1


def sd_chain(const double[:, ::1] log_weights, const double[:, ::1] qcdf, rng):
    cdef Py_ssize_t horizon = qcdf.shape[0]
    cdef Py_ssize_t n = qcdf.shape[1]
    chosen_arr = np.empty(horizon, dtype=np.int64)
    switched_arr = np.zeros(horizon, dtype=np.uint8)
    cdef cnp.int64_t[::1] chosen = chosen_arr
    cdef unsigned char[::1] switched = switched_arr
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t t, cur, nxt
    cdef double stay
    with nogil:
        cur = _scan(&qcdf[0, 0], n, bg.next_double(bg.state))
        chosen[0] = cur
        for t in range(1, horizon):
            stay = exp(log_weights[t, cur] - log_weights[t - 1, cur])
            if bg.next_double(bg.state) >= stay:
                nxt = _scan(&qcdf[t, 0], n, bg.next_double(bg.state))
                if nxt != cur:
                    switched[t] = 1
                    cur = nxt
            chosen[t] = cur
    return chosen_arr, switched_arr


def fresh_chain(const double[:, ::1] qcdf, rng):
    cdef Py_ssize_t horizon = qcdf.shape[0]
    cdef Py_ssize_t n = qcdf.shape[1]
    chosen_arr = np.empty(horizon, dtype=np.int64)
    switched_arr = np.zeros(horizon, dtype=np.uint8)
    cdef cnp.int64_t[::1] chosen = chosen_arr
    cdef unsigned char[::1] switched = switched_arr
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t t, cur, nxt
    with nogil:
        cur = _scan(&qcdf[0, 0], n, bg.next_double(bg.state))
        chosen[0] = cur
        for t in range(1, horizon):
            nxt = _scan(&qcdf[t, 0], n, bg.next_double(bg.state))
            if nxt != cur:
                switched[t] = 1
                cur = nxt
            chosen[t] = cur
    return chosen_arr, switched_arr


def simulate_game(
    const double[:, ::1] log_weights,
    const double[:, ::1] qcdf,
    const double[:, :, ::1] action_cdf,
    const double[:, :, :, ::1] kernel_cdf,
    const double[:, :, ::1] loss_table,
    Py_ssize_t x0,
    rng,
    bint lazy,
):
    cdef Py_ssize_t horizon = qcdf.shape[0]
    cdef Py_ssize_t n = qcdf.shape[1]
    cdef Py_ssize_t num_states = action_cdf.shape[1]
    cdef Py_ssize_t num_actions = action_cdf.shape[2]
    chosen_arr = np.empty(horizon, dtype=np.int64)
    switched_arr = np.zeros(horizon, dtype=np.uint8)
    states_arr = np.empty(horizon, dtype=np.int64)
    actions_arr = np.empty(horizon, dtype=np.int64)
    realized_arr = np.empty(horizon, dtype=np.float64)
    cdef cnp.int64_t[::1] chosen = chosen_arr
    cdef unsigned char[::1] switched = switched_arr
    cdef cnp.int64_t[::1] states = states_arr
    cdef cnp.int64_t[::1] actions = actions_arr
    cdef double[::1] realized = realized_arr
    cdef bitgen_t *bg = _bitgen(rng)
    cdef Py_ssize_t t, cur, nxt, state, action
    cdef double stay
    state = x0
    cur = 0
    with nogil:
        for t in range(horizon):
            if t == 0:
                cur = _scan(&qcdf[0, 0], n, bg.next_double(bg.state))
            elif lazy:
                stay = exp(log_weights[t, cur] - log_weights[t - 1, cur])
                if bg.next_double(bg.state) >= stay:
                    nxt = _scan(&qcdf[t, 0], n, bg.next_double(bg.state))
                    if nxt != cur:
                        switched[t] = 1
                        cur = nxt
            else:
                nxt = _scan(&qcdf[t, 0], n, bg.next_double(bg.state))
                if nxt != cur:
                    switched[t] = 1
                    cur = nxt
            chosen[t] = cur
            action = _scan(&action_cdf[cur, state, 0], num_actions, bg.next_double(bg.state))
            states[t] = state
            actions[t] = action
            realized[t] = loss_table[t, state, action]
            state = _scan(&kernel_cdf[t, state, action, 0], num_states, bg.next_double(bg.state))
    return chosen_arr, switched_arr, states_arr, actions_arr, realized_arr
