# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled optimal-alignment cost kernel for state-machine nets."""

import numpy as np
from libc.math cimport INFINITY

BACKEND = "cython"


def batch_costs(
    const int[::1] events,
    const int[::1] offsets,
    int init,
    int final,
    const double[:, ::1] closure,
    const int[::1] sync_offsets,
    const int[::1] sync_src,
    const int[::1] sync_dst,
    double log_cost,
):
    """Optimal alignment cost of every trace in a flattened batch.

    ``events[offsets[k]:offsets[k + 1]]`` holds the label ids of trace ``k``
    (``-1`` for labels outside the net's alphabet). ``closure[p, q]`` is the
    cheapest model-only path from place ``p`` to ``q``. Synchronous moves for
    label ``l`` are ``sync_src[s] -> sync_dst[s]`` for
    ``sync_offsets[l] <= s < sync_offsets[l + 1]``.
    """
    cdef Py_ssize_t n_traces = offsets.shape[0] - 1
    cdef Py_ssize_t n_places = closure.shape[0]
    out = np.empty(n_traces, dtype=np.float64)
    cur_arr = np.empty(n_places, dtype=np.float64)
    nxt_arr = np.empty(n_places, dtype=np.float64)
    cdef double[::1] res = out
    cdef double[::1] cur = cur_arr
    cdef double[::1] nxt = nxt_arr
    cdef Py_ssize_t k, i, p, q, s
    cdef int lab
    cdef double best, v

    for k in range(n_traces):
        for q in range(n_places):
            cur[q] = closure[init, q]
        for i in range(offsets[k], offsets[k + 1]):
            lab = events[i]
            for q in range(n_places):
                nxt[q] = cur[q] + log_cost
            if lab >= 0:
                for s in range(sync_offsets[lab], sync_offsets[lab + 1]):
                    p = sync_src[s]
                    q = sync_dst[s]
                    if cur[p] < nxt[q]:
                        nxt[q] = cur[p]
            for q in range(n_places):
                best = INFINITY
                for p in range(n_places):
                    v = nxt[p] + closure[p, q]
                    if v < best:
                        best = v
                cur[q] = best
        res[k] = cur[final]
    return out
