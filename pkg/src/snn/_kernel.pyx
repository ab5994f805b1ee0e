# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled round loop. Same arithmetic, in the same order, as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t, uint8_t, int8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t KEY_MUL = 0xD1B54A32D192ED03ULL
cdef uint64_t IDX_MUL = 0xC2B2AE3D27D4EB4FULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _coin(uint64_t seed, uint64_t key, uint64_t idx) nogil:
    cdef uint64_t z = _mix(seed ^ GOLDEN)
    z = _mix(z ^ (key * KEY_MUL))
    z = _mix(z ^ (idx * IDX_MUL))
    return <double>(z >> 11) * TWO_M53


cdef inline double _sigmoid(double x) nogil:
    cdef double e, p
    if x >= 0:
        e = exp(-x)
        p = 1.0 / (1.0 + e)
    else:
        e = exp(x)
        p = e / (1.0 + e)
    if p < 1e-300:
        return 0.0
    return p


def coin(uint64_t seed, int64_t key, int64_t idx):
    return _coin(seed, <uint64_t>key, <uint64_t>idx)


def simulate(
    const int64_t[::1] indptr, const int64_t[::1] src, const int64_t[::1] tgt,
    const double[::1] weight, const int64_t[::1] lat, const double[::1] bias,
    const int8_t[::1] kind, const int64_t[::1] coin_key, const int64_t[::1] coin_clock,
    const int64_t[::1] coin_lag, const int64_t[::1] input_ids, const uint8_t[:, ::1] input_fire,
    const uint8_t[::1] initial, int64_t horizon, uint64_t seed,
):
    cdef Py_ssize_t n = bias.shape[0]
    cdef Py_ssize_t m = lat.shape[0]
    cdef Py_ssize_t n_in = input_ids.shape[0]
    cdef Py_ssize_t span = 1
    cdef Py_ssize_t e, u, j, tau, back, row
    for e in range(m):
        if lat[e] > span:
            span = lat[e]
    out = np.zeros((horizon + 1 + span, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] s = out
    cdef uint8_t[::1] is_clock = np.zeros(n, dtype=np.uint8)
    cdef double pot
    cdef int64_t idx
    cdef bint any_clock = False
    for u in range(n):
        if kind[u] == 1 and coin_clock[u] >= 0:
            is_clock[coin_clock[u]] = 1
            any_clock = True
    counts_arr = np.zeros((horizon + 1 if any_clock else 1, n), dtype=np.int64)
    cdef int64_t[:, ::1] counts = counts_arr
    with nogil:
        for u in range(n):
            s[span, u] = initial[u]
        for j in range(n_in):
            s[span, input_ids[j]] = input_fire[0, j]
        if any_clock:
            for u in range(n):
                if is_clock[u]:
                    counts[0, u] = s[span, u]
        for tau in range(1, horizon + 1):
            row = span + tau
            for u in range(n):
                if kind[u] == 2:
                    continue
                pot = 0.0
                for e in range(indptr[u], indptr[u + 1]):
                    pot = pot + weight[e] * s[row - lat[e], src[e]]
                pot = pot - bias[u]
                if kind[u] == 0:
                    s[row, u] = pot >= 0
                else:
                    if coin_clock[u] >= 0:
                        back = tau - coin_lag[u]
                        idx = 1
                        if back >= 0:
                            idx = 1 + counts[back, coin_clock[u]]
                    else:
                        idx = tau
                    s[row, u] = _coin(seed, <uint64_t>coin_key[u], <uint64_t>idx) < _sigmoid(pot)
            for j in range(n_in):
                s[row, input_ids[j]] = input_fire[tau, j]
            if any_clock:
                for u in range(n):
                    if is_clock[u]:
                        counts[tau, u] = counts[tau - 1, u] + s[row, u]
    return out[span:]
