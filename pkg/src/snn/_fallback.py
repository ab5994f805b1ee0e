"""Pure numpy implementation of the round loop. Mirrors ``_kernel.pyx`` bit for bit."""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KEY_MUL = np.uint64(0xD1B54A32D192ED03)
_IDX_MUL = np.uint64(0xC2B2AE3D27D4EB4F)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def coins(seed: int, keys, idxs) -> np.ndarray:
    """Uniform [0,1) values for each (key, index) pair under ``seed``."""
    keys = np.atleast_1d(np.asarray(keys, dtype=np.int64)).astype(np.uint64)
    idxs = np.atleast_1d(np.asarray(idxs, dtype=np.int64)).astype(np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(np.full(np.broadcast(keys, idxs).shape, np.uint64(seed & (2**64 - 1)) ^ _GOLDEN))
        z = _mix(z ^ (keys * _KEY_MUL))
        z = _mix(z ^ (idxs * _IDX_MUL))
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_M53


def sigmoid(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    p = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.where(p < 1e-300, 0.0, p)


def simulate(
    indptr, src, tgt, weight, lat, bias, kind, coin_key, coin_clock, coin_lag,
    input_ids, input_fire, initial, horizon, seed,
):
    n = bias.shape[0]
    span = int(lat.max()) if lat.size else 1
    states = np.zeros((horizon + 1 + span, n), dtype=np.uint8)  # first `span` rows are pre-history
    states[span] = initial
    if input_ids.size:
        states[span, input_ids] = input_fire[0]
    det = np.flatnonzero(kind == 0)
    sto = np.flatnonzero(kind == 1)
    sto_key = coin_key[sto]
    sto_clock = coin_clock[sto]
    sto_lag = coin_lag[sto]
    clocked = sto_clock >= 0
    clocks = np.unique(sto_clock[clocked])
    counts = np.zeros((horizon + 1, n), dtype=np.int64) if clocks.size else None
    if counts is not None:
        counts[0, clocks] = states[span, clocks]
    for tau in range(1, horizon + 1):
        vals = weight * states[span + tau - lat, src]
        pot = np.bincount(tgt, weights=vals, minlength=n) - bias
        row = states[span + tau]
        row[det] = pot[det] >= 0
        if sto.size:
            idx = np.full(sto.size, tau, dtype=np.int64)
            if clocks.size:
                back = tau - sto_lag[clocked]
                got = np.where(back >= 0, counts[np.maximum(back, 0), sto_clock[clocked]], 0)
                idx[clocked] = 1 + got
            row[sto] = coins(seed, sto_key, idx) < sigmoid(pot[sto])
        if input_ids.size:
            row[input_ids] = input_fire[tau]
        if counts is not None:
            counts[tau, clocks] = counts[tau - 1, clocks] + row[clocks]
    return states[span:]
