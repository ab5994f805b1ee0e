import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snn.counters import CounterParams, bit_ids, build_det_counter, decode_counter, decode_series, update_delay
from snn.engine import InputSchedule, run
from snn.model import validate


def count_run(rep, spikes, extra=10):
    horizon = spikes[-1] + extra if spikes else extra
    return run(rep.network, InputSchedule.build(horizon, {rep["x"]: spikes}))


def spaced(rng, n, max_gap=4):
    gaps = rng.integers(2, 2 + max_gap, size=n)
    return np.cumsum(gaps).tolist()


def test_params():
    assert CounterParams(64).bits == 7
    with pytest.raises(ValueError):
        CounterParams(1)


def test_update_delay():
    assert [update_delay(n) for n in (1, 2, 3, 4, 64)] == [1, 2, 2, 3, 7]


def test_no_spikes_decodes_zero():
    rep = build_det_counter(16)
    tr = run(rep.network, InputSchedule.build(10))
    assert decode_series(tr, rep).tolist() == [0] * 11


def test_three_spikes():
    rep = build_det_counter(16)
    tr = count_run(rep, [1, 3, 5])
    assert decode_counter(tr, rep, 5 + update_delay(3)) == 3


@pytest.mark.parametrize("n", [1, 2, 7, 8, 31, 32, 64])
def test_value_held_after_delay(n):
    rep = build_det_counter(64)
    spikes = list(range(1, 2 * n, 2))
    tr = count_run(rep, spikes, extra=20)
    series = decode_series(tr, rep)
    settle = spikes[-1] + update_delay(n)
    assert (series[settle:] == n).all()


@given(st.integers(1, 64), st.integers(0, 2**32))
def test_random_spacing(n, seed):
    rep = build_det_counter(64)
    spikes = spaced(np.random.default_rng(seed), n)
    tr = count_run(rep, spikes, extra=12)
    assert decode_counter(tr, rep, spikes[-1] + update_delay(n)) == n


@given(st.integers(1, 40), st.integers(0, 2**32))
def test_running_count_never_overshoots(n, seed):
    rep = build_det_counter(64)
    spikes = spaced(np.random.default_rng(seed), n)
    series = decode_series(count_run(rep, spikes), rep)
    seen = np.searchsorted(spikes, np.arange(series.size), side="right")
    assert (series <= seen).all()


def test_outputs_mirror_bits():
    rep = build_det_counter(16)
    tr = count_run(rep, [1, 3, 5, 7, 9], extra=10)
    r = tr.horizon
    ys = [int(tr.states[r, rep[f"y_{i}"]]) for i in range(1, 6)]
    bits = [int(tr.states[r - 1, b]) for b in bit_ids(rep)]
    assert ys == bits
    assert validate(rep.network) == []
