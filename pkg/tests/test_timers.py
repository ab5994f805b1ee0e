import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from snn.engine import InputSchedule, run
from snn.model import Gate, Kind, Network, Neuron, Synapse, validate
from snn.timers import (
    Exactness,
    TimerParams,
    Verdict,
    aux_count,
    build_chain_timer,
    build_det_timer,
    build_det_timer_param,
    exact_layers,
    param_schedule,
    param_stop_round,
    pigeonhole_demo,
    plan_layers,
)

EXACT_T = [2**k + k for k in range(1, 11)]


def y_rounds(report, spikes, horizon):
    return run(report.network, InputSchedule.build(horizon, {report["x"]: spikes})).rounds("y")


def test_exact_layers():
    assert [exact_layers(t) for t in (3, 6, 11, 5, 7)] == [1, 2, 3, None, None]


def test_exact_mode_rejects_off_grid():
    with pytest.raises(ValueError):
        TimerParams(5, Exactness.EXACT)
    with pytest.raises(ValueError):
        TimerParams(1, Exactness.RELAXED)


def test_t6_layer_schedule():
    rep = build_det_timer(6)
    tr = run(rep.network, InputSchedule.build(20, {rep["x"]: [0]}))
    assert tr.rounds("a_{1,2}")[:2] == [2, 4]
    assert tr.first("a_{2,2}") == 5
    assert tr.rounds("y") == [1, 2, 3, 4, 5, 6]


@pytest.mark.parametrize("t", [3, 6, 11, 20, 37, 70, 135])
def test_single_spike_exact_window(t):
    rep = build_det_timer(t)
    assert y_rounds(rep, [0], t * t) == list(range(1, t + 1))


@pytest.mark.parametrize("t", [6, 11, 20, 37, 70])
def test_layer_pulse_schedule(t):
    rep = build_det_timer(t)
    k = rep.params["layers"]
    tr = run(rep.network, InputSchedule.build(3 * t, {rep["x"]: [0]}))
    for i in range(1, k + 1):
        expect = [l * 2**i + i - 1 for l in range(1, 2**k // 2**i + 1)]
        got = tr.rounds(f"a_{{{i},2}}")
        assert [r for r in got if r <= 2**k + i - 1] == expect
        # nothing after the global reset
        assert all(r <= t for r in got)


@pytest.mark.parametrize("t", [11, 37])
def test_second_spike_any_offset(t):
    rep = build_det_timer(t)
    for t2 in range(1, 2 * t + 3):
        expect = sorted(set(range(1, t + 1)) | set(range(t2 + 1, t2 + t + 1)))
        assert y_rounds(rep, [0, t2], 4 * t) == expect, t2


def test_case2_example_continues_through_20():
    rep = build_det_timer(11)
    assert y_rounds(rep, [0, 9], 40) == list(range(1, 21))


@given(st.sampled_from([6, 11, 20]), st.lists(st.integers(0, 80), min_size=1, max_size=6, unique=True))
def test_spike_trains_follow_latest_spike(t, spikes):
    rep = build_det_timer(t)
    got = y_rounds(rep, spikes, 120)
    expect = sorted({r for s in spikes for r in range(s + 1, s + t + 1)})
    assert got == expect


@pytest.mark.parametrize("t", EXACT_T)
def test_exact_size_bound(t):
    rep = build_det_timer(t)
    assert validate(rep.network) == []
    assert aux_count(rep) <= 3 * math.log2(t) + 3


@given(st.integers(2, 300))
def test_relaxed_window_and_size(t):
    rep = build_det_timer(t, exact=False)
    dur = rep.params["duration"]
    assert t <= dur <= t + 2 * math.ceil(math.log2(t))
    assert y_rounds(rep, [0], 2 * dur + 4) == list(range(1, dur + 1))
    assert aux_count(rep) < 3 * math.log2(t) + 5


def test_relaxed_plan_matches_exact_on_grid():
    for t in EXACT_T[:6]:
        k, preset, dur = plan_layers(TimerParams(t, Exactness.RELAXED))
        assert (k, dur) == (exact_layers(t), t)


def test_size_regression():
    assert [aux_count(build_det_timer(t)) for t in (3, 6, 11, 1034)] == [5, 8, 11, 32]


# soft-wired duration


@pytest.mark.parametrize("t_max", [10, 40])
def test_param_timer_quantized_stop(t_max):
    rep = build_det_timer_param(t_max)
    for tp in range(1, t_max + 1):
        tr = run(rep.network, param_schedule(rep, tp, 3 * t_max + 10))
        got = tr.rounds("y")
        stop = param_stop_round(tp)
        assert got == list(range(2, 2 + stop - 1)), tp
        assert stop - 1 >= tp


def test_param_timer_exact_on_boundary():
    rep = build_det_timer_param(40)
    for i in range(2, 6):
        tp = 2 ** (i - 1) + i - 1
        got = run(rep.network, param_schedule(rep, tp, 80)).rounds("y")
        assert len(got) == tp


def test_param_timer_at_max_matches_relaxed_on_grid():
    for t in (11, 20, 37):
        rep = build_det_timer_param(t)
        got = run(rep.network, param_schedule(rep, t, 4 * t, x_rounds=(1,))).rounds("y")
        relaxed = y_rounds(build_det_timer(t, exact=False), [1], 4 * t)
        assert got == relaxed


def test_param_timer_rejects_oversized_input():
    rep = build_det_timer_param(10)
    with pytest.raises(ValueError):
        param_schedule(rep, 11, 30)


# pigeonhole


def test_pigeonhole_real_timers_ok():
    assert pigeonhole_demo(build_det_timer(6).network, 6) == Verdict.OK
    assert pigeonhole_demo(build_det_timer(70).network, 70) == Verdict.OK
    assert pigeonhole_demo(build_chain_timer(12).network, 12) == Verdict.OK


def test_pigeonhole_self_loop_output():
    net = Network((Neuron("x", Kind.INPUT), Neuron("y", Kind.OUTPUT, bias=1.0)), (Synapse(0, 1, 1.0), Synapse(1, 1, 1.0)))
    assert pigeonhole_demo(net, 4) == Verdict.LOCKED_ON


def test_pigeonhole_silent_output_stops_early():
    net = Network((Neuron("x", Kind.INPUT), Neuron("y", Kind.OUTPUT, bias=1.0)), ())
    assert pigeonhole_demo(net, 4) == Verdict.STOPPED_EARLY


def test_pigeonhole_needs_deterministic():
    net = Network((Neuron("x", Kind.INPUT), Neuron("y", Kind.OUTPUT, Gate.STOCH)), ())
    with pytest.raises(ValueError):
        pigeonhole_demo(net, 4)
