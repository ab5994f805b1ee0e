import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snn.engine import InputSchedule, fire_probability, run
from snn.model import validate
from snn.rand_timers import (
    RandTimerParams,
    build_rand_basic,
    build_rand_improved,
    phase_counts,
    phase_ends,
    population_size,
    survivor_counts,
)


def test_population_size_regression():
    assert population_size(0.05) == 185
    assert population_size(1e-6) == 1278


@given(st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
@settings(max_examples=20)
def test_population_size_monotone(d1, d2):
    lo, hi = sorted((d1, d2))
    assert population_size(lo) >= population_size(hi)


def test_params_variants():
    assert RandTimerParams(64, 0.05, chernoff_constant=24).ell == math.ceil(24 * math.log(20)) == 72
    assert RandTimerParams(64, 0.05, ell_override=9).ell == 9
    assert RandTimerParams(64, 0.05).ell == 185
    for bad in (dict(t=64, delta=0.0), dict(t=1, delta=0.1), dict(t=64, delta=0.1, ell_override=0)):
        with pytest.raises(ValueError):
            RandTimerParams(**bad)


def test_phase_length_is_power_of_two_covering_attempts():
    p = RandTimerParams(10**4, 0.05)
    assert p.ell_prime == 2**p.phase_layers >= 4 * p.ell + p.count_bits + 6
    assert p.ell_prime // 2 < 4 * p.ell + p.count_bits + 6


def test_basic_structure():
    p = RandTimerParams(64, 0.05)
    rep = build_rand_basic(p)
    net = rep.network
    assert validate(net) == []
    assert len(net.stochastic) == p.ell == len(net.auxiliaries)
    a = rep["a_1"]
    bias = net.neurons[a].bias
    w = {(s.source, s.target): s.weight for s in net.synapses}
    assert w[(a, a)] == w[(rep["x"], a)] == pytest.approx(math.log(63) + bias)
    # a survivor keeps firing with probability exactly 1 - 1/t
    assert fire_probability(w[(a, a)] - bias) == pytest.approx(1 - 1 / 64)


def test_basic_dropouts_never_return():
    rep = build_rand_basic(RandTimerParams(32, 0.05, ell_override=40))
    for seed in range(20):
        tr = run(rep.network, InputSchedule.build(128, {rep["x"]: [0]}), seed=seed)
        counts, spurious = survivor_counts(tr, rep, 100)
        assert not spurious
        assert (np.diff(counts) <= 0).all()


def test_basic_output_follows_population():
    rep = build_rand_basic(RandTimerParams(64, 0.05))
    thr = rep.params["threshold"]
    tr = run(rep.network, InputSchedule.build(200, {rep["x"]: [0]}), seed=1)
    counts, _ = survivor_counts(tr, rep, 199)
    y = tr.fired("y")
    # rounds 2.. : y(r) iff survivors(r-1) >= threshold
    assert np.array_equal(y[2:201], counts[:199] >= thr)


def test_basic_reliability_small():
    rep = build_rand_basic(RandTimerParams(64, 0.05))
    fires = late = 0
    for seed in range(300):
        y = run(rep.network, InputSchedule.build(200, {rep["x"]: [0]}), seed=seed, check=False).fired("y")
        fires += y[1:65].all()
        late += y[128:].any()
    assert fires >= 290 and late <= 25


def test_improved_structure_and_size():
    p = RandTimerParams(10**4, 1e-6)
    rep = build_rand_improved(p)
    net = rep.network
    assert validate(net) == []
    assert [net.label(u) for u in net.stochastic] == ["a*"]
    assert len(net.auxiliaries) == 166
    assert rep.params["t_prime"] == 2


def test_improved_rejects_short_horizon():
    with pytest.raises(ValueError):
        build_rand_improved(RandTimerParams(100, 0.05, ell_override=16))
    with pytest.raises(ValueError):
        build_rand_improved(RandTimerParams(128, 0.05, ell_override=16))


def attempts_per_phase(tr, rep, phases, x_round=0):
    bounds = [x_round] + phase_ends(tr, rep, x_round)
    z = np.array(tr.rounds("z_1"))
    return [int(((z > bounds[i]) & (z <= bounds[i + 1])).sum()) for i in range(phases)]


@settings(max_examples=15)
@given(st.integers(0, 2**32))
def test_improved_attempts_replay_previous_count(seed):
    rep = build_rand_improved(RandTimerParams(1024, 0.05, ell_override=16))
    tr = run(rep.network, InputSchedule.build(1100, {rep["x"]: [0]}), seed=seed)
    counts, spurious = phase_counts(tr, rep, 8)
    tries = attempts_per_phase(tr, rep, 8)
    assert not spurious
    assert tries[0] == 16
    assert tries[1:] == counts[:-1].tolist()


def test_improved_phase_length():
    rep = build_rand_improved(RandTimerParams(1024, 0.05, ell_override=16))
    tr = run(rep.network, InputSchedule.build(1100, {rep["x"]: [0]}), seed=0)
    assert set(np.diff(phase_ends(tr, rep)).tolist()) == {rep.params["ell_prime"]}


def test_improved_reset_mid_count():
    rep = build_rand_improved(RandTimerParams(1024, 0.05, ell_override=16))
    for seed in range(5):
        tr = run(rep.network, InputSchedule.build(1400, {rep["x"]: [0, 300]}), seed=seed)
        tries = attempts_per_phase(tr, rep, 4, x_round=300)
        counts, spurious = phase_counts(tr, rep, 4, x_round=300)
        assert not spurious
        assert tries[0] == 16 and tries[1:] == counts[:-1].tolist()
        assert tr.fired("y")[301:420].all()


def test_improved_matches_basic_in_distribution_small():
    ell, trials = 16, 1500
    basic = build_rand_basic(RandTimerParams(8, 0.05, ell_override=ell))
    improved = build_rand_improved(RandTimerParams(1024, 0.05, ell_override=ell))
    tb, ti = Counter(), Counter()
    for seed in range(trials):
        trb = run(basic.network, InputSchedule.build(10, {basic["x"]: [0]}), seed=seed, check=False)
        tb[int(survivor_counts(trb, basic, 3)[0][2])] += 1
        tri = run(improved.network, InputSchedule.build(420, {improved["x"]: [0]}), seed=seed, check=False)
        ti[int(phase_counts(tri, improved, 3)[0][2])] += 1
    tv = 0.5 * sum(abs(tb[k] - ti[k]) for k in set(tb) | set(ti)) / trials
    assert tv < 0.08
