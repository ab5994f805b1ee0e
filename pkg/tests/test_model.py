import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import networks, small_random_net
from snn.model import (
    Gate,
    InvalidNetwork,
    Kind,
    Mode,
    Network,
    NetworkBuilder,
    Neuron,
    Sign,
    Synapse,
    dumps,
    ensure_valid,
    load,
    loads,
    save,
    validate,
)


def codes(net):
    return {v.code for v in validate(net)}


def test_empty_network_is_valid():
    assert validate(Network((), ())) == []


def test_sign_rule_both_directions():
    exc = Network((Neuron("a"), Neuron("b")), (Synapse(0, 1, -1.0),))
    inh = Network((Neuron("a", sign=Sign.INH), Neuron("b")), (Synapse(0, 1, 1.0),))
    assert codes(exc) == {"sign"}
    assert codes(inh) == {"sign"}


def test_zero_weight_is_allowed_for_either_sign():
    net = Network((Neuron("a", sign=Sign.INH), Neuron("b")), (Synapse(0, 1, 0.0), Synapse(1, 0, 0.0)))
    assert validate(net) == []


def test_input_in_degree_and_stochastic_input():
    net = Network((Neuron("x", Kind.INPUT, Gate.STOCH), Neuron("y")), (Synapse(1, 0, 1.0),))
    assert codes(net) == {"input-in-degree", "stochastic-input"}


def test_dangling_and_duplicate_labels():
    net = Network((Neuron("a"), Neuron("a")), (Synapse(0, 5, 1.0),))
    assert codes(net) == {"duplicate-label", "dangling"}


def test_latency_rules_per_mode():
    base = (Neuron("a"), Neuron("b"))
    assert codes(Network(base, (Synapse(0, 1, 1.0, 2),), Mode.SYNC)) == {"latency"}
    assert codes(Network(base, (Synapse(0, 1, 1.0, 2),), Mode.ASYNC)) == set()
    assert codes(Network(base, (Synapse(0, 0, 1.0, 2),), Mode.ASYNC)) == {"self-loop-latency"}
    assert codes(Network(base, (Synapse(0, 1, 1.0, 0),), Mode.ASYNC)) == {"latency"}


def test_non_finite_values_rejected():
    net = Network((Neuron("a", bias=math.inf), Neuron("b")), (Synapse(0, 1, math.nan),))
    assert codes(net) == {"bias", "weight"}


def test_coin_clock_lag_must_be_positive():
    clocked = Neuron("s", gate=Gate.STOCH, coin_key=7, coin_clock=0, coin_lag=0)
    assert codes(Network((Neuron("g"), clocked), ())) == {"coin-lag"}
    ok = Neuron("s", gate=Gate.STOCH, coin_key=7, coin_clock=0, coin_lag=1)
    assert validate(Network((Neuron("g"), ok), ())) == []
    assert codes(Network((Neuron("s", coin_clock=9, coin_lag=1),), ())) == {"dangling"}


def test_ensure_valid_raises_with_all_violations():
    net = Network((Neuron("a"), Neuron("a")), (Synapse(0, 1, -1.0),))
    with pytest.raises(InvalidNetwork) as err:
        ensure_valid(net)
    assert {v.code for v in err.value.violations} == {"duplicate-label", "sign"}


def test_builder_rejects_duplicate_labels():
    b = NetworkBuilder()
    b.add("a")
    with pytest.raises(ValueError):
        b.add("a")


def test_builder_chain():
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    last = b.chain(x, "c", 3, last_sign=Sign.INH)
    net = b.build()
    assert [nr.label for nr in net.neurons] == ["x", "c_1", "c_2", "c_3"]
    assert net.neurons[last].sign == Sign.INH
    assert [(s.source, s.target) for s in net.synapses] == [(0, 1), (1, 2), (2, 3)]


def test_with_latencies_requires_one_per_synapse():
    net = Network((Neuron("a"), Neuron("b")), (Synapse(0, 1, 1.0),))
    with pytest.raises(ValueError):
        net.with_latencies([1, 2])
    assert net.with_latencies([3]).synapses[0].latency == 3


def test_csr_preserves_synapse_order_within_target():
    net = Network((Neuron("a"), Neuron("b"), Neuron("c")), (Synapse(0, 2, 1.0), Synapse(1, 0, 2.0), Synapse(1, 2, 3.0)))
    a = net.arrays
    assert a.indptr.tolist() == [0, 1, 1, 3]
    assert a.weight.tolist() == [2.0, 1.0, 3.0]


@given(networks(max_latency=3))
def test_text_round_trip(net):
    assert loads(dumps(net)) == net


def test_round_trip_keeps_coin_fields(tmp_path):
    neurons = (
        Neuron("g"),
        Neuron("s", gate=Gate.STOCH, coin_key=12, coin_clock=0, coin_lag=3),
        Neuron("k", gate=Gate.STOCH, coin_key=4),
        Neuron("tab label ok", bias=0.1),
    )
    net = Network(neurons, (Synapse(0, 1, 0.30000000000000004),), Mode.ASYNC)
    path = tmp_path / "n.net"
    save(net, path)
    back = load(path)
    assert back == net
    assert back.neurons[1].coin_clock == 0 and back.neurons[1].coin_lag == 3
    assert back.neurons[2].coin_key == 4 and back.neurons[2].coin_clock is None


def test_loads_rejects_foreign_text():
    with pytest.raises(ValueError):
        loads("hello\n")


@given(st.integers(0, 2**20))
def test_dumps_is_canonical(seed):
    net = small_random_net(seed % 1000)
    assert dumps(loads(dumps(net))) == dumps(net)
