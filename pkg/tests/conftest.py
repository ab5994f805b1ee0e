import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from snn.harness import RandomNetSpec, random_network
from snn.model import Gate, Kind, Mode, Network, Neuron, Sign, Synapse

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

half = st.integers(-6, 10).map(lambda k: k / 2)


@st.composite
def networks(draw, max_neurons=8, stochastic=True, max_latency=1):
    """Sign-consistent networks with optional stochastic gates and latencies."""
    n_in = draw(st.integers(0, 2))
    n_body = draw(st.integers(1, max_neurons))
    neurons = []
    for i in range(n_in):
        neurons.append(Neuron(f"x{i}", Kind.INPUT, Gate.DET, draw(st.sampled_from(Sign))))
    for i in range(n_body):
        gate = draw(st.sampled_from(Gate)) if stochastic else Gate.DET
        kind = Kind.OUTPUT if i == n_body - 1 else Kind.AUX
        neurons.append(Neuron(f"v{i}", kind, gate, draw(st.sampled_from(Sign)), draw(half)))
    n = len(neurons)
    synapses = []
    for u in range(n):
        for v in range(n_in, n):
            if draw(st.booleans()) and draw(st.booleans()):
                mag = draw(st.integers(1, 8)) / 2
                w = -mag if neurons[u].sign == Sign.INH else mag
                lat = 1 if u == v else draw(st.integers(1, max_latency))
                synapses.append(Synapse(u, v, w, lat))
    return Network(tuple(neurons), tuple(synapses), Mode.ASYNC if max_latency > 1 else Mode.SYNC)


def small_random_net(seed: int, n: int = 8, stochastic: int = 0, inputs: int = 2) -> Network:
    return random_network(RandomNetSpec(n, stochastic=stochastic, seed=seed, inputs=inputs))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES):
            terminalreporter.write_line(line)
