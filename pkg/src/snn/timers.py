"""Deterministic neural timers.

The timer is a ripple of divide-by-two layers. Layer 1 is a two-neuron ring
that pulses every other round; layer ``i`` pulses once for every two pulses
of layer ``i-1``. After ``x`` spikes at round ``t0`` the last layer first
pulses at ``t0 + 2**k + k - 1``, a stop relay ``s`` fires one round later,
and the output ``y`` (kept alive by a self-loop) is silenced the round after
that. So ``y`` fires on rounds ``t0+1 .. t0+2**k+k``.

Repeated input spikes are handled by a reset neuron ``r`` and a control
neuron ``c`` that restart the count from the newest spike.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .engine import InputSchedule, detect_state_cycle, run
from .model import BuildReport, Kind, Network, NetworkBuilder, Sign, report_from_builder

RESET = 2.0  # strength of "clear this counting neuron" edges
OVERRIDE = 3.0  # control neuron boost; beats one reset plus the bias


class Exactness(str, enum.Enum):
    EXACT = "exact"
    RELAXED = "relaxed"


@dataclass(frozen=True)
class TimerParams:
    t: int
    exactness: Exactness = Exactness.EXACT

    def __post_init__(self):
        object.__setattr__(self, "exactness", Exactness(self.exactness))
        if self.t < 2:
            raise ValueError("timer needs t >= 2")
        if self.exactness == Exactness.EXACT and exact_layers(self.t) is None:
            raise ValueError(f"t={self.t} is not of the form 2**k + k; use relaxed mode")


def exact_layers(t: int) -> int | None:
    """k with 2**k + k == t, if any."""
    for k in range(1, 64):
        if 2**k + k == t:
            return k
        if 2**k + k > t:
            return None
    return None


def relaxed_layers(t: int) -> int:
    k = 1
    while 2**k + k < t:
        k += 1
    return k


def plan_layers(params: TimerParams) -> tuple[int, list[int], int]:
    """(layer count, preset layers, realized duration) for ``params``."""
    if params.exactness == Exactness.EXACT:
        k = exact_layers(params.t)
        return k, [], params.t
    k = relaxed_layers(params.t)
    # Layers that count from zero contribute 2**(i-1) rounds each on top of
    # a k + 2 round base; the rest are preloaded and contribute nothing.
    extra = max(0, params.t - k - 2)
    extra += extra % 2
    counting = {i for i in range(2, k + 1) if (extra >> (i - 1)) & 1}
    preset = [i for i in range(2, k + 1) if i not in counting]
    return k, preset, k + 2 + extra


def _layers(b: NetworkBuilder, k: int, first_input: int, first_weight: float) -> list[int]:
    """Counting layers; returns ids of every a_{i,j}."""
    a11 = b.add("a_{1,1}", bias=1)
    a12 = b.add("a_{1,2}", bias=1)
    b.connect(first_input, a11, first_weight)
    b.connect(a12, a11, 1)
    b.connect(a11, a12, 1)
    counting = [a11, a12]
    for i in range(2, k + 1):
        prev = b.id(f"a_{{{i - 1},2}}")
        ai1 = b.add(f"a_{{{i},1}}", bias=1)
        ai2 = b.add(f"a_{{{i},2}}", bias=2)
        di = b.inhibitor(f"d_{i}", bias=2)
        b.connect(prev, ai1, 1)
        b.connect(ai1, ai1, 1)
        b.connect(di, ai1, -1)
        for tgt in (ai2, di):
            b.connect(prev, tgt, 1)
            b.connect(ai1, tgt, 1)
        counting += [ai1, ai2]
    return counting


def build_det_timer(params: TimerParams | int, exact: bool = True) -> BuildReport:
    if isinstance(params, int):
        params = TimerParams(params, Exactness.EXACT if exact else Exactness.RELAXED)
    k, preset, duration = plan_layers(params)
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    y = b.add("y", kind=Kind.OUTPUT, bias=1)
    counting = _layers(b, k, x, 3)
    r = b.inhibitor("r", bias=1)
    c = b.add("c", bias=1)
    s = b.inhibitor("s", bias=1)
    b.connect(f"a_{{{k},2}}", s, 1)
    b.connect(x, y, 2)
    b.connect(y, y, 1)
    b.connect(s, y, -1)
    b.connect(x, r, 1)
    b.connect(x, c, 1)
    b.connect(c, y, OVERRIDE)
    b.connect(c, "a_{1,2}", OVERRIDE)
    for i in preset:
        b.connect(c, f"a_{{{i},1}}", OVERRIDE)
    for u in counting:
        b.connect(s, u, -RESET)
    skip = {x, y, r, c, b.id("a_{1,2}")}
    for u in range(len(b.neurons)):
        if u not in skip:
            b.connect(r, u, -RESET)
    return report_from_builder(
        b, t=params.t, exactness=params.exactness.value, layers=k, preset_layers=preset, duration=duration
    )


def build_det_timer_param(t_max: int) -> BuildReport:
    """Timer whose duration is read from inhibitory time inputs ``z_1..z_m``.

    Hold the binary encoding of the wanted duration on the z inputs for the
    whole run. Gate ``g_i`` is on while ``dec(z) <= 2**(i-1) + i - 1``; stop
    neuron ``r_i`` fires when ``g_i`` is on and layer ``i-1`` pulses for the
    first time, so ``y`` stops at the first boundary ``2**(i-1) + i`` that
    covers the requested duration. The gates come up one round after the
    network starts, so ``x`` should fire at round 1 or later.
    """
    if t_max < 2:
        raise ValueError("t_max must be >= 2")
    bits = t_max.bit_length()
    top = 1
    while 2 ** (top - 1) + top - 1 < t_max:
        top += 1
    k = max(1, top - 1)
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    zs = [b.add(f"z_{j}", kind=Kind.INPUT, sign=Sign.INH) for j in range(1, bits + 1)]
    y = b.add("y", kind=Kind.OUTPUT, bias=1)
    counting = _layers(b, k, x, 3)
    b.connect(x, y, 2)
    b.connect(y, y, 1)
    for i in range(1, top + 1):
        gi = b.add(f"g_{i}", bias=-(2 ** (i - 1) + i - 1))
        for j, z in enumerate(zs, start=1):
            b.connect(z, gi, -(2 ** (j - 1)))
        ri = b.inhibitor(f"r_{i}", bias=2)
        b.connect(gi, ri, 1)
        b.connect(x if i == 1 else f"a_{{{i - 1},2}}", ri, 1)
        b.connect(ri, y, -1)
        for u in counting:
            b.connect(ri, u, -RESET)
    return report_from_builder(b, t_max=t_max, layers=k, time_bits=bits)


def param_schedule(report: BuildReport, t_prime: int, horizon: int, x_rounds=(1,)) -> InputSchedule:
    bits = report.params["time_bits"]
    if not 0 <= t_prime < 2**bits or t_prime > report.params["t_max"]:
        raise ValueError(f"t'={t_prime} exceeds t_max={report.params['t_max']}")
    held = [report[f"z_{j}"] for j in range(1, bits + 1) if (t_prime >> (j - 1)) & 1]
    return InputSchedule.build(horizon, {report["x"]: x_rounds}, held)


def param_stop_round(t_prime: int) -> int:
    """Round (after the x spike) at which the soft-wired timer's output falls silent."""
    i = 1
    while 2 ** (i - 1) + i - 1 < t_prime:
        i += 1
    return 2 ** (i - 1) + i


def build_chain_timer(t: int) -> BuildReport:
    """Naive timer: a relay chain of ``t - 1`` OR gates all feeding ``y``."""
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    y = b.add("y", kind=Kind.OUTPUT, bias=1)
    b.connect(x, y, 1)
    prev = x
    for j in range(1, t):
        cur = b.add(f"chain_{j}", bias=1)
        b.connect(prev, cur, 1)
        b.connect(cur, y, 1)
        prev = cur
    return report_from_builder(b, t=t)


class Verdict(str, enum.Enum):
    LOCKED_ON = "locked_on"
    STOPPED_EARLY = "stopped_early"
    OK = "needs_more_neurons_ok"


def pigeonhole_demo(net: Network, t: int, seed: int = 0, max_rounds: int = 2**22) -> Verdict:
    """Drive ``x`` once at round 0 and classify the output.

    The state after round 0 evolves autonomously, so the first repeated
    state fixes the behaviour forever. A candidate is correct only if ``y``
    fires on exactly rounds 1..t and never inside the recurring cycle.
    """
    if net.stochastic:
        raise ValueError("pigeonhole demo needs a deterministic network")
    x, y = net.inputs[0], net.outputs[0]
    tracked = [u for u in range(len(net)) if u != x]
    horizon = min(max_rounds, t + 2 ** len(tracked) + 2)
    size = min(horizon, max(4 * t, 64))
    while True:
        trace = run(net, InputSchedule.build(size, {x: [0]}), seed=seed)
        cyc = detect_state_cycle(trace, tracked, start=max(1, t + 1))
        if cyc is not None or size >= horizon:
            break
        size = min(horizon, size * 4)
    fires = trace.fired(y)
    window_ok = bool(fires[1 : t + 1].all())
    if cyc is None:
        tail = fires[t + 1 :]
        return Verdict.OK if window_ok and not tail.any() else Verdict.LOCKED_ON if tail.any() else Verdict.STOPPED_EARLY
    start, end = cyc
    looping = bool(fires[start:end].any())
    extra = bool(fires[t + 1 : end].any())
    if looping:
        return Verdict.LOCKED_ON
    if window_ok and not extra:
        return Verdict.OK
    return Verdict.STOPPED_EARLY


def aux_count(report: BuildReport) -> int:
    return len(report.network.auxiliaries)


def timer_window(trace, report: BuildReport) -> np.ndarray:
    return np.flatnonzero(trace.fired(report["y"]))
