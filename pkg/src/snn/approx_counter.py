"""Approximate spike counter in the style of Morris.

Small counts go to an exact binary counter ``SC``. Once ``SC`` passes
``s`` the indicator ``v_I`` latches, ``v_r`` wipes ``SC`` for good, and a
second binary counter ``AC`` takes over, loaded with
``ceil(log_alpha(1/delta + 1))``. ``AC`` stores an exponent: every input
spike increments it with probability ``1/(1 + alpha**z)``, which is what
the single stochastic neuron ``a*`` fires with when it reads ``-z ln alpha``
from the inhibitory copies of ``AC``.

While ``AC`` ripples an increment through its layers the wait module holds
``x_ac`` down, so attempts always see a settled value. When the wait ends
the settled bits are copied into the holding layer ``c''``, which is what
the outputs read. Output ``y_i`` fires while ``z log2(alpha) - log2(alpha-1)
>= i`` in the large-count regime and mirrors bit ``i`` of ``SC`` before.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .counters import add_counter
from .engine import ExecutionTrace
from .model import BuildReport, Gate, Kind, NetworkBuilder, report_from_builder

WIPE = 5.0


@dataclass(frozen=True)
class ApproxCounterParams:
    t: int
    delta: float
    alpha: float | None = None
    s: int | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.t < 2 or 1 / self.delta >= self.t:
            raise ValueError("need 1/delta < t")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1 + self.delta)
        if self.alpha <= 1:
            raise ValueError("alpha must be > 1")
        if self.s is None:
            object.__setattr__(self, "s", math.ceil(1 / (self.delta * (self.alpha - 1)) - 1e-9))
        if self.s < 2:
            raise ValueError("s must be >= 2")

    @cached_property
    def init_z(self) -> int:
        """Exponent loaded into AC when the small counter overflows."""
        return math.ceil(math.log(1 / self.delta + 1, self.alpha) - 1e-9)

    @property
    def sc_bits(self) -> int:
        return (self.s + 1).bit_length()

    @property
    def ac_bits(self) -> int:
        top = max(math.log(self.t, self.alpha), self.init_z + 1)
        return max(1, math.ceil(math.log2(top + 1)))

    @property
    def outputs(self) -> int:
        return max(math.ceil(math.log2(self.t)), self.sc_bits)

    @property
    def wait(self) -> int:
        """Rounds ``x_ac`` stays blocked after an increment (covers a full ripple)."""
        return self.ac_bits + 2


@dataclass(frozen=True)
class MorrisChainState:
    z: int
    n: int


def morris_oracle(n: int, alpha: float, init_z: int, seed=None) -> MorrisChainState:
    """Plain Morris chain: ``z += 1`` with probability ``1/(1 + alpha**z)``, ``n`` times."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    z = init_z
    for u in rng.random(n):
        if u < 1 / (1 + alpha**z):
            z += 1
    return MorrisChainState(z, n)


def morris_samples(n: int, alpha: float, init_z: int, trials: int, seed=None) -> np.ndarray:
    """``trials`` independent final exponents of the Morris chain, vectorized."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    z = np.full(trials, init_z, dtype=np.int64)
    for _ in range(n):
        z += rng.random(trials) < 1 / (1 + alpha ** z.astype(float))
    return z


def morris_distribution(n: int, alpha: float, init_z: int) -> np.ndarray:
    """Exact law of the exponent after ``n`` steps; entry ``k`` is Pr[z = init_z + k]."""
    dist = np.zeros(n + 1)
    dist[0] = 1.0
    up = 1 / (1 + alpha ** (init_z + np.arange(n + 1, dtype=float)))
    for _ in range(n):
        moved = dist * up
        dist = dist - moved
        dist[1:] += moved[:-1]
    return dist


def build_approx_counter(params: ApproxCounterParams) -> BuildReport:
    p = params
    alpha = p.alpha
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)

    # small counts
    sc_bits = add_counter(b, x, p.sc_bits, prefix="sc.")
    sc_all = [u for u in range(len(b.neurons)) if b.neurons[u].label.startswith("sc.")]
    full = b.add("full", bias=p.s + 1)
    for i, bit in enumerate(sc_bits):
        b.connect(bit, full, 2**i)
    v_i = b.add("v_I", bias=1)
    b.connect(full, v_i, 1)
    b.connect(v_i, v_i, 1)
    v_r = b.inhibitor("v_r", bias=1)
    b.connect(full, v_r, 1)
    b.connect(v_i, v_r, 1)
    for u in sc_all:
        b.connect(v_r, u, -WIPE)

    # large counts
    x_ac = b.add("x_ac", bias=3)
    ac_bits = add_counter(b, x_ac, p.ac_bits, prefix="ac.")
    for i, bit in enumerate(ac_bits):
        if (p.init_z >> i) & 1:
            b.connect(full, bit, WIPE)
    star = b.add("a*", bias=0, gate=Gate.STOCH)
    for i, bit in enumerate(ac_bits, start=1):
        inv = b.inhibitor(f"c_{{{i},2}}", bias=1)
        b.connect(bit, inv, 1)
        b.connect(inv, star, -(2 ** (i - 1)) * math.log(alpha))
    b.connect(x, x_ac, 1)
    b.connect(star, x_ac, 1)
    b.connect(v_i, x_ac, 1)

    # wait module: hold h from the trigger until the chain's end pulse
    hold = b.add("h", bias=1)
    g_r = b.inhibitor("g_r", bias=1)
    head = b.add("wt_0", bias=1)
    for src in (x_ac, full):
        b.connect(src, hold, 1)
        b.connect(src, g_r, 1)
        b.connect(src, head, 1)
    last = b.chain(head, "wt", p.ac_bits - 1)
    g = b.add("g", bias=1)
    e = b.inhibitor("e", bias=1)
    cl = b.inhibitor("cl", bias=1)
    b.connect(last, g, 1)
    b.connect(last, e, 1)
    b.connect(hold, hold, 1)
    b.connect(e, hold, -2)
    b.connect(hold, g_r, 1)
    b.connect(g_r, x_ac, -WIPE)
    # g_r only sees x_ac a round late; g_0 fires alongside x_ac so the next round is blocked too
    g_0 = b.inhibitor("g_0", bias=3)
    for src in (x, star, v_i):
        b.connect(src, g_0, 1)
    b.connect(g_0, x_ac, -WIPE)
    b.connect(g, cl, 1)

    held = []
    for i, bit in enumerate(ac_bits, start=1):
        c1 = b.add(f"c'_{i}", bias=2)
        b.connect(bit, c1, 1)
        b.connect(g, c1, 1)
        c2 = b.add(f"c''_{i}", bias=1)
        b.connect(c1, c2, 2)
        b.connect(c2, c2, 1)
        b.connect(cl, c2, -1)
        held.append(c2)

    # outputs; v_I lifts the threshold so negative offsets stay silent before the switch
    offset = math.log2(alpha - 1)
    lift = max(0.0, -offset) + 1
    for i in range(1, p.outputs + 1):
        bias = i + offset + lift
        yi = b.add(f"y_{i}", kind=Kind.OUTPUT, bias=bias)
        for j, c2 in enumerate(held):
            b.connect(c2, yi, math.log2(alpha) * 2**j)
        b.connect(v_i, yi, lift)
        if i <= len(sc_bits):
            b.connect(sc_bits[i - 1], yi, bias)

    return report_from_builder(
        b, t=p.t, delta=p.delta, alpha=alpha, s=p.s, init_z=p.init_z,
        sc_bits=p.sc_bits, ac_bits=p.ac_bits, outputs=p.outputs, wait=p.wait,
    )


def output_ids(report: BuildReport) -> list[int]:
    return [report[f"y_{i}"] for i in range(1, report.params["outputs"] + 1)]


def decode_estimate(trace: ExecutionTrace, report: BuildReport, rnd: int) -> int:
    """Count encoded by the outputs at round ``rnd``.

    Before the switch the outputs are the small counter's bits. After it,
    with outputs ``1..S`` firing, the estimate is ``2**(S+1) - 2``.
    """
    if not 0 <= rnd <= trace.horizon:
        raise ValueError(f"round {rnd} outside trace")
    ys = trace.states[rnd, output_ids(report)].astype(bool)
    large = rnd >= 1 and bool(trace.states[rnd - 1, report["v_I"]])
    if not large:
        return int(sum(1 << i for i, v in enumerate(ys) if v))
    fired = np.flatnonzero(ys)
    top = int(fired[-1]) + 1 if fired.size else 0
    return 2 ** (top + 1) - 2


def ac_value(trace: ExecutionTrace, report: BuildReport, rnd: int) -> int:
    """Exponent held by the AC counter bits at round ``rnd``."""
    ids = [report[f"ac.a_{{{i},1}}"] for i in range(1, report.params["ac_bits"] + 1)]
    return int(sum(int(v) << i for i, v in enumerate(trace.states[rnd, ids])))


def dropped_spikes(trace: ExecutionTrace, report: BuildReport) -> int:
    """Input spikes that fell inside a wait after the switch and were never attempted."""
    s = trace.states
    x, g_r, v_i = report["x"], report["g_r"], report["v_I"]
    return int((s[:, x].astype(bool) & s[:, g_r].astype(bool) & s[:, v_i].astype(bool)).sum())


def settle_rounds(report: BuildReport) -> int:
    """Rounds after the last input spike by which the outputs are final."""
    return report.params["wait"] + report.params["sc_bits"] + 8
