"""Randomized timers.

``RandBasic`` keeps a population of ``ell`` stochastic neurons alive on
their self-loops; each survives a round with probability ``1 - 1/t``. The
output fires while at least ``ell/(2e)`` of them fired in the previous
round, which separates round ``t`` (about ``ell/e`` survivors) from round
``2t`` (about ``ell/e^2``).

``RandImproved`` replays the same population one sample at a time with a
single stochastic neuron ``a*``. Time is split into phases of ``ell'``
rounds. Phase ``i`` gives ``a*`` exactly as many attempts as it fired in
phase ``i-1`` (``ell`` attempts in phase 1), so the per-phase fire counts
form the same binomial chain as RandBasic's per-round survivor counts.

Improved-timer layout (times relative to the phase-end pulse ``E`` at ``e``):

* a free-running divider (the deterministic timer's layers) gives a strobe
  every 4 rounds (``a_{2,2}``) and ``E`` every ``ell' = 2**K`` rounds;
* the countdown register ``r_1..r_B`` decrements once per strobe while
  nonzero. Its gates read one-round-old copies (``rv_i`` and the inhibitory
  ``rn_i``). ``z_1`` fires on those strobes, and ``a*`` attempts one round
  later;
* the phase counter (a binary counter fed by ``a*``) holds the fire count;
* at ``e+1`` the copy gates ``c_i`` read the counter and ``k`` fires. At
  ``e+2`` ``k`` clears counter, register and the held count ``q``; at
  ``e+3`` the delayed copies ``c'_i`` load register and ``q`` with the new
  count;
* ``y`` fires while ``q >= ell/(2e)``; ``gap`` bridges the clear round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import binom

from .counters import add_counter
from .model import BuildReport, Gate, Kind, NetworkBuilder, report_from_builder

CLEAR = 4.0
LOAD = 8.0  # beats CLEAR plus the bias and a concurrent toggle-off


def population_size(delta: float, t: int | None = None) -> int:
    """Smallest ``ell`` whose binomial tails at both ends are at most ``delta/2``.

    Survival to round ``t`` and to round ``2t`` use the limiting rates
    ``1/e`` and ``1/e^2``, or the exact ones when ``t`` is given.
    """
    p_keep = 1 / math.e if t is None else (1 - 1 / t) ** (t - 1)
    p_stop = math.exp(-2) if t is None else (1 - 1 / t) ** (2 * t - 1)
    p_stop = max(p_stop, math.exp(-2))
    p_keep = min(p_keep, 1 / math.e)
    ell = 2
    while True:
        need = math.ceil(ell / (2 * math.e))
        if binom.cdf(need - 1, ell, p_keep) <= delta / 2 and binom.sf(need - 1, ell, p_stop) <= delta / 2:
            return ell
        ell += 1


@dataclass(frozen=True)
class RandTimerParams:
    t: int
    delta: float
    chernoff_constant: float | None = None
    bias_constant: float = 3.0
    ell_override: int | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.t < 2:
            raise ValueError("t must be >= 2")
        if self.ell_override is not None and self.ell_override < 1:
            raise ValueError("ell must be >= 1")

    @cached_property
    def ell(self) -> int:
        if self.ell_override is not None:
            return self.ell_override
        if self.chernoff_constant is not None:
            return max(1, math.ceil(self.chernoff_constant * math.log(1 / self.delta)))
        return population_size(self.delta)

    @property
    def threshold(self) -> float:
        return self.ell / (2 * math.e)

    @property
    def count_bits(self) -> int:
        return self.ell.bit_length()

    @property
    def phase_layers(self) -> int:
        k = 1
        while 2**k < 4 * self.ell + self.count_bits + 6:
            k += 1
        return k

    @property
    def ell_prime(self) -> int:
        return 2**self.phase_layers

    @property
    def t_prime(self) -> int:
        return -(-self.t // self.ell_prime)

    def unit_bias(self, t: int) -> float:
        return self.bias_constant * math.log(t * self.ell / self.delta)


def build_rand_basic(params: RandTimerParams) -> BuildReport:
    ell, t = params.ell, params.t
    bias = params.unit_bias(t)
    w = math.log(t - 1) + bias
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    thr = params.threshold
    y = b.add("y", kind=Kind.OUTPUT, bias=thr)
    b.connect(x, y, thr)
    for i in range(1, ell + 1):
        a = b.add(f"a_{i}", bias=bias, gate=Gate.STOCH)
        b.connect(x, a, w)
        b.connect(a, a, w)
        b.connect(a, y, 1)
    return report_from_builder(
        b, t=t, delta=params.delta, ell=ell, unit_bias=bias, threshold=thr,
    )


def build_rand_improved(params: RandTimerParams) -> BuildReport:
    ell, t = params.ell, params.t
    bits, K = params.count_bits, params.phase_layers
    t_prime = params.t_prime
    if t < params.ell_prime:
        raise ValueError(f"t={t} is shorter than one phase ({params.ell_prime} rounds)")
    if t_prime < 2:
        raise ValueError("need at least two phases (t >= 2*ell')")
    thr = params.threshold
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    y = b.add("y", kind=Kind.OUTPUT, bias=thr)
    x1 = b.inhibitor("x_1", bias=1)
    x2 = b.add("x_2", bias=1)
    b.connect(x, x1, 1)
    b.connect(x, x2, 1)

    # free-running divider: strobe every 4 rounds, phase end every 2**K
    a11 = b.add("a_{1,1}", bias=1)
    a12 = b.add("a_{1,2}", bias=1)
    b.connect(x2, a11, LOAD)
    b.connect(a12, a11, 1)
    b.connect(a11, a12, 1)
    for i in range(2, K + 1):
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
    strobe, end = b.id("a_{2,2}"), b.id(f"a_{{{K},2}}")

    # countdown register; gates read one-round-old views so that the
    # positive and negative terms come from the same snapshot
    W = bits + 1
    regs = [b.add(f"r_{i}", bias=1) for i in range(1, bits + 1)]
    held = [b.add(f"q_{i}", bias=1) for i in range(1, bits + 1)]
    pos = [b.add(f"rv_{i}", bias=1) for i in range(1, bits + 1)]
    neg = [b.inhibitor(f"rn_{i}", bias=1) for i in range(1, bits + 1)]
    for r, rp, rn in zip(regs, pos, neg):
        b.connect(r, rp, 1)
        b.connect(r, rn, 1)
    for i, r in enumerate(regs, start=1):
        # toggle: strobe, no lower bit set, some bit >= i set
        ti = b.add(f"toggle_{i}", bias=W + 1)
        b.connect(strobe, ti, W)
        for j in range(1, bits + 1):
            if j >= i:
                b.connect(pos[j - 1], ti, 1)
            else:
                b.connect(neg[j - 1], ti, -W)
        # borrow: strobe, no lower bit set, bit i set
        ci = b.inhibitor(f"borrow_{i}", bias=2)
        b.connect(strobe, ci, 1)
        b.connect(pos[i - 1], ci, 1)
        for j in range(1, i):
            b.connect(neg[j - 1], ci, -2)
        b.connect(r, r, 1)
        b.connect(ti, r, 1)
        b.connect(ci, r, -2)
    z1 = b.add("z_1", bias=W + 1)
    b.connect(strobe, z1, W)
    for rp in pos:
        b.connect(rp, z1, 1)
    a_bias = params.unit_bias(t)
    star = b.add("a*", bias=a_bias, gate=Gate.STOCH)
    b.connect(z1, star, math.log(t_prime - 1) + a_bias)

    ones = add_counter(b, star, bits, prefix="cnt.")
    counter = [u for u in range(len(b.neurons)) if b.neurons[u].label.startswith("cnt.")]

    # phase hand-off
    k = b.inhibitor("k", bias=1)
    b.connect(end, k, 1)
    d1 = b.add("d", bias=1)
    b.connect(end, d1, 1)
    for i, (bit, r, q) in enumerate(zip(ones, regs, held), start=1):
        ci = b.add(f"c_{i}", bias=2)
        b.connect(bit, ci, 1)
        b.connect(end, ci, 1)
        ci2 = b.add(f"c'_{i}", bias=1)
        b.connect(ci, ci2, 1)
        b.connect(ci2, r, 1)
        b.connect(ci2, q, 1)
        b.connect(q, q, 1)
        if (ell >> (i - 1)) & 1:
            b.connect(x2, r, LOAD)
            b.connect(x2, q, LOAD)
    for u in counter + regs + held:
        b.connect(k, u, -CLEAR)

    gap = b.add("gap", bias=thr + 2**bits)
    b.connect(d1, gap, 2**bits)
    for i, q in enumerate(held, start=1):
        b.connect(q, gap, 2 ** (i - 1))
        b.connect(q, y, 2 ** (i - 1))
    b.connect(gap, y, thr)
    b.connect(x, y, thr)
    b.connect(x2, y, thr)

    for u in range(len(b.neurons)):
        if b.neurons[u].kind == Kind.AUX and u not in (x1, x2):
            b.connect(x1, u, -CLEAR)
    return report_from_builder(
        b, t=t, delta=params.delta, ell=ell, ell_prime=params.ell_prime, t_prime=t_prime,
        count_bits=bits, phase_layers=K, unit_bias=a_bias, threshold=thr,
    )


def phase_ends(trace, report: BuildReport, x_round: int = 0) -> list[int]:
    """Rounds of the phase-end pulses after an ``x`` spike at ``x_round``."""
    end = report[f"a_{{{report.params['phase_layers']},2}}"]
    return [r for r in trace.rounds(end) if r > x_round]


def phase_counts(trace, report: BuildReport, phases: int, x_round: int = 0) -> tuple[np.ndarray, bool]:
    """Fire counts of ``a*`` per phase, and whether it ever fired outside an attempt slot."""
    star, z1 = report["a*"], report["z_1"]
    fired = trace.states[:, star].astype(bool)
    slots = np.zeros_like(fired)
    slots[1:] = trace.states[:-1, z1].astype(bool)
    spurious = bool((fired & ~slots)[x_round + 1 :].any())
    bounds = [x_round] + phase_ends(trace, report, x_round)
    if len(bounds) <= phases:
        raise ValueError(f"trace covers only {len(bounds) - 1} phases")
    counts = np.array([int(fired[bounds[i] + 1 : bounds[i + 1] + 1].sum()) for i in range(phases)])
    return counts, spurious


def survivor_counts(trace, report: BuildReport, rounds: int, x_round: int = 0) -> tuple[np.ndarray, bool]:
    """RandBasic population size per round, and whether any neuron re-fired after dropping out."""
    ids = [report[f"a_{i}"] for i in range(1, report.params["ell"] + 1)]
    s = trace.states[:, ids].astype(bool)
    counts = s[x_round + 1 : x_round + rounds + 1].sum(axis=1)
    prev = np.zeros(len(ids), dtype=bool)
    spurious = False
    for r in range(x_round + 1, trace.horizon + 1):
        if (s[r] & ~prev).any() and r != x_round + 1:
            spurious = True
            break
        prev = s[r]
    return counts, spurious
