"""Latency-tolerant timer and latency assignment utilities.

Every non-self-loop edge may have any fixed latency in ``1..L``. A single
pulse circulates in the first-layer ring (``a_{1,1}`` -> relay chain ->
``a_{1,2}`` -> ``a_{1,1}``), so ``a_{1,2}`` pulses with a fixed period of
at least ``m1 + 1`` rounds. Each further layer is a latency-tolerant
divide-by-two:

* the pulse reaches ``a_{i,2}`` directly and reaches the latch ``a_{i,1}``
  through a chain of ``L`` edges, so ``a_{i,2}`` sees the latch state from
  before the pulse;
* when ``a_{i,2}`` fires it sets a hold latch ``h_i`` whose inhibitor copy
  ``d_i`` keeps ``a_{i,1}`` cleared until the delayed copy of the same pulse
  has arrived and been absorbed;
* ``h_i`` is released by ``e_i``, fed by a chain of ``L + 1`` edges that
  branches off just before the latch, so the release always lands after
  the delayed pulse.

The one-shot timer adds a stop latch ``q`` set by the last layer; its
inhibitor copy ``r`` holds the counting neurons down until the trigger
fires again (``x'`` clears ``q``). The periodic variant has no stop
machinery and serves as a pulse generator.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .model import BuildReport, Kind, Mode, Network, NetworkBuilder, report_from_builder


def min_ring_chain(L: int, layers: int) -> int:
    """Smallest first-layer chain length (edges) that keeps every layer race-free."""
    if layers <= 1:
        return 4 * L
    return max(4 * L, 2 * L * L + 2 * L - 1)


@dataclass(frozen=True)
class AsyncTimerPlan:
    t: int
    L: int
    layers: int
    ring_chain: int
    periodic: bool

    @property
    def base(self) -> int:
        """Minimum rounds from trigger to the first output spike (one-shot) or between spikes (periodic)."""
        span = (self.ring_chain + 1) * 2 ** (self.layers - 1)
        return span if self.periodic else span + self.layers

    @property
    def window(self) -> tuple[int, int]:
        return self.base, self.L * self.base


def plan_async_timer(t: int, L: int, periodic: bool = False) -> AsyncTimerPlan:
    if L < 1:
        raise ValueError("L must be >= 1")
    if t < 4 * L:
        raise ValueError(f"async timer needs t >= 4L (t={t}, L={L})")
    k = 1
    while True:
        nxt = k + 1
        span = (min_ring_chain(L, nxt) + 1) * 2 ** (nxt - 1) + (0 if periodic else nxt)
        if span > t:
            break
        k = nxt
    if k == 1:
        m1 = max(t - (1 if periodic else 2), min_ring_chain(L, 1))
    else:
        need = t if periodic else t - k
        m1 = max(min_ring_chain(L, k), -(-need // 2 ** (k - 1)) - 1)
    return AsyncTimerPlan(t, L, k, m1, periodic)


def add_async_timer(b: NetworkBuilder, trigger: int, plan: AsyncTimerPlan, prefix: str = "") -> dict[str, int]:
    """Wire the timer fed by ``trigger``; returns the ids of its output and stop neurons."""
    L = plan.L

    def name(s: str) -> str:
        return f"{prefix}{s}"

    a11 = b.add(name("a_{1,1}"), bias=1)
    b.connect(trigger, a11, 3)
    ring_end = b.chain(a11, name("ring"), plan.ring_chain - 1)
    a12 = b.add(name("a_{1,2}"), bias=1)
    b.connect(ring_end, a12, 1)
    b.connect(a12, a11, 1)
    stoppable = [a11, a12]
    prev = a12
    for i in range(2, plan.layers + 1):
        tail = b.chain(prev, name(f"s_{i}"), L - 1) if L > 1 else prev
        ai1 = b.add(name(f"a_{{{i},1}}"), bias=1)
        ai2 = b.add(name(f"a_{{{i},2}}"), bias=2)
        hi = b.add(name(f"h_{i}"), bias=1)
        di = b.inhibitor(name(f"d_{i}"), bias=1)
        b.connect(tail, ai1, 1)
        b.connect(ai1, ai1, 1)
        b.connect(di, ai1, -2)
        b.connect(prev, ai2, 1)
        b.connect(ai1, ai2, 1)
        b.connect(ai2, hi, 1)
        b.connect(hi, hi, 1)
        b.connect(ai2, di, 1)
        b.connect(hi, di, 1)
        clear_tail = b.chain(tail, name(f"u_{i}"), L)
        ei = b.inhibitor(name(f"e_{i}"), bias=1)
        b.connect(clear_tail, ei, 1)
        b.connect(ei, hi, -2)
        stoppable += [ai1, ai2, hi]
        prev = ai2
    out = {"last": prev}
    if not plan.periodic:
        q = b.add(name("q"), bias=1)
        r = b.inhibitor(name("r"), bias=1)
        clear = b.inhibitor(name("x'"), bias=1)
        b.connect(prev, q, 1)
        b.connect(q, q, 1)
        b.connect(clear, q, -2)
        b.connect(trigger, clear, 1)
        b.connect(q, r, 1)
        for u in stoppable:
            b.connect(r, u, -2)
        out.update(q=q, r=r)
    return out


def build_det_timer_async(t: int, L: int, periodic: bool = False) -> BuildReport:
    plan = plan_async_timer(t, L, periodic)
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    y = b.add("y", kind=Kind.OUTPUT, bias=1)
    parts = add_async_timer(b, x, plan)
    b.connect(parts["last"], y, 1)
    lo, hi = plan.window
    return report_from_builder(
        b, Mode.ASYNC, t=t, L=L, layers=plan.layers, ring_chain=plan.ring_chain,
        periodic=periodic, window=(lo, hi),
    )


# -- latency assignment -------------------------------------------------------


class LatencyKind(str, enum.Enum):
    UNIFORM = "uniform"
    RANDOM = "random"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class LatencyPolicy:
    kind: LatencyKind
    L: int = 1
    seed: int = 0

    @classmethod
    def uniform(cls, L: int) -> "LatencyPolicy":
        return cls(LatencyKind.UNIFORM, L)

    @classmethod
    def random_in(cls, L: int, seed: int) -> "LatencyPolicy":
        return cls(LatencyKind.RANDOM, L, seed)

    @classmethod
    def adversarial_sync_timer(cls) -> "LatencyPolicy":
        return cls(LatencyKind.ADVERSARIAL, 2)


def assign_latencies(net: Network, policy: LatencyPolicy) -> Network:
    """Copy of ``net`` in asynchronous mode with latencies drawn per ``policy``."""
    m = len(net.synapses)
    if policy.kind == LatencyKind.UNIFORM:
        lats = np.full(m, policy.L, dtype=np.int64)
    elif policy.kind == LatencyKind.RANDOM:
        rng = np.random.default_rng(policy.seed)
        lats = rng.integers(1, policy.L + 1, size=m)
    else:
        ids = net.ids
        layers = [int(m.group(1)) for lbl in ids if (m := re.fullmatch(r"a_\{(\d+),2\}", lbl))]
        if not layers:
            raise ValueError("adversarial policy needs a network with a_{i,2} roles")
        slow = {(ids[f"a_{{{i - 1},2}}"], ids[f"a_{{{i},2}}"]) for i in layers if i >= 2}
        lats = np.array([2 if (s.source, s.target) in slow else 1 for s in net.synapses], dtype=np.int64)
    for j, s in enumerate(net.synapses):
        if s.source == s.target:
            lats[j] = 1
    return net.with_latencies(lats.tolist(), Mode.ASYNC)
