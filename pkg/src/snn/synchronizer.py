"""Run a synchronous network under arbitrary bounded edge latencies.

Each synchronous round becomes a phase that ends when the pulse generator's
output ``g`` fires. Every non-input neuron ``v`` is expanded into

* ``v.in``: same incoming weights and bias as ``v``, reading the out-copies
  of its predecessors (inputs are read directly, they are held constant);
* ``v``: AND of ``v.in`` and ``g``, so it fires exactly once per phase, at
  ``g``'s arrival, iff ``v`` fires in that synchronous round;
* ``v.delay``: latch set by ``v``, cleared by reset chain ``R2``;
* ``v.out``: latch set when ``D`` fires while ``v.delay`` is on, cleared by
  reset chain ``R1``. It presents ``v``'s state to successors for the whole
  next phase. Inhibitory neurons get an extra inhibitory relay ``v.inh``
  because a latch needs a positive self-loop.

Per phase the global modules act in a fixed order: ``g`` fires, ``R1``
clears the old out-copies, the delay timer ``D`` copies the new state into
them, ``R2`` clears the delay latches, and the next ``g`` pulse comes only
after every in-copy has settled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .async_timers import AsyncTimerPlan, add_async_timer, plan_async_timer
from .engine import CoinPlan, ExecutionTrace, InputSchedule, run
from .model import BuildReport, Gate, Kind, Mode, Network, NetworkBuilder, Sign, ensure_valid, report_from_builder

OUT_SELF = 2.0


@dataclass(frozen=True)
class SynchronizerConfig:
    L: int
    c_pg: int | None = None
    c_delay: int = 2
    reset_chain_len: int | None = None
    inhibit_weight: float = -5.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.reset_chain_len is None:
            object.__setattr__(self, "reset_chain_len", self.L)
        if self.reset_chain_len < self.L:
            raise ValueError("reset chains need at least L neurons")
        # v.out with self-loop, D and v.delay all on must still be silenced
        if OUT_SELF + 2 + self.inhibit_weight >= 2:
            raise ValueError("inhibit_weight must dominate the out-copy's positive inputs")
        if self.L * (self.reset_chain_len + 1) > self.delay_plan.base + 1:
            raise ValueError("delay module fires before the first reset is guaranteed to land")
        if self.c_pg is None:
            c = 1
            while c * self.L**3 <= self.phase_floor:
                c += 1
            object.__setattr__(self, "c_pg", c)
        if self.c_pg * self.L**3 <= self.phase_floor:
            raise ValueError(f"c_pg={self.c_pg} too small: need c_pg*L^3 > {self.phase_floor}")

    @property
    def delay_t(self) -> int:
        return max(self.c_delay * self.L**2, 4 * self.L)

    @property
    def delay_plan(self) -> AsyncTimerPlan:
        return plan_async_timer(self.delay_t, self.L)

    @property
    def phase_floor(self) -> int:
        """Rounds after a pulse by which every latch has settled for the next one."""
        return self.L * self.delay_plan.base + self.L * self.reset_chain_len + 4 * self.L

    @property
    def pg_t(self) -> int:
        return self.c_pg * self.L**3

    @property
    def pg_plan(self) -> AsyncTimerPlan:
        return plan_async_timer(self.pg_t, self.L, periodic=True)


def synchronize(net_sync: Network, config: SynchronizerConfig | int) -> BuildReport:
    if isinstance(config, int):
        config = SynchronizerConfig(config)
    ensure_valid(net_sync)
    if net_sync.mode != Mode.SYNC:
        raise ValueError("synchronize expects a synchronous network")
    L = config.L
    b = NetworkBuilder()
    # original neurons keep their ids
    for nr in net_sync.neurons:
        if nr.kind == Kind.INPUT:
            b.add(nr.label, kind=Kind.INPUT, sign=nr.sign)
        else:
            b.add(nr.label, kind=nr.kind, bias=2)
    start = b.add("pg_start", kind=Kind.INPUT)
    pg = add_async_timer(b, start, config.pg_plan, prefix="PG.")
    g = b.add("g", bias=1)
    b.connect(pg["last"], g, 1)
    r1 = b.chain(g, "R1", config.reset_chain_len, Sign.INH)
    d = add_async_timer(b, g, config.delay_plan, prefix="D.")
    dy = b.add("D.y", bias=1)
    b.connect(d["last"], dy, 1)
    r2 = b.chain(dy, "R2", config.reset_chain_len, Sign.INH)

    present: dict[int, int] = {}
    for v, nr in enumerate(net_sync.neurons):
        if nr.kind == Kind.INPUT:
            present[v] = v
            continue
        delay = b.add(f"{nr.label}.delay", bias=1)
        out = b.add(f"{nr.label}.out", bias=2)
        b.connect(g, v, 1)
        b.connect(v, delay, 1)
        b.connect(delay, delay, 1)
        b.connect(r2, delay, -3)
        b.connect(delay, out, 1)
        b.connect(out, out, OUT_SELF)
        b.connect(dy, out, 1)
        b.connect(r1, out, config.inhibit_weight)
        if nr.sign == Sign.INH:
            relay = b.inhibitor(f"{nr.label}.inh", bias=1)
            b.connect(out, relay, 1)
            out = relay
        present[v] = out
    for v, nr in enumerate(net_sync.neurons):
        if nr.kind == Kind.INPUT:
            continue
        coin = {}
        if nr.gate == Gate.STOCH:
            coin = {"coin_key": v if nr.coin_key is None else nr.coin_key, "coin_clock": g, "coin_lag": L}
        vin = b.add(f"{nr.label}.in", bias=nr.bias, gate=nr.gate, **coin)
        b.connect(vin, v, 1)
    for s in net_sync.synapses:
        b.connect(present[s.source], b.id(f"{net_sync.neurons[s.target].label}.in"), s.weight)
    return report_from_builder(
        b, Mode.ASYNC, L=L, c_pg=config.c_pg, pg_t=config.pg_t, pg_window=config.pg_plan.window,
        delay_t=config.delay_t, delay_window=config.delay_plan.window, reset_chain_len=config.reset_chain_len,
        shared=[v for v, nr in enumerate(net_sync.neurons) if nr.kind != Kind.INPUT],
    )


def sync_inputs_schedule(report: BuildReport, horizon: int, held=()) -> InputSchedule:
    """Schedule for a synchronized network: held inputs plus the one-time pulse generator start."""
    net = report.network
    return InputSchedule.build(horizon, {report["pg_start"]: [0]}, [net.id(h) for h in held])


def phase_horizon(report: BuildReport, phases: int) -> int:
    """Round bound that covers ``phases`` pulses under any latencies up to L."""
    L = report.params["L"]
    lo, hi = report.params["pg_window"]
    return (phases + 1) * hi + 4 * L * (lo.bit_length() + 4)


@dataclass(frozen=True)
class PhaseSchedule:
    pg_rounds: tuple[int, ...]
    arrival: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def phases(self) -> int:
        return len(self.pg_rounds)

    def t(self, v: int, p: int) -> int:
        """Round in which ``v`` receives the p-th pulse (p >= 1); -1 for p = 0."""
        return -1 if p == 0 else self.arrival[v][p - 1]


def extract_phases(trace: ExecutionTrace, report: BuildReport, phases: int | None = None) -> PhaseSchedule:
    net = trace.network
    g = report["g"]
    pulses = trace.rounds(g)
    if not pulses:
        raise ValueError("pulse generator never fired within the horizon")
    if phases is not None:
        if len(pulses) < phases:
            raise ValueError(f"only {len(pulses)} pulses within the horizon, need {phases}")
        pulses = pulses[:phases]
    lat = {s.target: s.latency for s in net.outgoing(g)}
    arrival = {v: tuple(p + lat[v] for p in pulses) for v in report.params["shared"]}
    return PhaseSchedule(tuple(pulses), arrival)


@dataclass(frozen=True)
class Divergence:
    neuron: int
    phase: int
    sync_fired: bool
    async_fired: bool


def check_similar_execution(
    trace_sync: ExecutionTrace,
    trace_async: ExecutionTrace,
    schedule: PhaseSchedule,
    shared_neurons=None,
) -> Divergence | None:
    """First (neuron, phase) where firing in round p and during phase p disagree; None if none."""
    shared = schedule.arrival.keys() if shared_neurons is None else shared_neurons
    shared = sorted(shared)
    phases = min(schedule.phases, trace_sync.horizon)
    for p in range(1, phases + 1):
        for v in shared:
            lo, hi = schedule.t(v, p - 1), schedule.t(v, p)
            a = bool(trace_async.states[lo + 1 : hi + 1, v].any())
            s = bool(trace_sync.states[p, v])
            if a != s:
                return Divergence(v, p, s, a)
    return None


def coin_plan_for_sync_replay(net_sync: Network, seed: int) -> CoinPlan:
    """Coins shared by the synchronous run and the synchronized copy.

    The synchronous run draws coin ``(key(v), p)`` in round ``p``; each
    stochastic in-copy is keyed by its original neuron and indexed by the
    number of pulses it has seen, so it draws the same value in phase ``p``.
    """
    return CoinPlan(seed)


def simulate_pair(
    net_sync: Network, report: BuildReport, phases: int, held=(), seed: int = 0, net_async: Network | None = None
) -> tuple[ExecutionTrace, ExecutionTrace, PhaseSchedule]:
    """Run the synchronous net for ``phases`` rounds and its synchronized copy for as many phases."""
    plan = coin_plan_for_sync_replay(net_sync, seed)
    ts = run(net_sync, InputSchedule.build(phases, {}, held), seed=plan.seed)
    net_async = report.network if net_async is None else net_async
    horizon = phase_horizon(report, phases)
    ta = run(net_async, sync_inputs_schedule(report, horizon, held), seed=plan.seed)
    return ts, ta, extract_phases(ta, report, phases)


# -- NOT gate ----------------------------------------------------------------


def not_gate() -> Network:
    """y = NOT x: inhibitory input, weight -1, bias 0."""
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT, sign=Sign.INH)
    y = b.add("y", kind=Kind.OUTPUT, bias=0)
    b.connect(x, y, -1)
    return b.build()


@dataclass(frozen=True)
class NotGateOutcome:
    L: int
    prefix_identical: bool
    naive_correct: bool
    synchronized_correct: bool


def not_gate_experiment(L: int = 8, phases: int = 4, seed: int = 0) -> NotGateOutcome:
    """Naive vs synchronized NOT gate when the input edge has latency L.

    ``yes``: x fires in rounds 0..L+1; ``no``: x stays silent. The naive
    gate cannot tell the runs apart for the first L rounds and fires in
    ``yes``.
    """
    net = not_gate()
    x, y = net.id("x"), net.id("y")
    naive = net.with_latencies([L] * len(net.synapses), Mode.ASYNC)
    horizon = 2 * L + 2
    yes = run(naive, InputSchedule.build(horizon, {x: range(L + 2)}))
    no = run(naive, InputSchedule.build(horizon, {}))
    others = [u for u in range(len(net)) if u != x]
    # x's round-0 spike lands in round L, so rounds 0..L-1 cannot differ
    prefix = bool(np.array_equal(yes.states[:L, others], no.states[:L, others]))
    naive_ok = not yes.fired(y)[: L + 2].any() and no.fired(y).any()

    rep = synchronize(net, SynchronizerConfig(L))
    anet = rep.network
    rng = np.random.default_rng(seed)
    lats = rng.integers(1, L + 1, size=len(anet.synapses))
    for j, s in enumerate(anet.synapses):
        if s.source == s.target:
            lats[j] = 1
        elif s.source == x:
            lats[j] = L
    anet = anet.with_latencies(lats.tolist(), Mode.ASYNC)
    ok = True
    for held in ((x,), ()):
        ts, ta, sched = simulate_pair(net, rep, phases, held, seed, anet)
        if check_similar_execution(ts, ta, sched) is not None:
            ok = False
        fired = [bool(ta.states[sched.t(y, p - 1) + 1 : sched.t(y, p) + 1, y].any()) for p in range(1, phases + 1)]
        ok = ok and fired == [not held] * phases
    return NotGateOutcome(L, prefix, bool(naive_ok), ok)
