"""Synchronous and latency-aware execution of networks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _fallback, kernel
from .model import Gate, Kind, Network, ensure_valid

MAX_HORIZON = 2**24


class InsufficientHistory(ValueError):
    pass


@dataclass(frozen=True)
class CoinPlan:
    """Stateless keyed coins: ``plan(key, index)`` is uniform on [0, 1)."""

    seed: int

    def __call__(self, key: int, index: int) -> float:
        return float(_fallback.coins(self.seed, key, index)[0])

    def many(self, keys, indices) -> np.ndarray:
        return _fallback.coins(self.seed, keys, indices)


def fire_probability(pot: float) -> float:
    """Sigmoid of the potential (temperature 1), overflow-safe."""
    if pot >= 0:
        p = 1.0 / (1.0 + math.exp(-pot))
    else:
        e = math.exp(pot)
        p = e / (1.0 + e)
    return 0.0 if p < 1e-300 else p


@dataclass(frozen=True)
class InputSchedule:
    """When each input neuron fires.

    ``spikes`` maps an input id to the rounds it fires in; ``held`` inputs
    fire in every round.
    """

    horizon: int
    spikes: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    held: frozenset[int] = frozenset()

    @classmethod
    def build(cls, horizon: int, spikes: Mapping[int, Iterable[int]] | None = None, held: Iterable[int] = ()):
        clean = {int(k): tuple(sorted(set(int(r) for r in v))) for k, v in (spikes or {}).items()}
        return cls(int(horizon), clean, frozenset(int(h) for h in held))

    def firing_at(self, rnd: int) -> set[int]:
        out = {k for k, rounds in self.spikes.items() if rnd in rounds}
        return out | set(self.held)

    def check(self, net: Network) -> None:
        inputs = set(net.inputs)
        bad = (set(self.spikes) | set(self.held)) - inputs
        if bad:
            raise ValueError(f"schedule names non-input neurons {sorted(bad)}")

    def matrix(self, net: Network, horizon: int) -> tuple[np.ndarray, np.ndarray]:
        ids = np.array(net.inputs, dtype=np.int64)
        fire = np.zeros((horizon + 1, ids.size), dtype=np.uint8)
        for j, nid in enumerate(ids):
            if nid in self.held:
                fire[:, j] = 1
            for r in self.spikes.get(int(nid), ()):
                if 0 <= r <= horizon:
                    fire[r, j] = 1
        return ids, fire


@dataclass(frozen=True)
class ExecutionTrace:
    network: Network
    states: np.ndarray  # (horizon + 1, n) uint8
    schedule: InputSchedule
    seed: int

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    def fired(self, ref: int | str) -> np.ndarray:
        return self.states[:, self.network.id(ref)].astype(bool)

    def rounds(self, ref: int | str) -> list[int]:
        return np.flatnonzero(self.states[:, self.network.id(ref)]).tolist()

    def first(self, ref: int | str, start: int = 0) -> int | None:
        hits = np.flatnonzero(self.states[start:, self.network.id(ref)])
        return int(hits[0]) + start if hits.size else None

    def bitlines(self) -> Iterable[str]:
        for r, row in enumerate(self.states):
            yield f"{r}\t{''.join('1' if b else '0' for b in row)}"

    def eventlines(self) -> Iterable[str]:
        labels = [nr.label for nr in self.network.neurons]
        for r, row in enumerate(self.states):
            yield f"{r}\t{','.join(labels[i] for i in np.flatnonzero(row))}"

    def export(self, path, events: bool = False) -> None:
        lines = self.eventlines() if events else self.bitlines()
        with open(path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")


def load_trace_bits(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            _, bits = line.rstrip("\n").split("\t")
            rows.append([c == "1" for c in bits])
    return np.array(rows, dtype=np.uint8)


def _window(history: Sequence[np.ndarray], rnd: int, span: int) -> None:
    if len(history) < min(span, rnd):
        raise InsufficientHistory(
            f"round {rnd} needs {min(span, rnd)} past states, got {len(history)}"
        )


def _past(history: Sequence[np.ndarray], lag: int) -> np.ndarray | None:
    return history[-lag] if lag <= len(history) else None


def potential(net: Network, history: Sequence[np.ndarray], neuron: int | str, rnd: int) -> float:
    """Weighted latency-shifted input minus bias; ``history[-1]`` is round ``rnd - 1``."""
    _window(history, rnd, net.max_latency)
    u = net.id(neuron)
    pot = 0.0
    for s in net.incoming(u):
        if s.latency > rnd:
            continue
        past = _past(history, s.latency)
        pot = pot + s.weight * float(past[s.source])
    return pot - net.neurons[u].bias


def step(
    net: Network,
    history: Sequence[np.ndarray],
    schedule: InputSchedule,
    rnd: int,
    coins: CoinPlan,
    coin_index: Mapping[int, int] | None = None,
) -> np.ndarray:
    """State at round ``rnd`` from the past states in ``history``.

    Stochastic neurons use coin index ``rnd`` unless ``coin_index`` overrides it.
    """
    _window(history, rnd, net.max_latency)
    state = np.zeros(len(net), dtype=np.uint8)
    fire_in = schedule.firing_at(rnd)
    for u, nr in enumerate(net.neurons):
        if nr.kind == Kind.INPUT:
            state[u] = u in fire_in
            continue
        pot = potential(net, history, u, rnd)
        if nr.gate == Gate.DET:
            state[u] = pot >= 0
        else:
            key = u if nr.coin_key is None else nr.coin_key
            idx = (coin_index or {}).get(u, rnd)
            state[u] = coins(key, idx) < fire_probability(pot)
    return state


def run(
    net: Network,
    schedule: InputSchedule,
    horizon: int | None = None,
    seed: int = 0,
    initial: np.ndarray | None = None,
    backend: str | None = None,
    check: bool = True,
) -> ExecutionTrace:
    """Simulate rounds 0..horizon starting from ``initial`` (all silent by default)."""
    horizon = schedule.horizon if horizon is None else int(horizon)
    if not 1 <= horizon <= MAX_HORIZON:
        raise ValueError(f"horizon must be in [1, {MAX_HORIZON}]")
    if check:
        ensure_valid(net)
        schedule.check(net)
    a = net.arrays
    init = np.zeros(a.n, dtype=np.uint8) if initial is None else np.ascontiguousarray(initial, dtype=np.uint8)
    ids, fire = schedule.matrix(net, horizon)
    states = kernel.get(backend)(
        a.indptr, a.src, a.tgt, a.weight, a.lat, a.bias, a.kind, a.coin_key, a.coin_clock, a.coin_lag,
        ids, fire, init, horizon, seed & (2**64 - 1),
    )
    return ExecutionTrace(net, np.asarray(states), schedule, seed)


def detect_state_cycle(
    trace: ExecutionTrace | np.ndarray, neurons: Iterable[int] | None = None, start: int = 0
) -> tuple[int, int] | None:
    """First pair of rounds (a, b), a < b, whose states agree on ``neurons``."""
    states = trace.states if isinstance(trace, ExecutionTrace) else np.asarray(trace)
    cols = slice(None) if neurons is None else np.array(sorted(neurons), dtype=np.int64)
    seen: dict[bytes, int] = {}
    for r in range(start, states.shape[0]):
        key = states[r, cols].tobytes()
        if key in seen:
            return seen[key], r
        seen[key] = r
    return None
