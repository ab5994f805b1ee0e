"""Network data model, structural validation and the canonical text format."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class Kind(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    AUX = "auxiliary"


class Gate(str, enum.Enum):
    DET = "deterministic"
    STOCH = "stochastic"


class Sign(str, enum.Enum):
    EXC = "excitatory"
    INH = "inhibitory"


class Mode(str, enum.Enum):
    SYNC = "synchronous"
    ASYNC = "asynchronous"


@dataclass(frozen=True)
class Neuron:
    """One neuron. Its id is its position in ``Network.neurons``.

    Stochastic neurons draw coins keyed by ``coin_key`` (their own id when
    unset). By default the coin index is the round number; when
    ``coin_clock`` names another neuron, the index is instead
    ``1 + (spikes of coin_clock in rounds <= round - coin_lag)``.
    """

    label: str
    kind: Kind = Kind.AUX
    gate: Gate = Gate.DET
    sign: Sign = Sign.EXC
    bias: float = 0.0
    coin_key: int | None = None
    coin_clock: int | None = None
    coin_lag: int = 0


@dataclass(frozen=True)
class Synapse:
    source: int
    target: int
    weight: float
    latency: int = 1


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


class InvalidNetwork(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations[:5]))


@dataclass(frozen=True)
class Network:
    neurons: tuple[Neuron, ...]
    synapses: tuple[Synapse, ...]
    mode: Mode = Mode.SYNC

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        object.__setattr__(self, "synapses", tuple(self.synapses))
        object.__setattr__(self, "mode", Mode(self.mode))

    def __len__(self) -> int:
        return len(self.neurons)

    @cached_property
    def ids(self) -> dict[str, int]:
        return {nr.label: i for i, nr in enumerate(self.neurons)}

    def id(self, ref: int | str) -> int:
        if isinstance(ref, str):
            return self.ids[ref]
        return int(ref)

    def label(self, nid: int) -> str:
        return self.neurons[nid].label

    def ids_of(self, kind: Kind) -> list[int]:
        return [i for i, nr in enumerate(self.neurons) if nr.kind == kind]

    @property
    def inputs(self) -> list[int]:
        return self.ids_of(Kind.INPUT)

    @property
    def outputs(self) -> list[int]:
        return self.ids_of(Kind.OUTPUT)

    @property
    def auxiliaries(self) -> list[int]:
        return self.ids_of(Kind.AUX)

    @property
    def stochastic(self) -> list[int]:
        return [i for i, nr in enumerate(self.neurons) if nr.gate == Gate.STOCH]

    @cached_property
    def max_latency(self) -> int:
        return max((s.latency for s in self.synapses), default=1)

    @cached_property
    def arrays(self) -> "CompiledNetwork":
        return CompiledNetwork.from_network(self)

    def incoming(self, nid: int) -> list[Synapse]:
        return [s for s in self.synapses if s.target == nid]

    def outgoing(self, nid: int) -> list[Synapse]:
        return [s for s in self.synapses if s.source == nid]

    def with_latencies(self, latencies: Iterable[int], mode: Mode = Mode.ASYNC) -> "Network":
        lats = list(latencies)
        if len(lats) != len(self.synapses):
            raise ValueError("one latency per synapse required")
        syn = tuple(
            Synapse(s.source, s.target, s.weight, int(lat)) for s, lat in zip(self.synapses, lats)
        )
        return Network(self.neurons, syn, mode)

    def with_mode(self, mode: Mode) -> "Network":
        return Network(self.neurons, self.synapses, mode)


@dataclass(frozen=True)
class CompiledNetwork:
    """Incoming edges grouped by target (CSR), in synapse order within a target."""

    n: int
    indptr: np.ndarray
    src: np.ndarray
    tgt: np.ndarray
    weight: np.ndarray
    lat: np.ndarray
    bias: np.ndarray
    kind: np.ndarray  # 0 deterministic, 1 stochastic, 2 input
    coin_key: np.ndarray
    coin_clock: np.ndarray
    coin_lag: np.ndarray
    max_lat: int

    @classmethod
    def from_network(cls, net: Network) -> "CompiledNetwork":
        n = len(net.neurons)
        m = len(net.synapses)
        tgt = np.fromiter((s.target for s in net.synapses), dtype=np.int64, count=m)
        order = np.argsort(tgt, kind="stable")
        src = np.fromiter((s.source for s in net.synapses), dtype=np.int64, count=m)[order]
        w = np.fromiter((s.weight for s in net.synapses), dtype=np.float64, count=m)[order]
        lat = np.fromiter((s.latency for s in net.synapses), dtype=np.int64, count=m)[order]
        tgt = tgt[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, tgt + 1, 1)
        indptr = np.cumsum(indptr)
        kind = np.array(
            [2 if nr.kind == Kind.INPUT else (1 if nr.gate == Gate.STOCH else 0) for nr in net.neurons],
            dtype=np.int8,
        )
        return cls(
            n=n,
            indptr=indptr,
            src=src,
            tgt=tgt,
            weight=w,
            lat=lat,
            bias=np.array([nr.bias for nr in net.neurons], dtype=np.float64),
            kind=kind,
            coin_key=np.array(
                [i if nr.coin_key is None else nr.coin_key for i, nr in enumerate(net.neurons)],
                dtype=np.int64,
            ),
            coin_clock=np.array(
                [-1 if nr.coin_clock is None else nr.coin_clock for nr in net.neurons], dtype=np.int64
            ),
            coin_lag=np.array([nr.coin_lag for nr in net.neurons], dtype=np.int64),
            max_lat=int(lat.max()) if m else 1,
        )


def validate(net: Network) -> list[Violation]:
    """Every structural problem in ``net``; an empty list means valid."""
    out: list[Violation] = []
    n = len(net.neurons)
    seen: set[str] = set()
    for i, nr in enumerate(net.neurons):
        if nr.label in seen:
            out.append(Violation("duplicate-label", f"label {nr.label!r} used twice"))
        seen.add(nr.label)
        if any(c in nr.label for c in "\t\n"):
            out.append(Violation("bad-label", f"neuron {i} label contains tab or newline"))
        if not math.isfinite(nr.bias):
            out.append(Violation("bias", f"neuron {nr.label} has non-finite bias"))
        if nr.kind == Kind.INPUT and nr.gate == Gate.STOCH:
            out.append(Violation("stochastic-input", f"input {nr.label} marked stochastic"))
        if nr.coin_clock is not None and not 0 <= nr.coin_clock < n:
            out.append(Violation("dangling", f"neuron {nr.label} has unknown coin clock {nr.coin_clock}"))
        if nr.coin_clock is not None and nr.coin_lag < 1:
            out.append(Violation("coin-lag", f"neuron {nr.label} reads its coin clock with lag {nr.coin_lag} < 1"))
    for s in net.synapses:
        if not (0 <= s.source < n and 0 <= s.target < n):
            out.append(Violation("dangling", f"synapse {s.source}->{s.target} references unknown neuron"))
            continue
        src, dst = net.neurons[s.source], net.neurons[s.target]
        tag = f"{src.label}->{dst.label}"
        if not math.isfinite(s.weight):
            out.append(Violation("weight", f"synapse {tag} has non-finite weight"))
        if src.sign == Sign.INH and s.weight > 0:
            out.append(Violation("sign", f"inhibitory {src.label} has positive edge {tag} ({s.weight})"))
        if src.sign == Sign.EXC and s.weight < 0:
            out.append(Violation("sign", f"excitatory {src.label} has negative edge {tag} ({s.weight})"))
        if dst.kind == Kind.INPUT:
            out.append(Violation("input-in-degree", f"synapse {tag} targets input neuron"))
        if s.latency < 1:
            out.append(Violation("latency", f"synapse {tag} has latency {s.latency} < 1"))
        elif net.mode == Mode.SYNC and s.latency != 1:
            out.append(Violation("latency", f"synapse {tag} has latency {s.latency} in synchronous mode"))
        elif net.mode == Mode.ASYNC and s.source == s.target and s.latency != 1:
            out.append(Violation("self-loop-latency", f"self-loop on {src.label} has latency {s.latency}"))
    return out


def ensure_valid(net: Network) -> Network:
    problems = validate(net)
    if problems:
        raise InvalidNetwork(problems)
    return net


@dataclass
class NetworkBuilder:
    """Mutable helper used by the circuit compilers."""

    neurons: list[Neuron] = field(default_factory=list)
    synapses: list[Synapse] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)

    def add(
        self,
        label: str,
        *,
        bias: float = 0.0,
        sign: Sign = Sign.EXC,
        kind: Kind = Kind.AUX,
        gate: Gate = Gate.DET,
        **coin,
    ) -> int:
        if label in self.index:
            raise ValueError(f"duplicate neuron label {label!r}")
        self.index[label] = len(self.neurons)
        self.neurons.append(Neuron(label, kind, gate, sign, float(bias), **coin))
        return self.index[label]

    def inhibitor(self, label: str, **kw) -> int:
        return self.add(label, sign=Sign.INH, **kw)

    def id(self, ref: int | str) -> int:
        return self.index[ref] if isinstance(ref, str) else ref

    def connect(self, source: int | str, target: int | str, weight: float, latency: int = 1) -> None:
        self.synapses.append(Synapse(self.id(source), self.id(target), float(weight), latency))

    def chain(self, source: int | str, prefix: str, length: int, last_sign: Sign = Sign.EXC) -> int:
        """Append ``length`` relay neurons after ``source``; return the last id."""
        prev = self.id(source)
        for j in range(1, length + 1):
            sign = last_sign if j == length else Sign.EXC
            cur = self.add(f"{prefix}_{j}", bias=1, sign=sign)
            self.connect(prev, cur, 1)
            prev = cur
        return prev

    def build(self, mode: Mode = Mode.SYNC) -> Network:
        return Network(tuple(self.neurons), tuple(self.synapses), mode)


@dataclass(frozen=True)
class BuildReport:
    network: Network
    roles: Mapping[str, int]
    params: Mapping[str, object] = field(default_factory=dict)

    def __getitem__(self, role: str) -> int:
        return self.roles[role]

    def roles_json(self) -> str:
        return json.dumps({"roles": dict(self.roles), "params": _jsonable(self.params)}, indent=1, sort_keys=True)


def report_from_builder(b: NetworkBuilder, mode: Mode = Mode.SYNC, **params) -> BuildReport:
    net = ensure_valid(b.build(mode))
    return BuildReport(net, dict(b.index), params)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


# -- canonical text format ---------------------------------------------------

_HEADER = "snn-network 1"


def _real(x: float) -> str:
    return format(float(x), ".17g")


def dumps(net: Network) -> str:
    lines = [_HEADER, f"mode {net.mode.value}", f"neurons {len(net.neurons)}"]
    for i, nr in enumerate(net.neurons):
        rec = [str(i), nr.label, nr.kind.value, nr.gate.value, nr.sign.value, _real(nr.bias)]
        if nr.coin_key is not None or nr.coin_clock is not None:
            key = "-" if nr.coin_key is None else nr.coin_key
            clock = "-" if nr.coin_clock is None else nr.coin_clock
            rec.append(f"coin={key}:{clock}:{nr.coin_lag}")
        lines.append("\t".join(rec))
    lines.append(f"synapses {len(net.synapses)}")
    for s in net.synapses:
        lines.append(f"{s.source}\t{s.target}\t{_real(s.weight)}\t{s.latency}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Network:
    rows = text.splitlines()
    if not rows or rows[0] != _HEADER:
        raise ValueError("not an snn-network file")
    mode = Mode(rows[1].split(" ", 1)[1])
    count = int(rows[2].split(" ", 1)[1])
    neurons = []
    for k in range(count):
        rec = rows[3 + k].split("\t")
        if int(rec[0]) != k:
            raise ValueError(f"neuron records out of order at line {4 + k}")
        coin = {}
        if len(rec) > 6:
            key, clock, lag = (None if v == "-" else int(v) for v in rec[6].removeprefix("coin=").split(":"))
            coin = {"coin_key": key, "coin_clock": clock, "coin_lag": lag}
        neurons.append(Neuron(rec[1], Kind(rec[2]), Gate(rec[3]), Sign(rec[4]), float(rec[5]), **coin))
    pos = 3 + count
    m = int(rows[pos].split(" ", 1)[1])
    synapses = []
    for row in rows[pos + 1 : pos + 1 + m]:
        a, b, w, lat = row.split("\t")
        synapses.append(Synapse(int(a), int(b), float(w), int(lat)))
    return Network(tuple(neurons), tuple(synapses), mode)


def save(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(net))


def load(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
