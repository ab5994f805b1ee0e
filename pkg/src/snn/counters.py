"""Exact binary spike counter built from the timer's divide-by-two layers.

Layer 1 toggles on every input spike instead of free-running, so bit ``i``
(neuron ``a_{i,1}``) holds the i-th binary digit of the spike count once the
carries have rippled through. Spikes must be separated by at least one
silent round.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import ExecutionTrace
from .model import BuildReport, Kind, NetworkBuilder, report_from_builder


@dataclass(frozen=True)
class CounterParams:
    t: int

    def __post_init__(self):
        if self.t < 2:
            raise ValueError("counter window must be >= 2")

    @property
    def bits(self) -> int:
        return self.t.bit_length()


def add_counter(b: NetworkBuilder, source: int, bits: int, prefix: str = "") -> list[int]:
    """Wire counting layers fed by ``source``; returns the bit neurons a_{i,1}."""

    def name(s: str) -> str:
        return f"{prefix}{s}"

    a11 = b.add(name("a_{1,1}"), bias=1)
    a12 = b.add(name("a_{1,2}"), bias=2)
    d1 = b.inhibitor(name("d_1"), bias=2)
    b.connect(source, a11, 4)
    b.connect(a11, a11, 1)
    b.connect(d1, a11, -1)
    b.connect(source, a12, 1)
    b.connect(a11, a12, 1)
    b.connect(d1, a12, -2)
    b.connect(source, d1, 1)
    b.connect(a11, d1, 1)
    b.connect(d1, d1, -2)
    ones = [a11]
    for i in range(2, bits + 1):
        prev = b.id(name(f"a_{{{i - 1},2}}"))
        ai1 = b.add(name(f"a_{{{i},1}}"), bias=1)
        ai2 = b.add(name(f"a_{{{i},2}}"), bias=2)
        di = b.inhibitor(name(f"d_{i}"), bias=2)
        b.connect(prev, ai1, 1)
        b.connect(ai1, ai1, 1)
        b.connect(di, ai1, -1)
        for tgt in (ai2, di):
            b.connect(prev, tgt, 1)
            b.connect(ai1, tgt, 1)
        ones.append(ai1)
    return ones


def build_det_counter(params: CounterParams | int) -> BuildReport:
    if isinstance(params, int):
        params = CounterParams(params)
    b = NetworkBuilder()
    x = b.add("x", kind=Kind.INPUT)
    ones = add_counter(b, x, params.bits)
    for i, ai1 in enumerate(ones, start=1):
        yi = b.add(f"y_{i}", kind=Kind.OUTPUT, bias=1)
        b.connect(ai1, yi, 1)
    return report_from_builder(b, t=params.t, bits=params.bits)


def bit_ids(report: BuildReport, prefix: str = "") -> list[int]:
    bits = report.params["bits"]
    return [report[f"{prefix}a_{{{i},1}}"] for i in range(1, bits + 1)]


def decode_counter(trace: ExecutionTrace, report: BuildReport, rnd: int) -> int:
    """Positional value of the bit neurons a_{i,1} at round ``rnd``."""
    row = trace.states[rnd, bit_ids(report)]
    return int(sum(int(v) << i for i, v in enumerate(row)))


def decode_series(trace: ExecutionTrace, report: BuildReport) -> np.ndarray:
    cols = trace.states[:, bit_ids(report)].astype(np.int64)
    return cols @ (1 << np.arange(cols.shape[1], dtype=np.int64))


def update_delay(count: int) -> int:
    """Rounds after the last spike by which the bits hold ``count``."""
    return count.bit_length()  # floor(log2 n) + 1
