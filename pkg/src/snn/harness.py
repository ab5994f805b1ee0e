"""Seeded Monte Carlo estimation and random test networks."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.stats import binomtest

from .approx_counter import decode_estimate, morris_distribution, settle_rounds
from .async_timers import LatencyPolicy, assign_latencies
from .engine import InputSchedule, run
from .model import BuildReport, Gate, Kind, Network, NetworkBuilder, Sign
from .synchronizer import SynchronizerConfig, check_similar_execution, simulate_pair, synchronize

CSV_HEADER = ("property", "trials", "successes", "estimate", "lo", "hi", "seed")


@dataclass(frozen=True)
class MonteCarloResult:
    property: str
    trials: int
    successes: int
    estimate: float
    lo: float
    hi: float
    seed: int

    def summary(self) -> str:
        return (
            f"{self.property}: {self.successes}/{self.trials} = {self.estimate:.4f} "
            f"(95% Wilson [{self.lo:.4f}, {self.hi:.4f}], seed {self.seed})"
        )

    def row(self) -> dict:
        return asdict(self)


def wilson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Independent 64-bit seeds, one per trial, derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def monte_carlo(name: str, trial: Callable[[int], bool], trials: int, seed: int) -> MonteCarloResult:
    """Run ``trial(trial_seed)`` for each derived seed and summarize the success rate."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = sum(bool(trial(s)) for s in trial_seeds(seed, trials))
    lo, hi = wilson(hits, trials)
    return MonteCarloResult(name, trials, hits, hits / trials, lo, hi, seed)


def write_csv(results: Iterable[MonteCarloResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        w.writeheader()
        for r in results:
            w.writerow(r.row())


# -- properties ---------------------------------------------------------------


def timer_fires_t(report: BuildReport) -> Callable[[int], bool]:
    """y fires in every round 1..t after a spike of x at round 0."""
    net, t = report.network, int(report.params["t"])
    sched = InputSchedule.build(t, {report["x"]: [0]})
    y = report["y"]
    return lambda s: bool(run(net, sched, seed=s, check=False).states[1 : t + 1, y].all())


def timer_stops_2t(report: BuildReport, horizon_factor: int = 4) -> Callable[[int], bool]:
    """y is silent in every round from 2t up to ``horizon_factor * t``."""
    net, t = report.network, int(report.params["t"])
    sched = InputSchedule.build(horizon_factor * t, {report["x"]: [0]})
    y = report["y"]
    return lambda s: not run(net, sched, seed=s, check=False).states[2 * t :, y].any()


def approx_count_window(report: BuildReport, n: int, gap: int = 2) -> Callable[[int], bool]:
    """After n input spikes ``gap`` rounds apart, the decoded estimate lies in [n/2-2, 4n-1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spikes = [1 + gap * i for i in range(n)]
    horizon = spikes[-1] + settle_rounds(report)
    sched = InputSchedule.build(horizon, {report["x"]: spikes})
    net = report.network

    def trial(s: int) -> bool:
        est = decode_estimate(run(net, sched, seed=s, check=False), report, horizon)
        return n / 2 - 2 <= est <= 4 * n - 1

    return trial


def morris_within_half(n: int, alpha: float, init_z: int) -> Callable[[int], bool]:
    """One oracle chain; success when alpha**z is within half of its exact mean."""
    dist = morris_distribution(n, alpha, init_z)
    values = alpha ** (init_z + np.arange(n + 1, dtype=float))
    mu = float(dist @ values)

    def trial(s: int) -> bool:
        rng = np.random.default_rng(s)
        z = init_z
        for u in rng.random(n):
            z += u < 1 / (1 + alpha**z)
        return abs(alpha**z - mu) <= mu / 2

    return trial


def sync_similar_exec(net_sync: Network, L: int, phases: int, held=()) -> Callable[[int], bool]:
    """Synchronized copy under random latencies in 1..L reproduces the synchronous run."""
    report = synchronize(net_sync, SynchronizerConfig(L))

    def trial(s: int) -> bool:
        anet = assign_latencies(report.network, LatencyPolicy.random_in(L, s))
        ts, ta, sched = simulate_pair(net_sync, report, phases, held, seed=s, net_async=anet)
        return check_similar_execution(ts, ta, sched) is None

    return trial


PROPERTIES = ("timer-fires-t", "timer-stops-2t", "approx-count-window", "morris-moments", "sync-similar-exec")


# -- random networks ------------------------------------------------------------


@dataclass(frozen=True)
class RandomNetSpec:
    n: int
    density: float = 0.3
    weight_range: tuple[float, float] = (0.5, 3.0)
    stochastic: int = 0
    seed: int = 0
    inputs: int = 0
    inhibitory_fraction: float = 0.3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.density <= 1:
            raise ValueError("density must be in [0, 1]")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError("weight range must satisfy 0 < lo <= hi")
        if not 0 <= self.stochastic <= self.n:
            raise ValueError("stochastic count must be in [0, n]")


def _halves(rng: np.random.Generator, lo: float, hi: float) -> float:
    """Uniform draw from the multiples of 1/2 in [lo, hi] (or lo itself)."""
    a, b = math.ceil(2 * lo), math.floor(2 * hi)
    return lo if b < a else float(rng.integers(a, b + 1)) / 2


def random_network(spec: RandomNetSpec) -> Network:
    """Sign-consistent random network; the last non-input neuron is the output."""
    rng = np.random.default_rng(spec.seed)
    b = NetworkBuilder()

    def sign() -> Sign:
        return Sign.INH if rng.random() < spec.inhibitory_fraction else Sign.EXC

    inputs = [b.add(f"x{i}", kind=Kind.INPUT, sign=sign()) for i in range(spec.inputs)]
    stoch = set(rng.choice(spec.n, spec.stochastic, replace=False).tolist()) if spec.stochastic else set()
    body = []
    for i in range(spec.n):
        body.append(b.add(
            f"v{i}",
            bias=float(rng.integers(-2, 5)) / 2,
            sign=sign(),
            gate=Gate.STOCH if i in stoch else Gate.DET,
            kind=Kind.OUTPUT if i == spec.n - 1 else Kind.AUX,
        ))
    lo, hi = spec.weight_range
    for u in inputs + body:
        neg = b.neurons[u].sign == Sign.INH
        for v in body:
            if rng.random() < spec.density:
                w = _halves(rng, lo, hi)
                b.connect(u, v, -w if neg else w)
    return b.build()
