"""Compare the compiled round loop with the numpy fallback.

    python3 benchmarks/bench_kernel.py [--repeat 3]

Each case is run on every available backend; the traces must agree bit for bit.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from snn import kernel
from snn.approx_counter import ApproxCounterParams, build_approx_counter
from snn.async_timers import LatencyPolicy, assign_latencies
from snn.engine import InputSchedule, run
from snn.harness import RandomNetSpec, random_network
from snn.rand_timers import RandTimerParams, build_rand_basic
from snn.synchronizer import SynchronizerConfig, phase_horizon, sync_inputs_schedule, synchronize
from snn.timers import build_det_timer


def cases():
    rep = build_det_timer(1034)
    yield "det-timer t=1034", rep.network, InputSchedule.build(4000, {rep["x"]: [0]})

    rep = build_rand_basic(RandTimerParams(64, 0.05))
    yield "rand-basic t=64 (185 coins)", rep.network, InputSchedule.build(256, {rep["x"]: [0]})

    rep = build_approx_counter(ApproxCounterParams(10**4, 0.1))
    yield "approx-counter n=2000", rep.network, InputSchedule.build(4100, {rep["x"]: range(1, 4001, 2)})

    net = random_network(RandomNetSpec(15, inputs=2, stochastic=1, seed=7))
    rep = synchronize(net, SynchronizerConfig(3))
    anet = assign_latencies(rep.network, LatencyPolicy.random_in(3, 7))
    horizon = phase_horizon(rep, 20)
    yield "synchronized L=3, 20 phases", anet, sync_inputs_schedule(rep, horizon)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = sorted(kernel.BACKENDS)
    print(f"backends: {', '.join(names)}")
    print(f"{'case':32s} " + " ".join(f"{n:>12s}" for n in names) + "   speedup")
    for label, net, sched in cases():
        best, traces = {}, {}
        for name in names:
            times = []
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                tr = run(net, sched, seed=11, backend=name)
                times.append(time.perf_counter() - t0)
            best[name], traces[name] = min(times), tr.states
        ref = traces[names[0]]
        assert all(np.array_equal(ref, s) for s in traces.values()), f"backends disagree on {label}"
        speed = f"{best['python'] / best['compiled']:8.1f}x" if len(names) > 1 else "       -"
        print(f"{label:32s} " + " ".join(f"{best[n] * 1e3:10.1f}ms" for n in names) + f"  {speed}")


if __name__ == "__main__":
    main()
