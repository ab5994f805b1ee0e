"""Command-line front end (``snn``).

Exit codes: 0 success, 1 usage error, 2 validation or property failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .approx_counter import ApproxCounterParams, build_approx_counter
from .async_timers import LatencyPolicy, assign_latencies, build_det_timer_async
from .counters import build_det_counter
from .engine import InputSchedule, run
from .model import BuildReport, InvalidNetwork, load, save, validate
from .rand_timers import RandTimerParams, build_rand_basic, build_rand_improved
from .synchronizer import SynchronizerConfig, synchronize
from .timers import TimerParams, build_det_timer, build_det_timer_param

KINDS = ("det-timer", "det-timer-param", "rand-basic", "rand-improved", "async-timer", "approx-counter", "counter")


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("SNN_SEED", "0")
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"SNN_SEED must be an integer, got {raw!r}") from None


def roles_path(net_path) -> Path:
    return Path(f"{net_path}.roles.json")


def write_report(report: BuildReport, path) -> None:
    save(report.network, path)
    roles_path(path).write_text(report.roles_json() + "\n", encoding="utf-8")


def read_report(path) -> BuildReport:
    net = load(path)
    side = roles_path(path)
    if side.exists():
        data = json.loads(side.read_text(encoding="utf-8"))
        return BuildReport(net, data["roles"], data.get("params", {}))
    return BuildReport(net, net.ids, {})


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--kind {args.kind} needs {', '.join(missing)}")


def _rand_params(args) -> RandTimerParams:
    _need(args, "t", "delta")
    return RandTimerParams(args.t, args.delta, chernoff_constant=args.chernoff_constant, ell_override=args.ell)


def build_kind(args) -> BuildReport:
    k = args.kind
    if k == "det-timer":
        _need(args, "t")
        return build_det_timer(TimerParams(args.t, "exact" if args.exact else "relaxed"))
    if k == "det-timer-param":
        _need(args, "t")
        return build_det_timer_param(args.t)
    if k == "rand-basic":
        return build_rand_basic(_rand_params(args))
    if k == "rand-improved":
        return build_rand_improved(_rand_params(args))
    if k == "async-timer":
        _need(args, "t", "L")
        return build_det_timer_async(args.t, args.L, periodic=args.periodic)
    if k == "approx-counter":
        _need(args, "t", "delta")
        return build_approx_counter(ApproxCounterParams(args.t, args.delta, alpha=args.alpha))
    _need(args, "t")
    return build_det_counter(args.t)


def cmd_build(args) -> int:
    try:
        report = build_kind(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_report(report, args.out)
    net = report.network
    print(f"{args.kind}: {len(net)} neurons, {len(net.auxiliaries)} auxiliary, "
          f"{len(net.stochastic)} stochastic, {len(net.synapses)} synapses -> {args.out}")
    return 0


def _parse_spikes(items, net) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for item in items or ():
        name, _, rounds = item.partition(":")
        if not rounds:
            raise UsageError(f"--spike expects NAME:R1,R2,..., got {item!r}")
        try:
            out.setdefault(net.id(name), []).extend(int(r) for r in rounds.split(","))
        except KeyError:
            raise UsageError(f"unknown neuron {name!r}") from None
        except ValueError:
            raise UsageError(f"bad round list in {item!r}") from None
    return out


def _ids(names, net) -> list[int]:
    try:
        return [net.id(n) for n in names or ()]
    except KeyError as exc:
        raise UsageError(f"unknown neuron {exc.args[0]!r}") from None


def cmd_run(args) -> int:
    net = load(args.net)
    held = _ids(args.hold, net)
    spikes = _parse_spikes(args.spike, net)
    if args.synchronized:
        spikes.setdefault(net.id("pg_start"), []).append(0)
    sched = InputSchedule.build(args.horizon, spikes, held)
    try:
        trace = run(net, sched, seed=args.seed)
    except (InvalidNetwork, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        trace.export(args.out, events=args.events)
    else:
        for line in trace.eventlines() if args.events else trace.bitlines():
            print(line)
    return 0


def cmd_montecarlo(args) -> int:
    prop = args.property
    if prop == "morris-moments":
        _need_mc(args, "n", "alpha", "delta")
        p = ApproxCounterParams(max(args.t or 0, int(2 / args.delta) + 2), args.delta, alpha=args.alpha)
        trial = harness.morris_within_half(max(0, args.n - p.s), p.alpha, p.init_z)
    else:
        if args.net is None:
            raise UsageError(f"--property {prop} needs --net")
        if prop == "sync-similar-exec":
            _need_mc(args, "L")
            net = load(args.net)
            trial = harness.sync_similar_exec(net, args.L, args.phases, _ids(args.hold, net))
        else:
            report = read_report(args.net)
            if prop == "approx-count-window":
                _need_mc(args, "n")
                trial = harness.approx_count_window(report, args.n)
            elif "t" not in report.params:
                raise UsageError(f"{args.net} has no timer parameter t (missing roles sidecar?)")
            elif prop == "timer-fires-t":
                trial = harness.timer_fires_t(report)
            else:
                trial = harness.timer_stops_2t(report)
    result = harness.monte_carlo(prop, trial, args.trials, args.seed)
    print(result.summary())
    if args.csv:
        harness.write_csv([result], args.csv)
    if args.min_rate is not None and result.hi < args.min_rate:
        print(f"property rate below {args.min_rate}", file=sys.stderr)
        return 2
    return 0


def _need_mc(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--property {args.property} needs {', '.join(missing)}")


def cmd_synchronize(args) -> int:
    net = load(args.net)
    try:
        report = synchronize(net, SynchronizerConfig(args.L))
    except (InvalidNetwork, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_report(report, args.out)
    print(f"synchronized {len(net)} -> {len(report.network)} neurons (L={args.L}) -> {args.out}")
    return 0


def cmd_assign_latencies(args) -> int:
    net = load(args.net)
    if args.policy == "uniform":
        policy = LatencyPolicy.uniform(args.L)
    elif args.policy == "random":
        policy = LatencyPolicy.random_in(args.L, args.seed)
    else:
        policy = LatencyPolicy.adversarial_sync_timer()
    try:
        out = assign_latencies(net, policy)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save(out, args.out)
    side = roles_path(args.net)
    if side.exists():
        roles_path(args.out).write_text(side.read_text(encoding="utf-8"), encoding="utf-8")
    return 0


def cmd_verify(args) -> int:
    try:
        problems = validate(load(args.net))
    except (ValueError, IndexError, KeyError) as exc:
        print(f"unreadable network file: {exc}", file=sys.stderr)
        return 2
    for v in problems:
        print(f"{v.code}: {v.message}")
    if problems:
        return 2
    print("ok")
    return 0


def cmd_random_net(args) -> int:
    spec = harness.RandomNetSpec(
        args.n, args.density, (args.weight_min, args.weight_max), args.stochastic, args.seed, args.inputs
    )
    save(harness.random_network(spec), args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="snn", description="Build and simulate spiking neural circuits.",
                                 allow_abbrev=False)
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, func, help):
        p = sub.add_parser(name, help=help, allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    p = cmd("build", cmd_build, "compile a circuit to a network file")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--t", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--exact", action="store_true", help="det-timer: require t = 2**k + k")
    p.add_argument("--periodic", action="store_true", help="async-timer: free-running pulse generator")
    p.add_argument("--chernoff-constant", type=float, help="rand timers: ell = ceil(c ln(1/delta))")
    p.add_argument("--ell", type=int, help="rand timers: explicit population size")
    p.add_argument("--out", required=True)

    p = cmd("run", cmd_run, "simulate a network and print its trace")
    p.add_argument("--net", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--spike", action="append", metavar="NAME:R1,R2")
    p.add_argument("--hold", action="append", metavar="NAME")
    p.add_argument("--synchronized", action="store_true", help="fire pg_start at round 0")
    p.add_argument("--events", action="store_true", help="list firing labels instead of bit rows")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = cmd("montecarlo", cmd_montecarlo, "estimate a property's success rate")
    p.add_argument("--property", required=True, choices=harness.PROPERTIES)
    p.add_argument("--net")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--phases", type=int, default=10)
    p.add_argument("--hold", action="append", metavar="NAME")
    p.add_argument("--min-rate", type=float, help="exit 2 if the interval lies entirely below this")
    p.add_argument("--csv")

    p = cmd("synchronize", cmd_synchronize, "compile a synchronous network for latencies up to L")
    p.add_argument("--net", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out", required=True)

    p = cmd("assign-latencies", cmd_assign_latencies, "copy a network with per-edge latencies")
    p.add_argument("--net", required=True)
    p.add_argument("--policy", required=True, choices=("uniform", "random", "adversarial"))
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = cmd("verify", cmd_verify, "check a network file for structural problems")
    p.add_argument("--net", required=True)

    p = cmd("random-net", cmd_random_net, "generate a random valid network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--weight-min", type=float, default=0.5)
    p.add_argument("--weight-max", type=float, default=3.0)
    p.add_argument("--stochastic", type=int, default=0)
    p.add_argument("--inputs", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = default_seed()
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
