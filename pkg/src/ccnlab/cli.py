"""Command-line front end: ``model``, ``run``, ``attack`` and ``compare``.

Everything is written as CSV; summaries go to stderr.  Each CSV starts
with ``#`` comment lines echoing the settings that produced it.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analytic import DEFAULT_BASE_RATE, ZipfClasses, model_curves
from .forwarder import ForwarderMode
from .simnet import (
    AttackSpec,
    ConfigError,
    CostTable,
    RunMetrics,
    SimConfig,
    Topology,
    TopologyError,
    TrafficSpec,
    generate_topology,
    run,
)
from .simnet.metrics import GOODPUT_HEADER, METRICS_HEADER, fmt
from .simnet.topology import Role
from .tables import FullPolicy

EXIT_CONFIG = 1
EXIT_CONSERVATION = 3


def _header(settings: dict[str, str]) -> str:
    lines = [f"# ccnlab {__version__}"]
    lines += [f"# {k}={v}" for k, v in settings.items()]
    return "\n".join(lines) + "\n"


def _write(out: Optional[str], text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _float_list(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def load_topology(spec: str, seed: int = 0) -> Topology:
    """``line:N``, ``tree:DxF``, ``dfn_like``, ``att_like`` or a topology file."""
    kind, _, arg = spec.partition(":")
    if kind == "line":
        return generate_topology("line", seed, n=int(arg or 3))
    if kind == "tree":
        depth, _, fanout = (arg or "2x2").partition("x")
        return generate_topology("tree", seed, depth=int(depth), fanout=int(fanout or 2))
    if kind in ("dfn_like", "att_like"):
        return generate_topology(kind, seed)
    return Topology.load(spec)


def _costs(pairs: Sequence[str]) -> CostTable:
    costs = CostTable()
    names = {f.name for f in fields(CostTable)}
    for pair in pairs:
        k, sep, v = pair.partition("=")
        if not sep or k not in names:
            raise ConfigError(f"bad cost override {pair!r}; keys: {', '.join(sorted(names))}")
        setattr(costs, k, float(v))
    return costs


def _mode(s: str) -> Optional[ForwarderMode]:
    return None if s == "file" else ForwarderMode(s)


def _base_config(args, mode: Optional[ForwarderMode], seed: int) -> SimConfig:
    topo = load_topology(args.topo, args.topo_seed)
    traffic = TrafficSpec(rate=args.rate, classes=ZipfClasses(args.classes),
                          unique_suffix=not args.catalog, segments=args.segments)
    label = mode.value if mode else "file"
    return SimConfig(
        topology=topo, traffic=traffic, seed=seed, duration=args.duration, mode=mode,
        costs=_costs(args.cost), pit_capacity=args.pit_capacity,
        pit_lifetime=args.pit_lifetime, pit_policy=FullPolicy(args.pit_policy),
        cs_capacity=args.cs_capacity, cache_hint=args.cache_hint,
        run_id=f"{label}-s{seed}",
    )


def _run_many(configs: list[SimConfig], jobs: int) -> list[RunMetrics]:
    if jobs <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, configs))


def _summary(m: RunMetrics) -> str:
    lines = [
        f"[{m.run_id}] issued={m.issued} delivered={m.delivered} dropped={m.dropped} "
        f"nacked={m.nacked_unrecovered} in_flight={m.in_flight} lost={m.lost} "
        f"conserved={m.conserved}",
    ]
    tot = m.total()
    if tot.interests:
        lines.append(f"[{m.run_id}] table ops/interest={m.ops_per_interest():.4f} "
                     f"ops/content={m.ops_per_content() if tot.contents else float('nan'):.4f} "
                     f"pit ops={tot.pit_inserts + tot.pit_lookups + tot.pit_deletes} "
                     f"nacks_sent={tot.nacks_sent} collapses={tot.collapses}")
    lines.append(f"[{m.run_id}] hops mean_rtt_s stddev count")
    for h, mu, sd, n in m.rtt_by_hops():
        lines.append(f"[{m.run_id}] {h} {mu:.6g} {sd:.3g} {n}")
    return "\n".join(lines) + "\n"


# -- subcommands -------------------------------------------------------------

def cmd_model(args) -> int:
    step = args.step_ms
    n = int(round(args.max_delay_ms / step))
    delays_ms = [round(i * step, 12) for i in range(n + 1)]
    hits = _float_list(args.hit_rates) if args.hit_rates else None
    settings = {"lambda1": repr(args.lambda1), "classes": str(args.classes),
                "max_delay_ms": repr(args.max_delay_ms), "step_ms": repr(step),
                "sigma": repr(args.sigma), "hit_rates": args.hit_rates or "0"}
    body = ["delay_ms,class,probability"]
    for d_ms in delays_ms:
        for _, k, p in model_curves(args.lambda1, args.classes, [d_ms / 1000], hits,
                                    args.sigma):
            body.append(f"{fmt(d_ms)},{k},{fmt(p)}")
    _write(args.out, _header(settings) + "\n".join(body) + "\n")
    return 0


def cmd_run(args) -> int:
    mode = _mode(args.mode)
    configs = [_base_config(args, mode, args.seed + r) for r in range(args.replicas)]
    results = _run_many(configs, args.jobs)
    text = _header(configs[0].describe() | {"replicas": str(args.replicas)})
    text += METRICS_HEADER + "\n"
    text += "".join(m.to_csv(header=False) for m in results)
    _write(args.out, text)
    if args.rtt_out:
        _write(args.rtt_out, "".join(m.rtt_csv() for m in results))
    for m in results:
        sys.stderr.write(_summary(m))
    return 0 if all(m.conserved for m in results) else EXIT_CONSERVATION


def _attack_config(args, mode: ForwarderMode) -> SimConfig:
    cfg = _base_config(args, mode, args.seed)
    attackers = args.attackers.split(",") if args.attackers else [
        cfg.topology.by_role(Role.CONSUMER)[0].id]
    attack = AttackSpec(attackers, rate=args.flood_rate, start=args.attack_start,
                        stop=args.attack_stop)
    return replace(cfg, attack=attack)


def cmd_attack(args) -> int:
    modes = [ForwarderMode(m) for m in args.modes.split(",")]
    configs = [_attack_config(args, m) for m in modes]
    results = _run_many(configs, args.jobs)
    settings = configs[0].describe()
    settings["modes"] = args.modes
    text = _header(settings) + GOODPUT_HEADER + "\n"
    text += "".join(m.goodput_csv(header=False) for m in results)
    _write(args.out, text)
    for m in results:
        sys.stderr.write(_summary(m))
        during = m.phases["during"]
        sys.stderr.write(
            f"[{m.run_id}] attack window: legit drop rate={during.drop_rate:.4f} "
            f"nacks_sent={m.nacks_sent} recovered={m.recovered} "
            f"recovered_rtt={m.mean_rtt(True) if m.recovered else float('nan'):.6g} "
            f"baseline_rtt={m.mean_rtt(False):.6g}\n")
    return 0 if all(m.conserved for m in results) else EXIT_CONSERVATION


def cmd_compare(args) -> int:
    modes = [ForwarderMode(m) for m in args.modes.split(",")]
    configs = [_base_config(args, m, args.seed) for m in modes]
    results = _run_many(configs, args.jobs)
    settings = configs[0].describe()
    settings["modes"] = args.modes
    lines = ["mode,ops_per_interest,ops_per_content,mean_rtt_s,hops,mean_rtt_hops_s,stddev,count"]
    for mode, m in zip(modes, results):
        for h, mu, sd, n in m.rtt_by_hops():
            lines.append(f"{mode.value},{fmt(m.ops_per_interest())},{fmt(m.ops_per_content())},"
                         f"{fmt(m.mean_rtt())},{h},{fmt(mu)},{fmt(sd)},{n}")
    _write(args.out, _header(settings) + "\n".join(lines) + "\n")
    by_mode = dict(zip(modes, results))
    for m in results:
        sys.stderr.write(_summary(m))
    if ForwarderMode.STATELESS in by_mode and ForwarderMode.STATEFUL in by_mode:
        sl, sf = by_mode[ForwarderMode.STATELESS], by_mode[ForwarderMode.STATEFUL]
        sys.stderr.write(
            f"stateless/stateful ops per interest = {sl.ops_per_interest() / sf.ops_per_interest():.4f}, "
            f"per content = {sl.ops_per_content() / sf.ops_per_content():.4f}, "
            f"mean RTT = {sl.mean_rtt() / sf.mean_rtt():.6f}\n")
    return 0 if all(m.conserved for m in results) else EXIT_CONSERVATION


# -- argument parsing ---------------------------------------------------------

def _sim_args(p: argparse.ArgumentParser, default_duration: float = 10.0) -> None:
    p.add_argument("--topo", default="dfn_like",
                   help="line:N, tree:DxF, dfn_like, att_like, or a topology file")
    p.add_argument("--topo-seed", type=int, default=0, help="seed for generated topologies")
    p.add_argument("--seed", type=int, required=True, help="traffic seed (u64)")
    p.add_argument("--duration", type=float, default=default_duration, help="seconds of traffic")
    p.add_argument("--rate", type=float, default=10.0, help="interests/s per consumer")
    p.add_argument("--classes", type=int, default=4, help="popularity classes")
    p.add_argument("--catalog", action="store_true",
                   help="request a fixed catalog instead of unique names")
    p.add_argument("--segments", type=int, default=1, help="segments per catalog object")
    p.add_argument("--pit-capacity", type=int, default=SimConfig.pit_capacity)
    p.add_argument("--pit-lifetime", type=float, default=SimConfig.pit_lifetime)
    p.add_argument("--pit-policy", choices=[p.value for p in FullPolicy],
                   default=FullPolicy.DROP_NEW.value)
    p.add_argument("--cs-capacity", type=int, default=SimConfig.cs_capacity)
    p.add_argument("--cache-hint", type=float, default=SimConfig.cache_hint,
                   help="seconds routers keep cached content")
    p.add_argument("--cost", action="append", default=[], metavar="OP=SECONDS",
                   help="override a per-operation processing cost")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccnlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ccnlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="interest-collapsing probability curves")
    p.add_argument("--lambda1", type=float, default=DEFAULT_BASE_RATE,
                   help="class-1 arrival rate, interests/s")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--max-delay-ms", type=float, default=4.0)
    p.add_argument("--step-ms", type=float, default=0.1)
    p.add_argument("--sigma", type=float, default=1.0, help="segments per content")
    p.add_argument("--hit-rates", default=None,
                   help="comma-separated per-class cache-hit probabilities")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("run", help="simulate one forwarding mode")
    _sim_args(p)
    p.add_argument("--mode", choices=[m.value for m in ForwarderMode] + ["file"],
                   default="stateless", help="'file' keeps per-node modes from the topology")
    p.add_argument("--replicas", type=int, default=1, help="run seeds seed..seed+N-1")
    p.add_argument("--rtt-out", default=None, help="RTT-by-hops CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="interest-flooding study across modes")
    _sim_args(p)
    p.add_argument("--modes", default="stateful,stateless,hybrid")
    p.add_argument("--attackers", default=None, help="comma-separated consumer ids")
    p.add_argument("--flood-rate", type=float, default=1000.0)
    p.add_argument("--attack-start", type=float, default=2.0)
    p.add_argument("--attack-stop", type=float, default=8.0)
    p.set_defaults(func=cmd_attack, pit_capacity=100)

    p = sub.add_parser("compare", help="stateless vs stateful op counts and RTT")
    _sim_args(p)
    p.add_argument("--modes", default="stateless,stateful")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TopologyError, ValueError, OSError) as e:
        print(f"ccnlab: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
