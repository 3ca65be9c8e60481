"""Deterministic discrete-event simulation of a CCN network.

Packets move between nodes over links with propagation delay
``length / (alpha * c)`` plus transmission delay ``size / bandwidth``.
Routers add a processing delay priced from the table operations each
packet cost them.  There is no queueing.  All randomness comes from numpy
generators keyed on ``(seed, stream)``, and simultaneous events are
ordered by insertion sequence.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..analytic import ZipfClasses, zipf_rates
from ..forwarder import (
    Consumer,
    ForwardAction,
    ForwarderMode,
    MissingSupportingName,
    OpCounters,
    Producer,
    Router,
    UnmatchableNack,
)
from ..tables import (
    DEFAULT_CS_CAPACITY,
    DEFAULT_PIT_CAPACITY,
    DEFAULT_PIT_LIFETIME,
    Cs,
    FullPolicy,
    Pit,
)
from ..wire import Message, Name, encoded_size
from .metrics import RttSample, RunMetrics, Tally
from .routing import build_routes, hop_counts
from .topology import Role, Topology, TopologyError

ARRIVAL, GENERATE, ATTACK, EXPIRE = range(4)

CATALOG_COMPONENT = "obj"


class ConfigError(ValueError):
    pass


@dataclass
class CostTable:
    """Seconds charged per table operation (plus a flat per-packet cost)."""

    per_packet: float = 0.0
    cs_lookup: float = 1e-6
    cs_insert: float = 2e-6
    pit_lookup: float = 1e-6
    pit_insert: float = 2e-6
    pit_delete: float = 2e-6
    fib_lookup: float = 1e-6

    def delay(self, ops: OpCounters) -> float:
        return (self.per_packet
                + ops.cs_lookups * self.cs_lookup
                + ops.cs_inserts * self.cs_insert
                + ops.pit_lookups * self.pit_lookup
                + ops.pit_inserts * self.pit_insert
                + ops.pit_deletes * self.pit_delete
                + ops.fib_lookups * self.fib_lookup)


@dataclass
class TrafficSpec:
    """Legitimate consumer traffic.

    Each consumer issues Poisson requests at ``rate`` per second.  The
    class of a request is drawn with weights halving from class to class.
    With ``unique_suffix`` every name gets a fresh random last component,
    so nothing is ever served from a cache; otherwise names come from a
    fixed catalog of ``segments`` segments per class.
    """

    rate: float = 10.0
    classes: ZipfClasses = field(default_factory=lambda: ZipfClasses(4))
    unique_suffix: bool = True
    segments: int = 1
    start: float = 0.0


@dataclass
class AttackSpec:
    """Interest flood of names under a producer prefix that nobody serves."""

    attackers: list[str]
    rate: float = 1000.0
    start: float = 2.0
    stop: float = 8.0
    prefix: Optional[Name] = None


@dataclass
class SimConfig:
    topology: Topology
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    attack: Optional[AttackSpec] = None
    seed: int = 0
    duration: float = 10.0
    mode: Optional[ForwarderMode] = None
    costs: CostTable = field(default_factory=CostTable)
    pit_capacity: int = DEFAULT_PIT_CAPACITY
    pit_lifetime: float = DEFAULT_PIT_LIFETIME
    pit_policy: FullPolicy = FullPolicy.DROP_NEW
    cs_capacity: int = DEFAULT_CS_CAPACITY
    cache_hint: float = 1.0
    gateway_buffer: int = 1024
    payload_size: int = 1024
    drain: float = 60.0
    expire_interval: float = 1.0
    goodput_bin: float = 1.0
    run_id: str = "run"

    def validate(self) -> None:
        try:
            self.topology.validate()
        except TopologyError as e:
            raise ConfigError(str(e)) from e
        if not self.topology.by_role(Role.PRODUCER):
            raise ConfigError("topology has no producer")
        if self.duration <= 0:
            raise ConfigError("duration must be > 0")
        if self.traffic.rate <= 0:
            raise ConfigError("traffic rate must be > 0")
        if self.traffic.segments < 1:
            raise ConfigError("segments must be >= 1")
        if self.pit_capacity < 1:
            raise ConfigError("PIT capacity must be >= 1")
        if self.pit_lifetime <= 0 or self.cache_hint < 0 or self.drain < 0:
            raise ConfigError("lifetimes and drain must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.attack is not None:
            a = self.attack
            if a.rate <= 0:
                raise ConfigError("flood rate must be > 0")
            if not a.attackers:
                raise ConfigError("attack needs at least one attacker")
            if a.stop <= a.start:
                raise ConfigError("attack must stop after it starts")
            consumers = {n.id for n in self.topology.by_role(Role.CONSUMER)}
            for node_id in a.attackers:
                if node_id not in consumers:
                    raise ConfigError(f"attacker {node_id} is not a consumer node")

    def describe(self) -> dict[str, str]:
        """Flat settings dump for reproducibility headers."""
        out = {
            "run_id": self.run_id,
            "seed": str(self.seed),
            "duration": repr(self.duration),
            "mode": self.mode.value if self.mode else "per-node",
            "pit_capacity": str(self.pit_capacity),
            "pit_lifetime": repr(self.pit_lifetime),
            "pit_policy": self.pit_policy.value,
            "cs_capacity": str(self.cs_capacity),
            "cache_hint": repr(self.cache_hint),
            "payload_size": str(self.payload_size),
            "traffic.rate": repr(self.traffic.rate),
            "traffic.classes": str(self.traffic.classes.K),
            "traffic.unique_suffix": str(int(self.traffic.unique_suffix)),
            "traffic.segments": str(self.traffic.segments),
            "nodes": str(len(self.topology.nodes)),
            "links": str(len(self.topology.links)),
        }
        for k, v in asdict(self.costs).items():
            out[f"cost.{k}"] = repr(v)
        if self.attack is not None:
            out["attack.attackers"] = " ".join(self.attack.attackers)
            out["attack.rate"] = repr(self.attack.rate)
            out["attack.window"] = f"{self.attack.start!r}-{self.attack.stop!r}"
        return out


class Simulation:
    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        topo = config.topology
        if config.mode is not None:
            topo = topo.with_mode(config.mode)
        self.topology = topo
        self.ports = topo.ports()
        self.peer_iface: dict[tuple[str, int], int] = {}
        for node_id, plist in self.ports.items():
            for i, (peer, link) in enumerate(plist):
                for j, (back, l2) in enumerate(self.ports[peer]):
                    if back == node_id and l2 is link:
                        self.peer_iface[(node_id, i)] = j

        fibs = build_routes(topo)
        self.nodes: dict[str, object] = {}
        self.roles: dict[str, Role] = {}
        for spec in topo.nodes:
            names = topo.prefixes.get(spec.id, [])
            if spec.role is Role.ROUTER:
                pit = None
                if spec.mode is not ForwarderMode.STATELESS:
                    pit = Pit(config.pit_capacity, config.pit_policy, config.pit_lifetime)
                node = Router(spec.id, spec.mode, fibs[spec.id], cs=Cs(config.cs_capacity),
                              pit=pit, caching=spec.caching, cache_hint=config.cache_hint,
                              gateway_rbn=names[0] if names else None,
                              gateway_buffer=config.gateway_buffer,
                              ifaces=set(range(len(self.ports[spec.id]))))
            elif spec.role is Role.CONSUMER:
                node = Consumer(spec.id, spec.mode, names[0] if names else None)
            else:
                node = Producer(spec.id, names, catalog=names[0].append(CATALOG_COMPONENT),
                                payload_size=config.payload_size)
            self.nodes[spec.id] = node
            self.roles[spec.id] = spec.role

        self.producers = [n.id for n in topo.by_role(Role.PRODUCER)]
        self.hops = hop_counts(topo)
        self.interest_ops = {n: 0 for n in self.nodes}
        self.content_ops = {n: 0 for n in self.nodes}
        self.drops: dict[Name, list[float]] = {}
        self.modeled_time = 0.0

        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0.0
        self._traffic_end = config.duration
        if config.attack is not None:
            self._traffic_end = max(self._traffic_end, config.attack.stop)

        rates = zipf_rates(config.traffic.classes)
        total = sum(rates)
        self._class_cdf = list(itertools.accumulate(r / total for r in rates))
        self._rngs: dict[str, np.random.Generator] = {}
        self._counts: dict[str, int] = {}
        attackers = set(config.attack.attackers) if config.attack else set()
        for idx, spec in enumerate(topo.nodes):
            if spec.role is not Role.CONSUMER:
                continue
            rng = np.random.default_rng([config.seed, idx])
            self._rngs[spec.id] = rng
            self._counts[spec.id] = 0
            if spec.id in attackers:
                a = config.attack
                self.schedule(a.start + rng.exponential(1.0 / a.rate), ATTACK, spec.id)
            else:
                t = config.traffic.start + rng.exponential(1.0 / config.traffic.rate)
                if t < config.duration:
                    self.schedule(t, GENERATE, spec.id)
        for node_id, node in self.nodes.items():
            if isinstance(node, Router) and node.pit is not None:
                self.schedule(config.expire_interval, EXPIRE, node_id)

    def schedule(self, t: float, kind: int, *data) -> None:
        heapq.heappush(self._heap, (t, next(self._seq), kind, data))

    # -- traffic -----------------------------------------------------------

    def _legit_name(self, consumer: str, rng: np.random.Generator) -> tuple[Name, str]:
        if len(self.producers) == 1:
            target = self.producers[0]
        else:
            target = self.producers[int(rng.integers(0, len(self.producers)))]
        catalog = self.nodes[target].catalog
        k = bisect.bisect_right(self._class_cdf, rng.random())
        k = min(k, len(self._class_cdf) - 1) + 1
        t = self.config.traffic
        if t.unique_suffix:
            seq = self._counts[consumer]
            self._counts[consumer] = seq + 1
            token = int(rng.integers(0, 2 ** 32))
            return catalog.append(f"c{k}", f"{consumer}.{seq}.{token:08x}"), target
        seg = int(rng.integers(0, t.segments))
        return catalog.append(f"c{k}", f"s{seg}"), target

    def _generate(self, consumer_id: str) -> None:
        rng = self._rngs[consumer_id]
        name, target = self._legit_name(consumer_id, rng)
        node = self.nodes[consumer_id]
        _, action = node.issue(name, self.now, target=target)
        self._emit(consumer_id, action.sends, self.now)
        nxt = self.now + rng.exponential(1.0 / self.config.traffic.rate)
        if nxt < self.config.duration:
            self.schedule(nxt, GENERATE, consumer_id)

    def _attack(self, attacker_id: str) -> None:
        a = self.config.attack
        rng = self._rngs[attacker_id]
        prefix = a.prefix if a.prefix is not None else self.nodes[self.producers[0]].prefixes[0]
        name = prefix.append(str(int(rng.integers(0, 2 ** 63))))
        _, action = self.nodes[attacker_id].issue(name, self.now, attack=True)
        self._emit(attacker_id, action.sends, self.now)
        nxt = self.now + rng.exponential(1.0 / a.rate)
        if nxt < a.stop:
            self.schedule(nxt, ATTACK, attacker_id)

    # -- packet movement ---------------------------------------------------

    def _emit(self, node_id: str, sends, depart: float) -> None:
        plist = self.ports[node_id]
        for msg, iface in sends:
            peer, link = plist[iface]
            arrive = depart + encoded_size(msg) * 8 / link.bandwidth_bps + link.delay
            self.schedule(arrive, ARRIVAL, peer, msg, self.peer_iface[(node_id, iface)])

    def _record_drop(self, name: Name) -> None:
        self.drops.setdefault(name, []).append(self.now)

    def _arrival(self, node_id: str, msg: Message, iface: int) -> None:
        node = self.nodes[node_id]
        role = self.roles[node_id]
        now = self.now
        if role is Role.ROUTER:
            before = node.counters.copy()
            try:
                if msg.is_interest:
                    action = node.process_interest(msg, iface, now)
                elif msg.is_content:
                    action = node.process_content(msg, iface, now)
                else:
                    action = node.process_nack(msg, iface, now)
            except (UnmatchableNack, MissingSupportingName) as e:
                if isinstance(e, MissingSupportingName):
                    node.counters.drops += 1
                action = ForwardAction(drop=type(e).__name__)
            used = node.counters - before
            if msg.is_interest:
                self.interest_ops[node_id] += used.table_ops()
            elif msg.is_content:
                self.content_ops[node_id] += used.table_ops()
            delay = self.config.costs.delay(used)
            self.modeled_time += delay
            if action.drop is not None:
                self._record_drop(msg.name)
            self._emit(node_id, action.sends, now + delay)
        elif role is Role.CONSUMER:
            if msg.is_content:
                node.process_content(msg, iface, now)
            elif msg.is_nack:
                try:
                    action = node.process_nack(msg, iface, now)
                except UnmatchableNack:
                    return
                self._emit(node_id, action.sends, now)
        else:
            if msg.is_interest:
                action = node.process_interest(msg, iface, now)
                self._emit(node_id, action.sends, now)

    def _expire(self, node_id: str) -> None:
        self.nodes[node_id].pit.expire(self.now)
        nxt = self.now + self.config.expire_interval
        if nxt <= self._traffic_end + self.config.pit_lifetime + self.config.expire_interval:
            self.schedule(nxt, EXPIRE, node_id)

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunMetrics:
        horizon = self._traffic_end + self.config.drain
        heap = self._heap
        while heap:
            if heap[0][0] > horizon:
                break
            t, _, kind, data = heapq.heappop(heap)
            self.now = t
            if kind == ARRIVAL:
                self._arrival(*data)
            elif kind == GENERATE:
                self._generate(*data)
            elif kind == ATTACK:
                self._attack(*data)
            else:
                self._expire(*data)
        return self._collect()

    def _collect(self) -> RunMetrics:
        cfg = self.config
        in_flight_names = {data[1].name for _, _, kind, data in self._heap if kind == ARRIVAL}
        for node in self.nodes.values():
            if isinstance(node, Router) and node.pit is not None:
                in_flight_names.update(n for n, e in node.pit.entries.items()
                                       if not e.expired(self.now))

        window = (cfg.attack.start, cfg.attack.stop) if cfg.attack else None
        phases = {"before": Tally(), "during": Tally(), "after": Tally()} if window else {}
        bins: dict[int, Tally] = {}
        m = RunMetrics(
            run_id=cfg.run_id,
            mode=cfg.mode.value if cfg.mode else "mixed",
            counters={n: node.counters for n, node in self.nodes.items()
                      if isinstance(node, Router)},
            roles={n: r.value for n, r in self.roles.items() if r is Role.ROUTER},
            interest_ops={n: self.interest_ops[n] for n in self.nodes
                          if self.roles[n] is Role.ROUTER},
            content_ops={n: self.content_ops[n] for n in self.nodes
                         if self.roles[n] is Role.ROUTER},
            rtt_samples=[],
            attack_window=window,
            phases=phases,
            modeled_time=self.modeled_time,
            pit_peak={n: node.pit.peak for n, node in self.nodes.items()
                      if isinstance(node, Router) and node.pit is not None},
        )
        for node_id, node in self.nodes.items():
            if not isinstance(node, Consumer):
                continue
            got = []
            for req in node.requests:
                if req.attack:
                    m.attack_issued += 1
                    continue
                m.issued += 1
                if req.delivered_at is not None:
                    outcome = "delivered"
                    got.append(str(req.name))
                    m.rtt_samples.append(RttSample(node_id, self.hops[(node_id, req.target)],
                                                   req.rtt, req.issued_at, req.nacked))
                    if req.nacked:
                        m.recovered += 1
                elif req.gave_up:
                    outcome = "nacked"
                elif any(t >= req.issued_at for t in self.drops.get(req.name, ())):
                    outcome = "dropped"
                elif req.name in in_flight_names:
                    outcome = "in_flight"
                else:
                    outcome = "lost"
                if outcome == "delivered":
                    m.delivered += 1
                elif outcome == "nacked":
                    m.nacked_unrecovered += 1
                elif outcome == "dropped":
                    m.dropped += 1
                elif outcome == "in_flight":
                    m.in_flight += 1
                else:
                    m.lost += 1
                tallies = [bins.setdefault(int(req.issued_at // cfg.goodput_bin), Tally())]
                if window:
                    phase = ("before" if req.issued_at < window[0]
                             else "during" if req.issued_at < window[1] else "after")
                    tallies.append(phases[phase])
                for tally in tallies:
                    tally.issued += 1
                    if outcome == "delivered":
                        tally.delivered += 1
                    elif outcome == "dropped":
                        tally.dropped += 1
                    elif outcome == "nacked":
                        tally.nacked += 1
                    elif outcome == "in_flight":
                        tally.in_flight += 1
            m.delivered_names[node_id] = sorted(got)
        m.goodput = [(b * cfg.goodput_bin, t) for b, t in sorted(bins.items())]
        return m


def run(config: SimConfig) -> RunMetrics:
    return Simulation(config).run()


def run_flood(config: SimConfig) -> RunMetrics:
    """Run with an interest flood; phase tallies split legitimate goodput
    into before/during/after the attack window."""
    if config.attack is None:
        raise ConfigError("run_flood needs an AttackSpec")
    return run(config)
