"""Topologies: the line-oriented file format and seeded generators."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..forwarder import ForwarderMode
from ..wire import Name, format_lci, parse_lci

DEFAULT_ALPHA = 0.7
DEFAULT_BANDWIDTH = 1e9
LENGTH_RANGE_M = (10e3, 500e3)
PRODUCER_PREFIX = "lci:/bbc"
CONSUMER_ROOT = "lci:/ccn"


class TopologyError(ValueError):
    pass


class Role(enum.Enum):
    CONSUMER = "consumer"
    ROUTER = "router"
    PRODUCER = "producer"


@dataclass
class NodeSpec:
    id: str
    role: Role
    mode: ForwarderMode = ForwarderMode.STATELESS
    caching: bool = False


@dataclass
class LinkSpec:
    a: str
    b: str
    length_m: float
    alpha: float = DEFAULT_ALPHA
    bandwidth_bps: float = DEFAULT_BANDWIDTH

    @property
    def delay(self) -> float:
        from ..analytic import SPEED_OF_LIGHT
        return self.length_m / (self.alpha * SPEED_OF_LIGHT)


@dataclass
class Topology:
    nodes: list[NodeSpec] = field(default_factory=list)
    links: list[LinkSpec] = field(default_factory=list)
    prefixes: dict[str, list[Name]] = field(default_factory=dict)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def by_role(self, role: Role) -> list[NodeSpec]:
        return [n for n in self.nodes if n.role is role]

    def ports(self) -> dict[str, list[tuple[str, LinkSpec]]]:
        """Per node, its links in file order; the list index is the interface id."""
        out: dict[str, list[tuple[str, LinkSpec]]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            out[link.a].append((link.b, link))
            out[link.b].append((link.a, link))
        return out

    def access_router(self, node_id: str) -> str:
        (peer, _), = self.ports()[node_id]
        return peer

    def with_mode(self, mode: ForwarderMode) -> Topology:
        """Copy with every router and consumer switched to ``mode``."""
        nodes = [NodeSpec(n.id, n.role, mode if n.role is not Role.PRODUCER else n.mode,
                          n.caching) for n in self.nodes]
        return Topology(nodes, list(self.links), dict(self.prefixes))

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate node ids")
        known = set(ids)
        for link in self.links:
            if link.a not in known or link.b not in known:
                raise TopologyError(f"link {link.a}-{link.b} names an unknown node")
            if link.a == link.b:
                raise TopologyError(f"self-loop at {link.a}")
            if link.length_m <= 0 or not 0 < link.alpha <= 1 or link.bandwidth_bps <= 0:
                raise TopologyError(f"bad parameters on link {link.a}-{link.b}")
        for node_id in self.prefixes:
            if node_id not in known:
                raise TopologyError(f"prefix for unknown node {node_id}")
        ports = self.ports()
        roles = {n.id: n.role for n in self.nodes}
        for n in self.nodes:
            if n.role is not Role.ROUTER:
                if len(ports[n.id]) != 1 or roles[ports[n.id][0][0]] is not Role.ROUTER:
                    raise TopologyError(
                        f"{n.role.value} {n.id} must attach to exactly one router")
            if n.role is Role.PRODUCER and not self.prefixes.get(n.id):
                raise TopologyError(f"producer {n.id} has no prefix")
        if not is_connected(self):
            raise TopologyError("topology is not connected")

    # -- text format -----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for n in self.nodes:
            lines.append(f"node {n.id} {n.role.value} {n.mode.value} {int(n.caching)}")
        for l in self.links:
            lines.append(f"link {l.a} {l.b} {l.length_m!r} {l.alpha!r} {l.bandwidth_bps!r}")
        for node_id, names in self.prefixes.items():
            for name in names:
                lines.append(f"prefix {node_id} {format_lci(name)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Topology:
        topo = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            kind, *args = line.split()
            try:
                if kind == "node" and len(args) == 4:
                    node_id, role, mode, caching = args
                    topo.nodes.append(NodeSpec(node_id, Role(role), ForwarderMode(mode),
                                               _parse_bool(caching)))
                elif kind == "link" and len(args) == 5:
                    a, b, length, alpha, bw = args
                    topo.links.append(LinkSpec(a, b, float(length), float(alpha), float(bw)))
                elif kind == "prefix" and len(args) == 2:
                    topo.prefixes.setdefault(args[0], []).append(parse_lci(args[1]))
                else:
                    raise TopologyError(f"cannot parse {raw.strip()!r}")
            except (ValueError, KeyError) as e:
                raise TopologyError(f"line {lineno}: {e}") from e
        topo.validate()
        return topo

    @classmethod
    def load(cls, path: Union[str, Path]) -> Topology:
        return cls.from_text(Path(path).read_text())

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())


def _parse_bool(s: str) -> bool:
    v = s.lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def is_connected(topo: Topology) -> bool:
    if not topo.nodes:
        return True
    ports = topo.ports()
    seen = {topo.nodes[0].id}
    todo = deque(seen)
    while todo:
        for peer, _ in ports[todo.popleft()]:
            if peer not in seen:
                seen.add(peer)
                todo.append(peer)
    return len(seen) == len(topo.nodes)


# -- generators ------------------------------------------------------------

class _Builder:
    def __init__(self, seed: int, mode: ForwarderMode, alpha: float, bandwidth: float,
                 length_range: tuple[float, float]):
        self.rng = np.random.default_rng(seed)
        self.mode = mode
        self.alpha = alpha
        self.bandwidth = bandwidth
        self.length_range = length_range
        self.topo = Topology()

    def node(self, node_id: str, role: Role, caching: bool = False) -> str:
        self.topo.nodes.append(NodeSpec(node_id, role, self.mode, caching))
        return node_id

    def link(self, a: str, b: str, length: Optional[float] = None) -> None:
        if length is None:
            lo, hi = self.length_range
            length = float(self.rng.uniform(lo, hi))
        self.topo.links.append(LinkSpec(a, b, length, self.alpha, self.bandwidth))

    def consumers(self, router: str, count: int) -> None:
        base = parse_lci(CONSUMER_ROOT).append(router)
        for j in range(count):
            c = self.node(f"{router}c{j}", Role.CONSUMER)
            self.link(c, router)
            self.topo.prefixes[c] = [base.append(f"c{j}")]

    def producer(self, router: str, prefix: str = PRODUCER_PREFIX) -> None:
        p = self.node("P", Role.PRODUCER)
        self.link(p, router)
        self.topo.prefixes[p] = [parse_lci(prefix)]

    def mesh(self, names: list[str], extra_edges: int) -> None:
        """Random spanning tree over ``names`` plus ``extra_edges`` chords."""
        order = list(names)
        edges = set()
        for i in range(1, len(order)):
            j = int(self.rng.integers(0, i))
            edges.add((order[j], order[i]))
            self.link(order[j], order[i])
        candidates = [(a, b) for i, a in enumerate(order) for b in order[i + 1:]
                      if (a, b) not in edges and (b, a) not in edges]
        picks = self.rng.permutation(len(candidates))[:extra_edges]
        for k in sorted(int(x) for x in picks):
            self.link(*candidates[k])


def generate_topology(kind: str, seed: int = 0, *,
                      mode: ForwarderMode = ForwarderMode.STATELESS,
                      n: int = 3, depth: int = 2, fanout: int = 2,
                      access_routers: int = 16, consumers_per_access: int = 10,
                      core_routers: Optional[int] = None,
                      alpha: float = DEFAULT_ALPHA, bandwidth: float = DEFAULT_BANDWIDTH,
                      length_range: tuple[float, float] = LENGTH_RANGE_M) -> Topology:
    """Build ``line``, ``tree``, ``dfn_like`` or ``att_like`` topologies.

    ``line`` has ``n`` nodes: one consumer, ``n - 2`` routers, one producer.
    ``tree`` roots a router tree of the given depth/fanout at the producer's
    edge router and hangs one consumer off each leaf.  The two WAN-like
    kinds have a random core mesh, ``access_routers`` consumer-facing edge
    routers with ``consumers_per_access`` consumers each, and one extra edge
    router for the producer.  Only edge routers cache.
    """
    b = _Builder(seed, ForwarderMode(mode), alpha, bandwidth, length_range)
    if kind == "line":
        if n < 3:
            raise ValueError("a line needs at least 3 nodes")
        routers = [b.node(f"R{i}", Role.ROUTER, caching=(i == 0)) for i in range(n - 2)]
        for x, y in zip(routers, routers[1:]):
            b.link(x, y)
        b.consumers(routers[0], 1)
        b.producer(routers[-1])
    elif kind == "tree":
        if depth < 1 or fanout < 1:
            raise ValueError("tree needs depth >= 1 and fanout >= 1")
        level = [b.node("R0", Role.ROUTER)]
        count = 1
        for d in range(depth):
            nxt = []
            for parent in level:
                for _ in range(fanout):
                    child = b.node(f"R{count}", Role.ROUTER, caching=(d == depth - 1))
                    count += 1
                    b.link(parent, child)
                    nxt.append(child)
            level = nxt
        for leaf in level:
            b.consumers(leaf, 1)
        b.producer("R0")
    elif kind in ("dfn_like", "att_like"):
        if core_routers is None:
            core_routers = 15 if kind == "dfn_like" else 23
        core = [b.node(f"K{i}", Role.ROUTER) for i in range(core_routers)]
        # the AT&T backbone is denser than DFN
        chords = core_routers // 2 if kind == "dfn_like" else core_routers
        b.mesh(core, chords)
        edges = [b.node(f"E{i}", Role.ROUTER, caching=True) for i in range(access_routers)]
        for e in edges:
            uplinks = 1 + int(b.rng.random() < 0.5)
            for k in sorted(int(x) for x in b.rng.permutation(core_routers)[:uplinks]):
                b.link(e, core[k])
        pe = b.node("EP", Role.ROUTER, caching=True)
        b.link(pe, core[int(b.rng.integers(0, core_routers))])
        for e in edges:
            b.consumers(e, consumers_per_access)
        b.producer(pe)
    else:
        raise ValueError(f"unknown topology kind {kind!r}")
    b.topo.validate()
    return b.topo
