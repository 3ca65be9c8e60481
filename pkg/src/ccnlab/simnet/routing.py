"""Shortest-path FIB construction, with consumer-prefix aggregation."""

from __future__ import annotations

import heapq
from typing import Optional

from ..forwarder import ForwarderMode
from ..nametree import Fib, aggregate_prefixes
from ..wire import Name
from .topology import Role, Topology, TopologyError, is_connected


class DisconnectedTopology(TopologyError):
    pass


class ShortestPathTree:
    """Delay-shortest paths from every node towards one destination."""

    def __init__(self, topo: Topology, dest: str, ports=None):
        ports = ports if ports is not None else topo.ports()
        self.dest = dest
        self.dist: dict[str, float] = {dest: 0.0}
        self.hops: dict[str, int] = {dest: 0}
        # node -> interface leading one step closer to dest
        self.next_iface: dict[str, int] = {}
        done = set()
        heap = [(0.0, dest)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for iface_u, (v, link) in enumerate(ports[u]):
                nd = d + link.delay
                if v not in self.dist or nd < self.dist[v]:
                    self.dist[v] = nd
                    self.hops[v] = self.hops[u] + 1
                    self.next_iface[v] = _iface_to(ports, v, u, link)
                    heapq.heappush(heap, (nd, v))


def _iface_to(ports, node: str, peer: str, link) -> int:
    for i, (p, l) in enumerate(ports[node]):
        if p == peer and l is link:
            return i
    raise KeyError((node, peer))


def _needs_consumer_routes(topo: Topology) -> bool:
    return any(n.mode is not ForwarderMode.STATEFUL
               for n in topo.nodes if n.role is not Role.PRODUCER)


def build_routes(topo: Topology, consumer_routes: Optional[bool] = None) -> dict[str, Fib]:
    """Install next hops for producer prefixes and, if needed, consumer RBNs.

    Consumer routes default to on whenever some router or consumer is not
    purely stateful.  An access router holds exact routes to each of its
    consumers and every other router one aggregate per access router; when
    aggregates would overlap the individual RBNs are announced instead.
    """
    if not is_connected(topo):
        raise DisconnectedTopology("topology is not connected")
    if consumer_routes is None:
        consumer_routes = _needs_consumer_routes(topo)
    ports = topo.ports()
    roles = {n.id: n.role for n in topo.nodes}
    routers = [n.id for n in topo.nodes if n.role is Role.ROUTER]
    fibs = {r: Fib() for r in routers}
    trees: dict[str, ShortestPathTree] = {}

    def tree(dest):
        if dest not in trees:
            trees[dest] = ShortestPathTree(topo, dest, ports)
        return trees[dest]

    def install(prefix: Name, dest: str):
        t = tree(dest)
        for r in routers:
            if r != dest:
                fibs[r].insert(prefix, t.next_iface[r])

    for n in topo.nodes:
        if n.role is Role.PRODUCER:
            for prefix in topo.prefixes.get(n.id, []):
                install(prefix, n.id)
    if not consumer_routes:
        return fibs

    groups: dict[str, list[tuple[str, Name]]] = {}
    for n in topo.nodes:
        if n.role is Role.CONSUMER:
            access = ports[n.id][0][0]
            for rbn in topo.prefixes.get(n.id, []):
                groups.setdefault(access, []).append((n.id, rbn))
    aggregates = {a: aggregate_prefixes([rbn for _, rbn in members])
                  for a, members in groups.items()}
    for access, members in groups.items():
        agg = aggregates[access]
        clash = len(agg) == 0 or any(
            agg.is_prefix_of(rbn)
            for other, om in groups.items() if other != access for _, rbn in om)
        for consumer, rbn in members:
            fibs[access].insert(rbn, tree(consumer).next_iface[access])
        if clash:
            for consumer, rbn in members:
                install(rbn, consumer)
        else:
            install_except = tree(access)
            for r in routers:
                if r != access:
                    fibs[r].insert(agg, install_except.next_iface[r])

    # router-owned prefixes (gateway RBNs)
    for node_id, names in topo.prefixes.items():
        if roles[node_id] is Role.ROUTER:
            for name in names:
                install(name, node_id)
    return fibs


def hop_counts(topo: Topology) -> dict[tuple[str, str], int]:
    """Links on the shortest path from each consumer to each producer."""
    out = {}
    consumers = [n.id for n in topo.by_role(Role.CONSUMER)]
    for p in topo.by_role(Role.PRODUCER):
        t = ShortestPathTree(topo, p.id)
        for c in consumers:
            out[(c, p.id)] = t.hops[c]
    return out
