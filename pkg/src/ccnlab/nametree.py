"""Longest-prefix-match FIB over names and consumer-prefix aggregation."""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, Optional, Sequence

from .wire import Name, parse_lci, format_lci


class FibFull(Exception):
    pass


class _Node:
    __slots__ = ("children", "iface")

    def __init__(self):
        self.children: dict[bytes, _Node] = {}
        self.iface: Optional[int] = None


class Fib:
    """Name-prefix to next-hop interface table, stored as a component trie."""

    def __init__(self, capacity: Optional[int] = None):
        self.capacity = capacity
        self._root = _Node()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def insert(self, prefix: Name, iface: int) -> None:
        node = self._root
        for c in prefix.components:
            nxt = node.children.get(c)
            if nxt is None:
                nxt = node.children[c] = _Node()
            node = nxt
        if node.iface is None:
            if self.capacity is not None and self._size >= self.capacity:
                self._prune(prefix)
                raise FibFull(f"FIB holds {self._size} entries (capacity {self.capacity})")
            self._size += 1
        node.iface = iface

    def _prune(self, prefix: Name) -> None:
        # drop trie nodes created by a rejected insert
        path = [self._root]
        for c in prefix.components:
            path.append(path[-1].children[c])
        for depth in range(len(prefix), 0, -1):
            node = path[depth]
            if node.children or node.iface is not None:
                break
            del path[depth - 1].children[prefix.components[depth - 1]]

    def lookup(self, name: Name) -> Optional[int]:
        node = self._root
        best = node.iface
        for c in name.components:
            node = node.children.get(c)
            if node is None:
                break
            if node.iface is not None:
                best = node.iface
        return best

    def lookup_prefix(self, name: Name) -> Optional[tuple[Name, int]]:
        """Like :meth:`lookup` but also return the matching prefix."""
        node = self._root
        best = (0, node.iface) if node.iface is not None else None
        for depth, c in enumerate(name.components, 1):
            node = node.children.get(c)
            if node is None:
                break
            if node.iface is not None:
                best = (depth, node.iface)
        if best is None:
            return None
        return name.prefix(best[0]), best[1]

    def get(self, prefix: Name) -> Optional[int]:
        """Exact-match read; no prefix semantics."""
        node = self._root
        for c in prefix.components:
            node = node.children.get(c)
            if node is None:
                return None
        return node.iface

    def items(self) -> Iterator[tuple[Name, int]]:
        stack = [((), self._root)]
        while stack:
            comps, node = stack.pop()
            if node.iface is not None:
                yield Name(comps), node.iface
            for c in sorted(node.children, reverse=True):
                stack.append((comps + (c,), node.children[c]))

    def dump(self) -> str:
        return "".join(f"{format_lci(p)} {i}\n" for p, i in self.items())

    @classmethod
    def load(cls, text: str, capacity: Optional[int] = None) -> Fib:
        fib = cls(capacity)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<lci-prefix> <iface-id>'")
            fib.insert(parse_lci(parts[0]), int(parts[1]))
        return fib


def fib_insert(fib: Fib, prefix: Name, iface: int) -> Fib:
    fib.insert(prefix, iface)
    return fib


def fib_lookup(fib: Fib, name: Name) -> Optional[int]:
    return fib.lookup(name)


def aggregate_prefixes(names: Sequence[Name]) -> Name:
    """Longest common prefix of ``names``: what an access router announces."""
    if not names:
        raise ValueError("cannot aggregate an empty set of names")
    first = names[0].components
    n = len(first)
    for other in names[1:]:
        oc = other.components
        n = min(n, len(oc))
        for i in range(n):
            if oc[i] != first[i]:
                n = i
                break
    return Name(first[:n])


# (name, candidate next hops) -> chosen next hop
Strategy = Callable[[Name, Sequence[int]], Optional[int]]


def best_route(name: Name, candidates: Iterable[int]) -> Optional[int]:
    for iface in candidates:
        return iface
    return None
