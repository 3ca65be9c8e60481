"""Pending Interest Table and Content Store."""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from .wire import Message, Name

DEFAULT_PIT_LIFETIME = 4.0
DEFAULT_PIT_CAPACITY = 10_000
DEFAULT_CS_CAPACITY = 1_000


class FullPolicy(enum.Enum):
    DROP_NEW = "drop-new"
    EVICT_OLDEST = "evict-oldest"
    NACK_NEW = "nack-new"


class PitOutcome(enum.Enum):
    CREATED = "created"
    COLLAPSED = "collapsed"
    REJECTED = "rejected"


@dataclass
class PitEntry:
    name: Name
    downstream_ifaces: set[int]
    created_at: float
    lifetime: float

    @property
    def expires_at(self) -> float:
        return self.created_at + self.lifetime

    def expired(self, now: float) -> bool:
        return now > self.created_at + self.lifetime


@dataclass(frozen=True)
class PitInsert:
    """Result of :meth:`Pit.insert_or_collapse`.

    ``evicted`` is set when EVICT_OLDEST made room; ``policy`` tells the
    caller which full-table policy produced a REJECTED outcome.
    """

    outcome: PitOutcome
    evicted: Optional[PitEntry] = None
    policy: Optional[FullPolicy] = None


class Pit:
    """Bounded PIT.

    Entries are kept in creation order, so the first live entry is the
    oldest.  Callers must pass non-decreasing ``now`` values.
    """

    def __init__(self, capacity: int = DEFAULT_PIT_CAPACITY,
                 full_policy: FullPolicy = FullPolicy.DROP_NEW,
                 lifetime: float = DEFAULT_PIT_LIFETIME):
        if capacity < 1:
            raise ValueError("PIT capacity must be at least 1")
        self.capacity = capacity
        self.full_policy = full_policy
        self.lifetime = lifetime
        self.entries: dict[Name, PitEntry] = {}
        self.peak = 0  # highest occupancy seen

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: Name) -> bool:
        return name in self.entries

    def get(self, name: Name, now: float) -> Optional[PitEntry]:
        e = self.entries.get(name)
        if e is None or e.expired(now):
            return None
        return e

    def insert_or_collapse(self, name: Name, iface: int, now: float,
                           lifetime: Optional[float] = None) -> PitInsert:
        lifetime = self.lifetime if lifetime is None else lifetime
        e = self.entries.get(name)
        if e is not None:
            if not e.expired(now):
                e.downstream_ifaces.add(iface)
                return PitInsert(PitOutcome.COLLAPSED)
            del self.entries[name]

        evicted = None
        if len(self.entries) >= self.capacity:
            self.expire(now)
        if len(self.entries) >= self.capacity:
            if self.full_policy is FullPolicy.EVICT_OLDEST:
                oldest = next(iter(self.entries))
                evicted = self.entries.pop(oldest)
            else:
                return PitInsert(PitOutcome.REJECTED, policy=self.full_policy)

        self.entries[name] = PitEntry(name, {iface}, now, lifetime)
        self.peak = max(self.peak, len(self.entries))
        return PitInsert(PitOutcome.CREATED, evicted=evicted)

    def consume(self, name: Name, now: float) -> Optional[set[int]]:
        e = self.entries.pop(name, None)
        if e is None or e.expired(now):
            return None
        return e.downstream_ifaces

    def expire(self, now: float) -> int:
        dead = [n for n, e in self.entries.items() if e.expired(now)]
        for n in dead:
            del self.entries[n]
        return len(dead)


def pit_insert_or_collapse(pit: Pit, name: Name, iface: int, now: float,
                           lifetime: Optional[float] = None) -> PitInsert:
    return pit.insert_or_collapse(name, iface, now, lifetime)


def pit_consume(pit: Pit, name: Name, now: float) -> Optional[set[int]]:
    return pit.consume(name, now)


def pit_expire(pit: Pit, now: float) -> int:
    return pit.expire(now)


@dataclass
class CsEntry:
    name: Name
    content: Message
    inserted_at: float
    expiry: float


class Cs:
    """Exact-name content store with LRU eviction and per-entry expiry."""

    def __init__(self, capacity: int = DEFAULT_CS_CAPACITY):
        self.capacity = capacity
        self.entries: OrderedDict[Name, CsEntry] = OrderedDict()

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, name: Name, now: float) -> Optional[Message]:
        e = self.entries.get(name)
        if e is None:
            return None
        if now > e.expiry:
            del self.entries[name]
            return None
        self.entries.move_to_end(name)
        return e.content

    def insert(self, content: Message, now: float, hint: float) -> Optional[Name]:
        """Store ``content`` until ``now + hint``; return the evicted name, if any."""
        if not content.is_content:
            raise ValueError("only content objects can be cached")
        if self.capacity <= 0:
            return None
        name = content.name
        victim = None
        if name in self.entries:
            self.entries.move_to_end(name)
        elif len(self.entries) >= self.capacity:
            victim, _ = self.entries.popitem(last=False)
        self.entries[name] = CsEntry(name, content, now, now + hint)
        return victim


def cs_lookup(cs: Cs, name: Name, now: float) -> Optional[Message]:
    return cs.lookup(name, now)


def cs_insert(cs: Cs, content: Message, now: float, hint: float) -> Cs:
    cs.insert(content, now, hint)
    return cs
