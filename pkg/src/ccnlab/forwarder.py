"""Per-node packet processing: stateful, stateless and hybrid routers,
plus the consumer and producer endpoints that drive them.

Every ``process_*`` call returns a :class:`ForwardAction` listing packets
to send; nodes never schedule anything themselves.
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .nametree import Fib, Strategy, best_route
from .tables import (
    Cs,
    FullPolicy,
    Pit,
    PitOutcome,
    DEFAULT_CS_CAPACITY,
    DEFAULT_PIT_CAPACITY,
    DEFAULT_PIT_LIFETIME,
)
from .wire import Message, MsgType, Name, NackReason

DEFAULT_CACHE_HINT = 1.0
DEFAULT_GATEWAY_BUFFER = 1024


class MissingSupportingName(ValueError):
    pass


class UnmatchableNack(LookupError):
    pass


class ForwarderMode(enum.Enum):
    STATEFUL = "stateful"
    STATELESS = "stateless"
    HYBRID = "hybrid"


@dataclass
class OpCounters:
    cs_lookups: int = 0
    cs_inserts: int = 0
    pit_lookups: int = 0
    pit_inserts: int = 0
    pit_deletes: int = 0
    fib_lookups: int = 0
    nacks_sent: int = 0
    # packet tallies, not table operations
    interests: int = 0
    contents: int = 0
    nacks: int = 0
    collapses: int = 0
    pit_evictions: int = 0
    drops: int = 0

    TABLE_OPS = ("cs_lookups", "cs_inserts", "pit_lookups", "pit_inserts",
                 "pit_deletes", "fib_lookups")

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def table_ops(self) -> int:
        return sum(getattr(self, k) for k in self.TABLE_OPS)

    def __add__(self, other: OpCounters) -> OpCounters:
        return OpCounters(**{k: v + getattr(other, k) for k, v in self.as_dict().items()})

    def __sub__(self, other: OpCounters) -> OpCounters:
        return OpCounters(**{k: v - getattr(other, k) for k, v in self.as_dict().items()})

    def copy(self) -> OpCounters:
        return replace(self)


@dataclass
class ForwardAction:
    sends: list[tuple[Message, int]] = field(default_factory=list)
    deliver: Optional[Message] = None
    drop: Optional[str] = None

    def send(self, msg: Message, iface: int) -> ForwardAction:
        self.sends.append((msg, iface))
        return self


def make_interest(name: Name, rbn: Optional[Name] = None) -> Message:
    return Message(MsgType.INTEREST, name, supporting_name=rbn)


def make_content(interest: Message, payload: bytes = b"", **validation) -> Message:
    """Answer ``interest`` in its own flavour: N and SN are echoed as-is."""
    return Message(MsgType.CONTENT, interest.name, interest.supporting_name,
                   payload=payload, **validation)


def make_nack(packet: Message, reason: NackReason) -> Message:
    return Message(MsgType.NACK, packet.name, packet.supporting_name, nack_reason=reason)


def _answer_from_cache(cached: Message, interest: Message) -> Message:
    if cached.supporting_name == interest.supporting_name:
        return cached
    return replace(cached, supporting_name=interest.supporting_name)


def verify_content(content: Message) -> bool:
    """Router-side content verification hook; routers are not required to verify."""
    return True


class Router:
    def __init__(self, node_id, mode: ForwarderMode, fib: Optional[Fib] = None, *,
                 cs: Optional[Cs] = None, pit: Optional[Pit] = None,
                 caching: bool = False, cache_hint: float = DEFAULT_CACHE_HINT,
                 gateway_rbn: Optional[Name] = None,
                 gateway_buffer: int = DEFAULT_GATEWAY_BUFFER,
                 strategy: Strategy = best_route,
                 ifaces: Optional[set[int]] = None):
        self.id = node_id
        self.mode = ForwarderMode(mode)
        self.fib = fib if fib is not None else Fib()
        self.cs = cs if cs is not None else Cs(DEFAULT_CS_CAPACITY)
        if self.mode is ForwarderMode.STATELESS:
            if pit is not None:
                raise ValueError("stateless routers keep no PIT")
        elif pit is None:
            policy = (FullPolicy.NACK_NEW if self.mode is ForwarderMode.HYBRID
                      else FullPolicy.DROP_NEW)
            pit = Pit(DEFAULT_PIT_CAPACITY, policy, DEFAULT_PIT_LIFETIME)
        elif self.mode is ForwarderMode.HYBRID:
            pit.full_policy = FullPolicy.NACK_NEW
        self.pit = pit
        self.caching = caching
        self.cache_hint = cache_hint
        self.gateway_rbn = gateway_rbn
        self._recent: OrderedDict[Name, Message] = OrderedDict()
        self.gateway_buffer = gateway_buffer
        self.strategy = strategy
        self.ifaces = ifaces
        self.counters = OpCounters()

    def __repr__(self):
        return f"Router({self.id!r}, {self.mode.value})"

    # -- helpers ---------------------------------------------------------

    def _route(self, name: Name) -> Optional[int]:
        self.counters.fib_lookups += 1
        hop = self.fib.lookup(name)
        return self.strategy(name, [] if hop is None else [hop])

    def _send(self, action: ForwardAction, msg: Message, iface: int) -> None:
        if self.ifaces is not None and iface not in self.ifaces:
            raise ValueError(f"router {self.id!r} has no interface {iface}")
        action.send(msg, iface)

    def _drop(self, action: ForwardAction, reason: str) -> ForwardAction:
        self.counters.drops += 1
        action.drop = reason
        return action

    def _nack(self, action: ForwardAction, packet: Message, reason: NackReason,
              iface: int) -> ForwardAction:
        self.counters.nacks_sent += 1
        self._send(action, make_nack(packet, reason), iface)
        return action

    def _cache(self, content: Message, now: float) -> None:
        if self.caching and verify_content(content):
            self.counters.cs_inserts += 1
            self.cs.insert(content, now, self.cache_hint)

    def _remember(self, interest: Message) -> None:
        if self.gateway_rbn is None or interest.supporting_name is not None:
            return
        self._recent[interest.name] = interest
        self._recent.move_to_end(interest.name)
        while len(self._recent) > self.gateway_buffer:
            self._recent.popitem(last=False)

    def _forward_upstream(self, action: ForwardAction, interest: Message) -> ForwardAction:
        out = self._route(interest.name)
        if out is None:
            return self._drop(action, "no-route")
        self._remember(interest)
        self._send(action, interest, out)
        return action

    # -- interests -------------------------------------------------------

    def process_interest(self, interest: Message, arrival: int, now: float) -> ForwardAction:
        if not interest.is_interest:
            raise ValueError(f"expected an interest, got {interest.msg_type.name}")
        self.counters.interests += 1
        action = ForwardAction()

        self.counters.cs_lookups += 1
        cached = self.cs.lookup(interest.name, now)
        if cached is not None:
            self._send(action, _answer_from_cache(cached, interest), arrival)
            return action

        if self.mode is ForwarderMode.STATELESS:
            if interest.supporting_name is None:
                return self._nack(action, interest, NackReason.NO_SUPPORTING_NAME, arrival)
            return self._forward_upstream(action, interest)

        self.counters.pit_inserts += 1
        res = self.pit.insert_or_collapse(interest.name, arrival, now)
        if res.evicted is not None:
            self.counters.pit_evictions += 1
        if res.outcome is PitOutcome.COLLAPSED:
            self.counters.collapses += 1
            return action
        if res.outcome is PitOutcome.CREATED:
            self._forward_upstream(action, interest)
            if action.drop is not None:
                self.pit.entries.pop(interest.name, None)
                self.counters.pit_deletes += 1
            return action

        # table full
        if self.mode is ForwarderMode.HYBRID and interest.supporting_name is not None:
            return self._forward_upstream(action, interest)
        if res.policy is FullPolicy.NACK_NEW:
            return self._nack(action, interest, NackReason.PIT_FULL, arrival)
        return self._drop(action, "pit-full")

    # -- content ---------------------------------------------------------

    def process_content(self, content: Message, arrival: int, now: float) -> ForwardAction:
        if not content.is_content:
            raise ValueError(f"expected content, got {content.msg_type.name}")
        self.counters.contents += 1
        action = ForwardAction()

        if self.mode is ForwarderMode.STATELESS:
            if content.supporting_name is None:
                raise MissingSupportingName(
                    f"stateless router {self.id!r} got content {content.name} without SN")
            self._cache(content, now)
            return self._forward_by_sn(action, content)

        self.counters.pit_lookups += 1
        downstream = self.pit.consume(content.name, now)
        if downstream is None:
            if self.mode is ForwarderMode.HYBRID and content.supporting_name is not None:
                self._cache(content, now)
                return self._forward_by_sn(action, content)
            return self._drop(action, "unsolicited")
        self.counters.pit_deletes += 1
        self._cache(content, now)
        for iface in sorted(downstream):
            self._send(action, content, iface)
        return action

    def _forward_by_sn(self, action: ForwardAction, packet: Message) -> ForwardAction:
        out = self._route(packet.supporting_name)
        if out is None:
            return self._drop(action, "no-route")
        self._send(action, packet, out)
        return action

    # -- nacks -----------------------------------------------------------

    def process_nack(self, nack: Message, arrival: int, now: float) -> ForwardAction:
        if not nack.is_nack:
            raise ValueError(f"expected a nack, got {nack.msg_type.name}")
        self.counters.nacks += 1
        action = ForwardAction()

        if (self.gateway_rbn is not None
                and nack.nack_reason is NackReason.NO_SUPPORTING_NAME
                and nack.name in self._recent):
            original = self._recent.pop(nack.name)
            out = self._route(original.name)
            if out is None:
                return self._drop(action, "no-route")
            self._send(action, make_interest(original.name, self.gateway_rbn), out)
            return action

        if self.pit is not None:
            self.counters.pit_lookups += 1
            downstream = self.pit.consume(nack.name, now)
            if downstream is not None:
                self.counters.pit_deletes += 1
                for iface in sorted(downstream):
                    self._send(action, nack, iface)
                return action

        if nack.supporting_name is not None and self.mode is not ForwarderMode.STATEFUL:
            return self._forward_by_sn(action, nack)
        self.counters.drops += 1
        raise UnmatchableNack(f"router {self.id!r} has no context for nack on {nack.name}")


@dataclass
class Request:
    """One consumer request; survives re-issues after a nack."""

    consumer: object
    name: Name
    issued_at: float
    attack: bool = False
    target: object = None
    nacked: bool = False
    reissued: bool = False
    gave_up: bool = False
    delivered_at: Optional[float] = None

    @property
    def rtt(self) -> Optional[float]:
        return None if self.delivered_at is None else self.delivered_at - self.issued_at


class Consumer:
    """Request issuer.

    In stateless mode every interest carries the consumer's RBN.  Otherwise
    interests go out stateful-style and the RBN is only attached when a
    nack forces a stateless re-issue.
    """

    iface = 0

    def __init__(self, node_id, mode: ForwarderMode, rbn: Optional[Name] = None):
        self.id = node_id
        self.mode = ForwarderMode(mode)
        self.rbn = rbn
        self.pending: dict[Name, list[Request]] = {}
        self.requests: list[Request] = []

    def __repr__(self):
        return f"Consumer({self.id!r})"

    def issue(self, name: Name, now: float, attack: bool = False,
              target=None) -> tuple[Request, ForwardAction]:
        req = Request(self.id, name, now, attack=attack, target=target)
        self.requests.append(req)
        if not attack:
            self.pending.setdefault(name, []).append(req)
        rbn = self.rbn if self.mode is ForwarderMode.STATELESS else None
        return req, ForwardAction().send(make_interest(name, rbn), self.iface)

    def process_content(self, content: Message, arrival: int, now: float) -> list[Request]:
        done = self.pending.pop(content.name, [])
        for req in done:
            req.delivered_at = now
        return done

    def process_nack(self, nack: Message, arrival: int, now: float) -> ForwardAction:
        reqs = self.pending.get(nack.name)
        if not reqs:
            raise UnmatchableNack(f"consumer {self.id!r} has no request for {nack.name}")
        for req in reqs:
            req.nacked = True
        if self.rbn is None or nack.supporting_name is not None:
            # already stateless, or nothing to attach: nothing left to try
            for req in self.pending.pop(nack.name):
                req.gave_up = True
            return ForwardAction(drop="nack-unrecovered")
        for req in reqs:
            req.reissued = True
        return ForwardAction().send(make_interest(nack.name, self.rbn), self.iface)


class Producer:
    """Answers interests for names under its catalog prefix and ignores the rest."""

    iface = 0

    def __init__(self, node_id, prefixes: list[Name], catalog: Optional[Name] = None,
                 payload_size: int = 1024):
        self.id = node_id
        self.prefixes = list(prefixes)
        self.catalog = catalog
        self.payload = bytes(payload_size)
        self.served = 0
        self.ignored = 0

    def __repr__(self):
        return f"Producer({self.id!r})"

    def serves(self, name: Name) -> bool:
        if self.catalog is not None:
            return self.catalog.is_prefix_of(name)
        return any(p.is_prefix_of(name) for p in self.prefixes)

    def process_interest(self, interest: Message, arrival: int, now: float) -> ForwardAction:
        if not self.serves(interest.name):
            self.ignored += 1
            return ForwardAction(drop="no-content")
        self.served += 1
        return ForwardAction().send(make_content(interest, self.payload), arrival)


def process_interest(node, interest: Message, arrival: int, now: float) -> ForwardAction:
    return node.process_interest(interest, arrival, now)


def process_content(node, content: Message, arrival: int, now: float):
    return node.process_content(content, arrival, now)


def process_nack(node, nack: Message, arrival: int, now: float) -> ForwardAction:
    return node.process_nack(nack, arrival, now)
