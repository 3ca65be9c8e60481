"""Run metrics and their CSV forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..forwarder import OpCounters

METRICS_HEADER = "run_id,node,metric,value"
RTT_HEADER = "hops,mean_rtt_s,stddev,count"
GOODPUT_HEADER = "run_id,mode,t_start,issued,delivered,dropped,nacked"


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def mean(xs) -> float:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else math.nan


def stddev(xs) -> float:
    xs = list(xs)
    if len(xs) < 2:
        return 0.0
    m = mean(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))


@dataclass(frozen=True)
class RttSample:
    consumer: str
    hops: int
    rtt: float
    issued_at: float
    recovered: bool = False


@dataclass
class Tally:
    issued: int = 0
    delivered: int = 0
    dropped: int = 0
    nacked: int = 0
    in_flight: int = 0

    @property
    def drop_rate(self) -> float:
        """Share of requests lost to drops or unrecoverable nacks."""
        return (self.dropped + self.nacked) / self.issued if self.issued else 0.0


@dataclass
class RunMetrics:
    run_id: str
    mode: str
    counters: dict[str, OpCounters]
    roles: dict[str, str]
    interest_ops: dict[str, int]
    content_ops: dict[str, int]
    rtt_samples: list[RttSample]
    issued: int = 0
    delivered: int = 0
    dropped: int = 0
    nacked_unrecovered: int = 0
    in_flight: int = 0
    lost: int = 0
    attack_issued: int = 0
    recovered: int = 0
    modeled_time: float = 0.0
    attack_window: Optional[tuple[float, float]] = None
    phases: dict[str, Tally] = field(default_factory=dict)
    goodput: list[tuple[float, Tally]] = field(default_factory=list)
    delivered_names: dict[str, list[str]] = field(default_factory=dict)
    pit_peak: dict[str, int] = field(default_factory=dict)

    # -- derived ---------------------------------------------------------

    @property
    def conserved(self) -> bool:
        return (self.lost == 0 and self.delivered + self.dropped + self.in_flight
                + self.nacked_unrecovered == self.issued)

    def routers(self) -> list[str]:
        return [n for n, r in self.roles.items() if r == "router"]

    def total(self) -> OpCounters:
        tot = OpCounters()
        for n in self.routers():
            tot = tot + self.counters[n]
        return tot

    @property
    def collapses(self) -> int:
        return self.total().collapses

    @property
    def nacks_sent(self) -> int:
        return self.total().nacks_sent

    @property
    def legit_drop_rate(self) -> float:
        """Drop rate of legitimate requests issued inside the attack window."""
        tally = self.phases.get("during")
        return tally.drop_rate if tally is not None else 0.0

    def ops_per_interest(self) -> float:
        tot = self.total()
        return sum(self.interest_ops[n] for n in self.routers()) / tot.interests

    def ops_per_content(self) -> float:
        tot = self.total()
        return sum(self.content_ops[n] for n in self.routers()) / tot.contents

    def ops_per_exchange(self) -> float:
        tot = sum(self.interest_ops[n] + self.content_ops[n] for n in self.routers())
        return tot / self.delivered

    def mean_rtt(self, recovered: Optional[bool] = None) -> float:
        return mean(s.rtt for s in self.rtt_samples
                    if recovered is None or s.recovered == recovered)

    def rtt_by_hops(self) -> list[tuple[int, float, float, int]]:
        groups: dict[int, list[float]] = {}
        for s in self.rtt_samples:
            groups.setdefault(s.hops, []).append(s.rtt)
        return [(h, mean(v), stddev(v), len(v)) for h, v in sorted(groups.items())]

    # -- CSV -------------------------------------------------------------

    def rows(self) -> list[tuple[str, str, str, str]]:
        out = []
        for node, c in self.counters.items():
            for k, v in c.as_dict().items():
                out.append((self.run_id, node, k, fmt(v)))
            out.append((self.run_id, node, "interest_ops", fmt(self.interest_ops[node])))
            out.append((self.run_id, node, "content_ops", fmt(self.content_ops[node])))
            if node in self.pit_peak:
                out.append((self.run_id, node, "pit_peak", fmt(self.pit_peak[node])))
        summary = [
            ("mode", self.mode),
            ("issued", self.issued),
            ("delivered", self.delivered),
            ("dropped", self.dropped),
            ("nacked_unrecovered", self.nacked_unrecovered),
            ("in_flight", self.in_flight),
            ("lost", self.lost),
            ("recovered", self.recovered),
            ("attack_issued", self.attack_issued),
            ("collapses", self.collapses),
            ("nacks_sent", self.nacks_sent),
            ("mean_rtt_s", self.mean_rtt() if self.rtt_samples else math.nan),
            ("modeled_time_s", self.modeled_time),
            ("conserved", int(self.conserved)),
        ]
        for phase, t in self.phases.items():
            summary += [(f"{phase}_issued", t.issued), (f"{phase}_delivered", t.delivered),
                        (f"{phase}_drop_rate", t.drop_rate)]
        for k, v in summary:
            out.append((self.run_id, "*", k, fmt(v)))
        return out

    def to_csv(self, header: bool = True) -> str:
        lines = [METRICS_HEADER] if header else []
        lines += [",".join(r) for r in self.rows()]
        return "\n".join(lines) + "\n"

    def rtt_csv(self) -> str:
        lines = [RTT_HEADER]
        lines += [f"{h},{fmt(m)},{fmt(s)},{n}" for h, m, s, n in self.rtt_by_hops()]
        return "\n".join(lines) + "\n"

    def goodput_csv(self, header: bool = True) -> str:
        lines = [GOODPUT_HEADER] if header else []
        for t, g in self.goodput:
            lines.append(f"{self.run_id},{self.mode},{fmt(t)},{g.issued},{g.delivered},"
                         f"{g.dropped},{g.nacked}")
        return "\n".join(lines) + "\n"
