"""Interest-collapsing probability at the consumer-facing router.

Closed forms for Poisson request arrivals, the collapse window derived from
link propagation delays, Zipf class rates, and a sampling oracle to check
the closed forms against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 3e8  # m/s
DEFAULT_BASE_RATE = 40.0  # interests/s for class 1; fitted, see README
# per-class cache-hit profile under which class 2 has the highest collapse probability
EDGE_HIT_PROFILE = (0.8, 0.5, 0.3, 0.1)


@dataclass(frozen=True)
class CollapseParams:
    lam: float
    delta: float
    sigma: float = 1.0
    p_hit: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("arrival rate must be >= 0")
        if self.sigma < 1:
            raise ValueError("segments per content must be >= 1")
        if self.delta < 0:
            raise ValueError("collapse window must be >= 0")
        if not 0.0 <= self.p_hit <= 1.0:
            raise ValueError("cache-hit probability must be in [0, 1]")


@dataclass(frozen=True)
class Link:
    length_m: float
    alpha: float = 0.7

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("link length must be > 0")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("medium factor alpha must be in (0, 1]")

    @property
    def delay(self) -> float:
        return self.length_m / (self.alpha * SPEED_OF_LIGHT)


@dataclass(frozen=True)
class PathSpec:
    """Links from the consumer-facing router to the producer."""

    links: tuple[Link, ...]
    per_hop_hit: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        links = tuple(l if isinstance(l, Link) else Link(*l) for l in self.links)
        object.__setattr__(self, "links", links)
        if self.per_hop_hit is not None:
            hits = tuple(float(p) for p in self.per_hop_hit)
            if len(hits) != len(links):
                raise ValueError("need one hit probability per link")
            if any(not 0.0 <= p <= 1.0 for p in hits):
                raise ValueError("hit probabilities must be in [0, 1]")
            object.__setattr__(self, "per_hop_hit", hits)


@dataclass(frozen=True)
class ZipfClasses:
    K: int
    lambda_1: float = DEFAULT_BASE_RATE


def _miss_window(lam: float, delta: float) -> float:
    # 1 - e^{-lam*delta} without cancellation for tiny products
    return -math.expm1(-lam * delta)


def collapse_prob_general(p: CollapseParams) -> float:
    """Collapse probability for content split into ``sigma`` segments (no caching)."""
    if p.delta == 0 or p.lam == 0:
        return 0.0
    q = math.exp(-p.delta * p.lam)
    num = _miss_window(p.lam, p.delta)
    return num / (num + q / p.sigma)


def collapse_prob_single(p: CollapseParams) -> float:
    """Single-segment collapse probability, scaled by the cache-miss probability."""
    return (1.0 - p.p_hit) * _miss_window(p.lam, p.delta)


def collapse_prob(p: CollapseParams) -> float:
    """Segment-aware probability with caching: ``(1 - p_hit)`` times the general form."""
    return (1.0 - p.p_hit) * collapse_prob_general(p)


def delta_from_path(path: PathSpec) -> float:
    if path.per_hop_hit is None:
        return 2.0 * sum(l.length_m / (l.alpha * SPEED_OF_LIGHT) for l in path.links)
    return 2.0 * sum(l.delay * (1.0 - h) for l, h in zip(path.links, path.per_hop_hit))


def collapse_prob_theorem(lam: float, p_hit: float, path: PathSpec) -> float:
    """Closed form in terms of link lengths, edge caching only.

    The product of ``e^{-l_i/alpha_i}`` underflows for any real link, so it
    is carried as a sum of exponents and raised to ``2*lam/c`` in log space.
    """
    if path.per_hop_hit is not None and any(path.per_hop_hit):
        raise ValueError("interior caching is not covered by this form")
    if not 0.0 <= p_hit <= 1.0:
        raise ValueError("cache-hit probability must be in [0, 1]")
    log_product = -sum(l.length_m / l.alpha for l in path.links)
    return (1.0 - p_hit) * -math.expm1(log_product * (2.0 * lam / SPEED_OF_LIGHT))


def zipf_rates(z: ZipfClasses) -> list[float]:
    if z.K < 1:
        raise ValueError("need at least one class")
    # exact: halving only touches the exponent
    return [math.ldexp(z.lambda_1, -k) for k in range(z.K)]


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int

    def within(self, expected: float, k: float = 3.0) -> bool:
        return abs(self.value - expected) <= k * self.stderr


def monte_carlo_collapse(p: CollapseParams, trials: int, seed: int = 0) -> Estimate:
    """Sample arrivals and report the fraction that collapse.

    Each trial is one arrival at the router.  It first misses the cache
    with probability ``1 - p_hit`` (a hit never collapses).  Its
    predecessors in the Poisson stream are then scanned back one
    exponential gap at a time: a gap shorter than the window collapses the
    arrival; a longer gap to a predecessor for the same segment ends the
    scan without collapse; a longer gap to a different segment moves the
    scan one arrival further back.  With one segment this is simply "some
    earlier arrival fell inside the window".
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    miss = rng.random(trials) >= p.p_hit
    if p.delta == 0 or p.lam == 0:
        return Estimate(0.0, 0.0, trials)

    collapsed = np.zeros(trials, dtype=bool)
    active = np.flatnonzero(miss)
    segments = max(1, int(round(p.sigma)))
    while active.size:
        gaps = rng.exponential(1.0 / p.lam, active.size)
        hit = gaps < p.delta
        collapsed[active[hit]] = True
        rest = active[~hit]
        if segments == 1:
            break
        other_segment = rng.integers(0, segments, rest.size) != 0
        active = rest[other_segment]

    value = float(collapsed.mean())
    stderr = math.sqrt(max(value * (1.0 - value), 0.0) / trials)
    return Estimate(value, stderr, trials)


def model_curves(lambda_1: float = DEFAULT_BASE_RATE, K: int = 4,
                 delays: Sequence[float] = (), hit_rates: Optional[Sequence[float]] = None,
                 sigma: float = 1.0) -> list[tuple[float, int, float]]:
    """(delay_s, class, probability) rows for every class over ``delays``."""
    rates = zipf_rates(ZipfClasses(K, lambda_1))
    hits = list(hit_rates) if hit_rates is not None else [0.0] * K
    if len(hits) != K:
        raise ValueError(f"need {K} hit rates, got {len(hits)}")
    rows = []
    for d in delays:
        for k, (lam, h) in enumerate(zip(rates, hits), 1):
            rows.append((d, k, collapse_prob(CollapseParams(lam, d, sigma, h))))
    return rows
