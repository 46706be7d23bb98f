"""Steady-stream propagation of one slot's traffic through the network graph.

Traffic moves in synchronous waves.  At every node the bundles that arrive in
the same wave are pooled, the pooled rate is water-filled over the node's
preference list against whatever edge capacity earlier waves left over, and
each bundle is split pro rata.  Overflow is shaved off every bundle by the same
fraction.  A bundle ends when it reaches the internet node or is dropped.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .topology import Edge, TimeSlotGraph
from .traffic import BufferSpec

_REL_TOL = 1e-9


class DropReason(str, enum.Enum):
    CAPACITY = "capacity"
    LOOP = "loop"
    DEAD_END = "dead_end"
    TTL = "ttl"
    HOP_CAP = "hop_cap"


@dataclass(frozen=True)
class TtlConfig:
    t_max_s: float = 0.2
    hop_cap: int = 32

    def __post_init__(self):
        if self.t_max_s <= 0 or self.hop_cap < 1:
            raise ValueError("t_max_s and hop_cap must be positive")


@dataclass(frozen=True, slots=True)
class StreamBundle:
    origin: int
    path: tuple[int, ...]
    delay_s: float
    rate_bps: float


@dataclass
class SlotOutcome:
    """Ledger of one slot.

    ``delivered`` rows are ``(origin, rate_bps, delay_s, hops)`` where hops
    counts every traversed edge, the fiber hop included.  ``dropped`` rows are
    ``(origin, rate_bps, reason)``; their delay is ``t_max_s`` by definition.
    """
    generated: np.ndarray
    delivered: list = field(default_factory=list)
    dropped: list = field(default_factory=list)
    edge_load: np.ndarray | None = None
    t_max_s: float = 0.2

    @property
    def delivered_by_sat(self) -> np.ndarray:
        out = np.zeros(len(self.generated))
        for origin, rate, _, _ in self.delivered:
            out[origin] += rate
        return out

    @property
    def dropped_by_sat(self) -> np.ndarray:
        out = np.zeros(len(self.generated))
        for origin, rate, _ in self.dropped:
            out[origin] += rate
        return out

    def dropped_by_reason(self) -> dict[DropReason, float]:
        out = {r: 0.0 for r in DropReason}
        for _, rate, reason in self.dropped:
            out[reason] += rate
        return out


def water_fill(r_in_bps: float, capacities: Sequence[float], sigma: float = 1.0) -> tuple[list[float], float]:
    """Fill links in preference order up to ``sigma * capacity``.

    Returns the per-link allocation and the rate that did not fit anywhere.
    """
    alloc = [0.0] * len(capacities)
    remaining = r_in_bps
    for i, c in enumerate(capacities):
        if remaining <= 0:
            break
        usable = sigma * c
        if usable <= 0:
            continue
        if usable < remaining:
            alloc[i] = usable
            remaining -= usable
        else:
            alloc[i] = remaining
            remaining = 0.0
    return alloc, max(remaining, 0.0)


def queuing_delay(q_max_bits: float, allocation: Sequence[float], r_in_bps: float,
                  capacities: Sequence[float] | None = None, t_max_s: float = 0.2) -> float:
    """FIFO buffer delay: zero unless the node receives more than it can send.

    A congested node with no usable outgoing capacity is charged ``t_max_s``.
    """
    if capacities is None:
        out = sum(allocation)
    else:
        out = sum(min(x, c) for x, c in zip(allocation, capacities))
    excess = r_in_bps - out
    if excess <= _REL_TOL * max(r_in_bps, 1.0):
        return 0.0
    if out <= 0:
        return t_max_s
    return q_max_bits / out


def propagate_slot(graph: TimeSlotGraph, decisions: Mapping[int, Sequence[Edge]], generated: Sequence[float],
                   ttl: TtlConfig = TtlConfig(), buffers: BufferSpec = BufferSpec(),
                   sigma: float = 1.0) -> SlotOutcome:
    """Push every satellite's generated rate through the graph for one slot.

    ``decisions`` maps a node to its preference list.  Ground stations without
    an entry forward over their own outgoing (fiber) links.
    """
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    nodes = graph.nodes
    internet = nodes.internet
    n_sat = nodes.num_sats
    t_max = ttl.t_max_s
    hop_cap = ttl.hop_cap
    q_sat = buffers.satellite_buffer_bits
    q_gnd = buffers.ground_buffer_bits
    used = [0.0] * len(graph.edges)
    delivered: list = []
    dropped: list = []
    gen = np.asarray(generated, dtype=float)

    wave: dict[int, list] = {}
    for s in range(n_sat):
        r = float(gen[s])
        if r > 0:
            wave[s] = [(s, (s,), 0.0, r)]

    while wave:
        nxt: dict[int, list] = {}
        for v in sorted(wave):
            group = wave[v]
            try:
                prefs = decisions[v]
            except KeyError:
                prefs = graph.out_links[v] if nodes.is_ground(v) else ()
            if not prefs:
                dropped.extend((o, r, DropReason.DEAD_END) for o, _, _, r in group)
                continue
            r_in = 0.0
            for b in group:
                r_in += b[3]
            residual = [max(e.capacity_bps - used[e.index] / sigma, 0.0) for e in prefs]
            alloc, overflow = water_fill(r_in, residual, sigma)
            dq = queuing_delay(q_sat if v < n_sat else q_gnd, alloc, r_in, t_max_s=t_max)
            legs = []
            for e, x in zip(prefs, alloc):
                if x > 0:
                    used[e.index] += x
                    legs.append((e.dst, x / r_in, e.prop_delay_s + dq))
            over_frac = overflow / r_in
            for origin, path, delay, rate in group:
                if over_frac > 0:
                    dropped.append((origin, rate * over_frac, DropReason.CAPACITY))
                for w, share, extra in legs:
                    r = rate * share
                    d = delay + extra
                    if w in path:
                        dropped.append((origin, r, DropReason.LOOP))
                    elif d >= t_max:
                        dropped.append((origin, r, DropReason.TTL))
                    elif w == internet:
                        delivered.append((origin, r, d, len(path)))
                    elif len(path) >= hop_cap:
                        dropped.append((origin, r, DropReason.HOP_CAP))
                    else:
                        bucket = nxt.get(w)
                        item = (origin, path + (w,), d, r)
                        if bucket is None:
                            nxt[w] = [item]
                        else:
                            bucket.append(item)
        wave = nxt

    return SlotOutcome(gen, delivered, dropped, np.asarray(used), t_max)


def per_sat_costs(outcome: SlotOutcome) -> np.ndarray:
    """Rate-weighted path delay of each satellite's own traffic; drops count ``t_max``.

    Satellites that generated nothing get cost 0.
    """
    n = len(outcome.generated)
    num = np.zeros(n)
    den = np.zeros(n)
    for origin, rate, delay, _ in outcome.delivered:
        num[origin] += rate * delay
        den[origin] += rate
    for origin, rate, _ in outcome.dropped:
        num[origin] += rate * outcome.t_max_s
        den[origin] += rate
    cost = np.divide(num, den, out=np.zeros(n), where=den > 0)
    # a weighted mean of values in [0, t_max] may round one ulp past t_max
    return np.minimum(cost, outcome.t_max_s)


def per_sat_cost(outcome: SlotOutcome, v: int) -> float:
    return float(per_sat_costs(outcome)[v])


def network_cost(outcome: SlotOutcome, costs: np.ndarray | None = None) -> float:
    """Generation-weighted mean of the per-satellite costs."""
    gen = outcome.generated
    total = float(gen.sum())
    if total <= 0:
        return 0.0
    c = per_sat_costs(outcome) if costs is None else costs
    return min(float(np.dot(gen, c) / total), outcome.t_max_s)
