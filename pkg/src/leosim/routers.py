"""Per-node routing interface and the baseline routers.

A router turns a node's local view into a preference list over its outgoing
edges; the flow engine water-fills traffic along that list.  Baselines:
bent-pipe, random, Dijkstra and k-shortest paths (Yen).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .topology import Edge, LinkKind, TimeSlotGraph


@dataclass(frozen=True, slots=True)
class LocalObservation:
    """What a node can see on its own: its links and its incoming rate."""
    node: int
    slot: int
    links: tuple[Edge, ...]
    incoming_bps: float = 0.0


class Router:
    """Base class; subclasses override :meth:`decide` and optionally
    :meth:`begin_slot`, :meth:`end_slot` and :meth:`feedback`."""

    name = "router"
    sigma = 1.0

    def begin_slot(self, graph: TimeSlotGraph, rng: np.random.Generator, weights: Sequence[float] | None = None):
        self.graph = graph
        self.rng = rng

    def decide(self, obs: LocalObservation) -> list[Edge]:
        raise NotImplementedError

    def end_slot(self, outcome) -> None:
        pass

    def feedback(self, node: int, cost: float, chosen: Sequence[Edge], obs: LocalObservation) -> None:
        """Cost observed at the end of the slot; baselines ignore it."""


def route_decide(router: Router, obs: LocalObservation) -> list[Edge]:
    return router.decide(obs)


def route_feedback(router: Router, node: int, cost: float, chosen: Sequence[Edge], obs: LocalObservation) -> None:
    router.feedback(node, cost, chosen, obs)


def bent_pipe_decide(obs: LocalObservation, rng: np.random.Generator) -> list[Edge]:
    gsls = [e for e in obs.links if e.kind == LinkKind.GSL]
    if len(gsls) < 2:
        return gsls
    return [gsls[i] for i in rng.permutation(len(gsls))]


def random_decide(obs: LocalObservation, rng: np.random.Generator) -> list[Edge]:
    links = list(obs.links)
    if len(links) < 2:
        return links
    return [links[i] for i in rng.permutation(len(links))]


class BentPipeRouter(Router):
    name = "bentpipe"

    def decide(self, obs):
        return bent_pipe_decide(obs, self.rng)


class RandomRouter(Router):
    name = "random"

    def decide(self, obs):
        return random_decide(obs, self.rng)


# -- shortest paths ---------------------------------------------------------

def _in_links(graph: TimeSlotGraph) -> list[list[Edge]]:
    inc: list[list[Edge]] = [[] for _ in range(len(graph.nodes))]
    for e in graph.edges:
        inc[e.dst].append(e)
    return inc


def distances_to(graph: TimeSlotGraph, weights: Sequence[float], target: int | None = None) -> list[float]:
    """Shortest-path delay from every node to ``target`` (default: internet)."""
    target = graph.internet if target is None else target
    inc = _in_links(graph)
    dist = [math.inf] * len(graph.nodes)
    dist[target] = 0.0
    heap = [(0.0, target)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in inc[v]:
            nd = weights[e.index] + d
            if nd < dist[e.src]:
                dist[e.src] = nd
                heapq.heappush(heap, (nd, e.src))
    return dist


def dijkstra_next_hop(graph: TimeSlotGraph, weights: Sequence[float],
                      dist: Sequence[float] | None = None) -> list[Edge | None]:
    """First edge of a minimum-delay path to the internet for every node.

    Ties go to the earlier edge in the node's out-link order.  Unreachable
    nodes (and the internet itself) get ``None``.
    """
    dist = distances_to(graph, weights) if dist is None else dist
    hops: list[Edge | None] = [None] * len(graph.nodes)
    for v, links in enumerate(graph.out_links):
        best, best_d = None, math.inf
        for e in links:
            d = weights[e.index] + dist[e.dst]
            if d < best_d:
                best, best_d = e, d
        hops[v] = best
    return hops


def path_cost(edges: Sequence[Edge], weights: Sequence[float]) -> float:
    # accumulate from the far end, matching how distances_to builds its sums
    acc = 0.0
    for e in reversed(edges):
        acc = weights[e.index] + acc
    return acc


@dataclass(frozen=True)
class Path:
    cost: float
    edges: tuple[Edge, ...]

    @property
    def nodes(self) -> tuple[int, ...]:
        return (self.edges[0].src,) + tuple(e.dst for e in self.edges) if self.edges else ()

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(e.index for e in self.edges)


def _astar(graph: TimeSlotGraph, src: int, target: int, weights, h, banned_nodes, banned_edges):
    out = graph.out_links
    g = {src: 0.0}
    parent: dict[int, Edge] = {}
    heap = [(h[src], 0.0, src)]
    closed = set()
    while heap:
        _, gv, v = heapq.heappop(heap)
        if v in closed:
            continue
        if v == target:
            edges = []
            while v != src:
                e = parent[v]
                edges.append(e)
                v = e.src
            return tuple(reversed(edges))
        closed.add(v)
        for e in out[v]:
            w = e.dst
            if w in closed or w in banned_nodes or e.index in banned_edges or h[w] == math.inf:
                continue
            ng = gv + weights[e.index]
            if ng < g.get(w, math.inf):
                g[w] = ng
                parent[w] = e
                heapq.heappush(heap, (ng + h[w], ng, w))
    return None


def _greedy_path(graph: TimeSlotGraph, src: int, target: int, weights, dist) -> tuple[Edge, ...]:
    # same tie rule as dijkstra_next_hop, so k=1 reproduces the Dijkstra route
    edges = []
    v = src
    while v != target:
        best, best_d = None, math.inf
        for e in graph.out_links[v]:
            d = weights[e.index] + dist[e.dst]
            if d < best_d:
                best, best_d = e, d
        edges.append(best)
        v = best.dst
    return tuple(edges)


def yen_k_shortest(graph: TimeSlotGraph, src: int, k: int, weights: Sequence[float],
                   dist: Sequence[float] | None = None) -> list[Path]:
    """Up to ``k`` loop-free minimum-delay paths from ``src`` to the internet, shortest first."""
    if k < 1:
        raise ValueError("k must be at least 1")
    target = graph.internet
    dist = distances_to(graph, weights) if dist is None else dist
    if src == target or dist[src] == math.inf:
        return []
    first = _greedy_path(graph, src, target, weights, dist)
    found = [Path(path_cost(first, weights), first)]
    seen = {found[0].key}
    candidates: list[tuple[float, tuple[int, ...], Path]] = []
    while len(found) < k:
        prev = found[-1].edges
        for i in range(len(prev)):
            root = prev[:i]
            spur = prev[i].src
            banned_edges = {p.edges[i].index for p in found if len(p.edges) > i and p.edges[:i] == root}
            banned_nodes = {e.src for e in root}
            tail = _astar(graph, spur, target, weights, dist, banned_nodes, banned_edges)
            if tail is None:
                continue
            edges = root + tail
            cand = Path(path_cost(edges, weights), edges)
            if cand.key not in seen:
                seen.add(cand.key)
                heapq.heappush(candidates, (cand.cost, cand.key, cand))
        if not candidates:
            break
        found.append(heapq.heappop(candidates)[2])
    return found


def distinct_first_hops(paths: Sequence[Path]) -> list[Edge]:
    out: list[Edge] = []
    seen = set()
    for p in paths:
        if p.edges and p.edges[0].index not in seen:
            seen.add(p.edges[0].index)
            out.append(p.edges[0])
    return out


class DijkstraRouter(Router):
    """Single shortest-delay path; capacity is ignored on purpose."""
    name = "dijkstra"

    def begin_slot(self, graph, rng, weights=None):
        super().begin_slot(graph, rng, weights)
        w = weights if weights is not None else [e.prop_delay_s for e in graph.edges]
        self.next_hop = dijkstra_next_hop(graph, w)

    def decide(self, obs):
        e = self.next_hop[obs.node]
        return [] if e is None else [e]


class KShortestRouter(Router):
    """Distinct first hops of the ``k`` shortest loop-free paths, in path order."""
    name = "ksp"

    def __init__(self, k: int = 4):
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = k

    def begin_slot(self, graph, rng, weights=None):
        super().begin_slot(graph, rng, weights)
        self.weights = weights if weights is not None else [e.prop_delay_s for e in graph.edges]
        self.dist = distances_to(graph, self.weights)

    def decide(self, obs):
        return distinct_first_hops(yen_k_shortest(self.graph, obs.node, self.k, self.weights, self.dist))
