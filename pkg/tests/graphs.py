"""Small hand-built slot graphs and brute-force path oracles shared by the tests."""
from __future__ import annotations

import numpy as np

from leosim.topology import Edge, LinkKind, NodeIds, TimeSlotGraph


def make_graph(num_sats: int, num_ground: int, links, slot: int = 0) -> TimeSlotGraph:
    """``links`` are ``(src, dst, kind, capacity_bps, delay_s[, distance_m])`` tuples; ``"I"`` is the internet."""
    nodes = NodeIds(num_sats, num_ground)
    edges, out = [], [[] for _ in range(len(nodes))]
    for item in links:
        src, dst, kind, cap, delay = item[:5]
        dist = item[5] if len(item) > 5 else delay * 299_792_458.0
        dst = nodes.internet if dst == "I" else dst
        e = Edge(len(edges), src, dst, kind, float(cap), float(delay), float(dist))
        edges.append(e)
        out[src].append(e)
    return TimeSlotGraph(slot, nodes, tuple(edges), tuple(tuple(o) for o in out))


def random_graph(rng: np.random.Generator, max_nodes: int = 8) -> TimeSlotGraph:
    """Random sat/ground/internet graph with at most ``max_nodes`` nodes and continuous weights."""
    num_ground = int(rng.integers(1, 3))
    num_sats = int(rng.integers(1, max_nodes - num_ground))
    n = num_sats + num_ground
    links = []
    for u in range(num_sats):
        for v in range(num_sats):
            if u != v and rng.random() < 0.4:
                links.append((u, v, LinkKind.ISL, 1e9, float(rng.uniform(1e-3, 20e-3))))
        for m in range(num_ground):
            if rng.random() < 0.35:
                links.append((u, num_sats + m, LinkKind.GSL, 1e8, float(rng.uniform(1e-3, 20e-3))))
    for m in range(num_ground):
        links.append((num_sats + m, "I", LinkKind.FIBER, 1e10, float(rng.uniform(1e-3, 5e-3))))
    assert n + 1 <= max_nodes
    return make_graph(num_sats, num_ground, links)


def all_paths(graph: TimeSlotGraph, src: int, weights) -> list[tuple[float, tuple[int, ...]]]:
    """Every loop-free path from ``src`` to the internet as ``(cost, edge indices)``, cheapest first."""
    target = graph.internet
    found = []

    def walk(v, visited, edges, cost):
        if v == target:
            found.append((cost, tuple(edges)))
            return
        for e in graph.out_links[v]:
            if e.dst not in visited:
                walk(e.dst, visited | {e.dst}, edges + [e.index], cost + weights[e.index])

    walk(src, {src}, [], 0.0)
    return sorted(found)
