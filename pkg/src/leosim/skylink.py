"""Distributed contextual-bandit link ranking (SkyLink) and its non-contextual variant.

Every satellite keeps, per neighbor, per overlapping partition and per
distance tile, a running mean of the cost it observed while that neighbor
was its top preference.  Links are ranked by a lower-confidence score
(mean minus exploration bonus) averaged over the partitions; lower is better.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .routers import LocalObservation, Router
from .topology import Edge, LinkKind


@dataclass(frozen=True)
class TileCodingConfig:
    tile_width_m: float = 500e3
    num_partitions: int = 2
    max_distance_m: float = 6000e3

    def __post_init__(self):
        if not self.tile_width_m > 0:
            raise ValueError("tile width must be positive")
        if self.num_partitions < 1:
            raise ValueError("need at least one partition")
        if not self.max_distance_m > 0:
            raise ValueError("max distance must be positive")


# One tile spanning every distance.
SINGLE_TILE = TileCodingConfig(tile_width_m=math.inf, num_partitions=1)


def tile_indices(d_m: float, cfg: TileCodingConfig) -> tuple[int, ...]:
    """Tile hit by distance ``d_m`` in each partition; partition g is shifted by g*width/|G|."""
    if d_m < 0:
        raise ValueError("distance must be non-negative")
    w = cfg.tile_width_m
    if math.isinf(w):
        return (0,) * cfg.num_partitions
    d = min(d_m, cfg.max_distance_m)
    n = cfg.num_partitions
    return tuple(int(math.floor((d + g * w / n) / w)) for g in range(n))


@dataclass
class BanditState:
    """Statistics of one satellite, keyed by ``(neighbor, partition, tile)``."""
    stats: dict[tuple[int, int, int], list] = field(default_factory=dict)
    t: int = 0

    def mean(self, neighbor: int, g: int, tile: int) -> float | None:
        s = self.stats.get((neighbor, g, tile))
        return None if s is None or s[1] == 0 else s[0]

    def count(self, neighbor: int, g: int, tile: int) -> int:
        s = self.stats.get((neighbor, g, tile))
        return 0 if s is None else s[1]

    def to_dict(self, label: Callable[[int], str] = str) -> dict:
        arms: dict = {}
        for (nbr, g, tile), (mean, count) in sorted(self.stats.items()):
            arms.setdefault(label(nbr), {}).setdefault(str(g), {})[str(tile)] = {"mean_s": mean, "count": count}
        return {"t": self.t, "arms": arms}

    @classmethod
    def from_dict(cls, data: dict, parse: Callable[[str], int] = int) -> "BanditState":
        state = cls(t=int(data.get("t", 0)))
        for nbr, parts in data.get("arms", {}).items():
            for g, tiles in parts.items():
                for tile, rec in tiles.items():
                    count = int(rec["count"])
                    if count < 0:
                        raise ValueError("negative visit count")
                    state.stats[(parse(nbr), int(g), int(tile))] = [float(rec["mean_s"]), count]
        return state


def ucb_score(state: BanditState, neighbor: int, d_m: float, t: int, cfg: TileCodingConfig,
              exploration_unit_s: float = 1.0) -> float:
    """Partition-averaged ``mean - unit * sqrt(2 ln t / n)``; ``-inf`` while any tile is unvisited.

    ``exploration_unit_s`` is the cost unit in which the bonus is expressed:
    1.0 evaluates the bonus on costs in seconds, 1e-3 on costs in milliseconds.
    """
    if t < 1:
        raise ValueError("t starts at 1")
    log_t = 2.0 * math.log(t)
    total = 0.0
    tiles = tile_indices(d_m, cfg)
    for g, tile in enumerate(tiles):
        s = state.stats.get((neighbor, g, tile))
        if s is None or s[1] == 0:
            return -math.inf
        total += s[0] - exploration_unit_s * math.sqrt(log_t / s[1])
    return total / len(tiles)


def _tie_key(e: Edge) -> tuple[int, int]:
    return (0 if e.kind == LinkKind.GSL else 1, e.dst)


def rank_links(state: BanditState, obs: LocalObservation, cfg: TileCodingConfig,
               exploration_unit_s: float = 1.0, t: int | None = None) -> list[Edge]:
    """Outgoing links sorted by ascending score; ties prefer GSLs, then lower neighbor id."""
    t = state.t if t is None else t
    scored = [(ucb_score(state, e.dst, e.distance_m, t, cfg, exploration_unit_s), _tie_key(e), e) for e in obs.links]
    scored.sort(key=lambda x: (x[0], x[1]))
    return [e for _, _, e in scored]


def bandit_update(state: BanditState, top_link: Edge, cost: float, d_m: float, cfg: TileCodingConfig,
                  t_max_s: float = 0.2) -> None:
    """Fold one observed cost into the running mean of every tile the top link's context hits."""
    if not -1e-12 <= cost <= t_max_s * (1 + 1e-12):
        raise ValueError(f"cost {cost} outside [0, {t_max_s}]")
    cost = min(max(cost, 0.0), t_max_s)
    for g, tile in enumerate(tile_indices(d_m, cfg)):
        key = (top_link.dst, g, tile)
        s = state.stats.get(key)
        if s is None:
            state.stats[key] = [cost, 1]
        else:
            n = s[1]
            s[0] = (n * s[0] + cost) / (n + 1)
            s[1] = n + 1


def nc_skylink(state: BanditState, obs: LocalObservation, exploration_unit_s: float = 1.0,
               t: int | None = None) -> list[Edge]:
    """Ranking with context switched off: one partition, one tile for every distance."""
    return rank_links(state, obs, SINGLE_TILE, exploration_unit_s, t)


class SkyLinkRouter(Router):
    """One independent bandit per satellite; only local links and own cost are used."""

    name = "skylink"

    def __init__(self, tiles: TileCodingConfig = TileCodingConfig(), sigma: float = 0.9,
                 exploration_unit_s: float = 1e-3, t_max_s: float = 0.2, update_all_used: bool = False):
        if not 0 < sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")
        self.tiles = tiles
        self.sigma = sigma
        self.exploration_unit_s = exploration_unit_s
        self.t_max_s = t_max_s
        self.update_all_used = update_all_used
        self.states: dict[int, BanditState] = {}
        self.clock = 0
        self._edge_load = None

    def state(self, sat: int) -> BanditState:
        s = self.states.get(sat)
        if s is None:
            s = self.states[sat] = BanditState()
        return s

    def begin_slot(self, graph, rng, weights=None):
        super().begin_slot(graph, rng, weights)
        self.clock += 1
        self._edge_load = None

    def decide(self, obs: LocalObservation) -> list[Edge]:
        if not self.graph.nodes.is_sat(obs.node):
            return list(obs.links)
        state = self.state(obs.node)
        state.t = self.clock
        return rank_links(state, obs, self.tiles, self.exploration_unit_s)

    def end_slot(self, outcome) -> None:
        self._edge_load = outcome.edge_load

    def feedback(self, node: int, cost: float, chosen: Sequence[Edge], obs: LocalObservation) -> None:
        if not chosen:
            return
        state = self.state(node)
        if self.update_all_used and self._edge_load is not None:
            links = [e for e in chosen if self._edge_load[e.index] > 0] or [chosen[0]]
        else:
            links = [chosen[0]]
        for e in links:
            bandit_update(state, e, cost, e.distance_m, self.tiles, self.t_max_s)

    def to_json(self, label: Callable[[int], str] = str) -> str:
        return json.dumps({label(s): st.to_dict(label) for s, st in sorted(self.states.items())},
                          indent=1, sort_keys=True)

    def load_json(self, text: str, parse: Callable[[str], int] = int) -> None:
        data = json.loads(text)
        self.states = {parse(k): BanditState.from_dict(v, parse) for k, v in data.items()}


class NcSkyLinkRouter(SkyLinkRouter):
    name = "nc-skylink"

    def __init__(self, sigma: float = 0.9, exploration_unit_s: float = 1e-3, t_max_s: float = 0.2,
                 update_all_used: bool = False, tiles: TileCodingConfig | None = None):
        super().__init__(SINGLE_TILE, sigma, exploration_unit_s, t_max_s, update_all_used)
