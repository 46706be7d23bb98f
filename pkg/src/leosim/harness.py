"""Run orchestration: scenarios, seeded runs, failures, router comparison and tile sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .channel import FiberDelayModel
from .config import ConfigError, FailureSchedule, RouterSpec, SimConfig
from .ephemeris import (EphemerisError, generate_walker_star, geodetic_to_ecef, load_ephemeris)
from .flow import SlotOutcome, per_sat_costs, propagate_slot
from .metrics import MetricsRecord, comparison_ratios, run_summary, slot_metrics
from .routers import (BentPipeRouter, DijkstraRouter, KShortestRouter, LocalObservation, RandomRouter, Router)
from .skylink import NcSkyLinkRouter, SkyLinkRouter, TileCodingConfig
from .topology import LinkKind, SlotGeometry, TimeSlotGraph, assemble_graph, slot_geometry
from .traffic import TrafficModel

# Named per-seed random substreams.
STREAM_FIBER = 1
STREAM_ROUTER = 2
STREAM_FAILURE = 3


def substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream]))


def make_router(spec: RouterSpec, t_max_s: float = 0.2) -> Router:
    """Build a fresh router of the configured kind; all kinds share ``spec.sigma``."""
    kind = spec.kind
    if kind == "skylink":
        r: Router = SkyLinkRouter(spec.tiles, spec.sigma, spec.exploration_unit_s, t_max_s, spec.update_all_used)
    elif kind == "nc-skylink":
        r = NcSkyLinkRouter(spec.sigma, spec.exploration_unit_s, t_max_s, spec.update_all_used)
    elif kind == "dijkstra":
        r = DijkstraRouter()
    elif kind == "ksp":
        r = KShortestRouter(spec.k)
    elif kind == "bentpipe":
        r = BentPipeRouter()
    elif kind == "random":
        r = RandomRouter()
    else:
        raise ConfigError(f"unknown router kind {kind!r}")
    r.sigma = spec.sigma
    return r


def failure_subset(num_sats: int, schedule: FailureSchedule) -> np.ndarray:
    """The fixed set of ``ceil(fraction * N)`` satellites hit by the outage, as a boolean mask."""
    count = min(num_sats, math.ceil(schedule.fraction * num_sats - 1e-9))
    mask = np.zeros(num_sats, dtype=bool)
    if count > 0:
        rng = np.random.default_rng(np.random.SeedSequence([int(schedule.selection_seed), STREAM_FAILURE]))
        mask[rng.choice(num_sats, size=count, replace=False)] = True
    return mask


def apply_failures(num_sats: int, schedule: FailureSchedule | None, slot: int) -> np.ndarray:
    """Satellites whose GSLs are down at ``slot``; empty outside ``[start_slot, end_slot)``."""
    if schedule is None or not schedule.start_slot <= slot < schedule.end_slot:
        return np.zeros(num_sats, dtype=bool)
    return failure_subset(num_sats, schedule)


class Scenario:
    """Seed-independent per-slot data (positions, link geometry, offered traffic).

    Computed lazily and cached, so repeated runs over seeds and routers pay
    for the geometry once.
    """

    def __init__(self, cfg: SimConfig, cache: bool | None = None):
        self.cfg = cfg
        if not cfg.ground:
            raise ConfigError("at least one ground station is required")
        self._table = None
        if cfg.walker is not None:
            self.num_sats = cfg.walker.num_sats
            self.sats_per_plane = cfg.walker.sats_per_plane
        else:
            try:
                self._table = load_ephemeris(cfg.ephemeris_path, cfg.slot_duration_s)
            except (OSError, EphemerisError) as exc:
                raise ConfigError(f"ephemeris: {exc}") from None
            if self._table.num_slots < cfg.slots:
                raise ConfigError(f"ephemeris covers {self._table.num_slots} slots, config asks for {cfg.slots}")
            self.num_sats = len(self._table.node_ids)
            self.sats_per_plane = cfg.sats_per_plane or self.num_sats
        if self.num_sats % self.sats_per_plane:
            raise ConfigError("satellite count is not a multiple of sats_per_plane")
        self.num_ground = len(cfg.ground)
        self.ground_positions = np.array([geodetic_to_ecef(g.location, cfg.earth_radius_m) for g in cfg.ground])
        self.antennas = [g.num_antennas for g in cfg.ground]
        self.fiber_capacity = [g.fiber_capacity_bps for g in cfg.ground]
        try:
            self.traffic = TrafficModel(cfg.population(), cfg.traffic)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"population: {exc}") from None
        self._cache: dict[int, tuple] | None = {} if (cache if cache is not None else cfg.slots <= 20_000) else None

    def utc(self, slot: int) -> float:
        return self.cfg.start_utc_s + slot * self.cfg.slot_duration_s

    def positions(self, slot: int) -> np.ndarray:
        if self._table is not None:
            return self._table.at(slot)
        return generate_walker_star(self.cfg.walker, slot, self.cfg.slot_duration_s)

    def slot_data(self, slot: int) -> tuple[SlotGeometry, np.ndarray]:
        if self._cache is not None and slot in self._cache:
            return self._cache[slot]
        pos = self.positions(slot)
        geom = slot_geometry(slot, pos, self.ground_positions, self.antennas, self.cfg.channel,
                             self.cfg.min_elevation_deg, self.sats_per_plane, self.cfg.cross_seam)
        gen = self.traffic.rates(pos, self.utc(slot))
        gen.setflags(write=False)
        if self._cache is not None:
            self._cache[slot] = (geom, gen)
        return geom, gen


class _Decisions(dict):
    """Preference lists requested on demand, so only nodes that carry traffic decide."""

    def __init__(self, router: Router, graph: TimeSlotGraph, slot: int, generated: np.ndarray):
        super().__init__()
        self.router = router
        self.graph = graph
        self.slot = slot
        self.generated = generated
        self.obs: dict[int, LocalObservation] = {}

    def __missing__(self, node: int):
        if not self.graph.nodes.is_sat(node):
            raise KeyError(node)
        obs = LocalObservation(node, self.slot, self.graph.out_links[node], float(self.generated[node]))
        prefs = list(self.router.decide(obs))
        self.obs[node] = obs
        self[node] = prefs
        return prefs


@dataclass
class SlotTrace:
    """Everything one slot produced, for callers that audit runs."""
    slot: int
    graph: TimeSlotGraph
    outcome: SlotOutcome
    costs: np.ndarray
    record: MetricsRecord
    sigma: float


def run_simulation(cfg: SimConfig, seed: int, router: Router | None = None, *,
                   scenario: Scenario | None = None,
                   observer: Callable[[SlotTrace], None] | None = None) -> list[MetricsRecord]:
    """Simulate ``cfg.slots`` slots for one seed and return one metrics record per slot.

    The router defaults to the configured kind.  ``observer`` (if given)
    receives a :class:`SlotTrace` after every slot.
    """
    scenario = scenario or Scenario(cfg)
    router = router or make_router(cfg.router, cfg.ttl.t_max_s)
    fiber = FiberDelayModel(scenario.num_ground, substream(seed, STREAM_FIBER), cfg.channel)
    router_rng = substream(seed, STREAM_ROUTER)
    wants_weights = isinstance(router, (DijkstraRouter, KShortestRouter))
    failed = failure_subset(scenario.num_sats, cfg.failure) if cfg.failure is not None else None
    records: list[MetricsRecord] = []

    for t in range(cfg.slots):
        geom, gen = scenario.slot_data(t)
        fiber_delay = fiber.sample()
        mask = failed if failed is not None and cfg.failure.start_slot <= t < cfg.failure.end_slot else None
        graph = assemble_graph(geom, scenario.num_ground, scenario.fiber_capacity, fiber_delay, mask)
        weights = None
        if wants_weights:
            # route on propagation delay; fiber links at their nominal (base) delay
            weights = [fiber.base_s[e.src - scenario.num_sats] if e.kind == LinkKind.FIBER else e.prop_delay_s
                       for e in graph.edges]
        router.begin_slot(graph, router_rng, weights)
        decisions = _Decisions(router, graph, t, gen)
        outcome = propagate_slot(graph, decisions, gen, cfg.ttl, cfg.buffers, router.sigma)
        costs = per_sat_costs(outcome)
        router.end_slot(outcome)
        for v, obs in decisions.obs.items():
            if gen[v] > 0:
                router.feedback(v, float(costs[v]), decisions[v], obs)
        rec = slot_metrics(outcome, t, scenario.utc(t), costs)
        records.append(rec)
        if observer is not None:
            observer(SlotTrace(t, graph, outcome, costs, rec, router.sigma))
    return records


@dataclass
class ComparisonReport:
    routers: list[str]
    seeds: list[int]
    records: dict[str, dict[int, list[MetricsRecord]]] = field(default_factory=dict)
    summaries: dict[str, dict] = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"routers": self.routers, "seeds": self.seeds, "summaries": self.summaries, "ratios": self.ratios}


def compare_routers(cfg: SimConfig, routers: Sequence[str], seeds: Sequence[int] | None = None, *,
                    scenario: Scenario | None = None, tail_fraction: float = 1.0,
                    observer: Callable[[str, int, SlotTrace], None] | None = None) -> ComparisonReport:
    """Run every router kind on the same scenario and seeds.

    Summaries average each router's records over the last ``tail_fraction``
    of the slots and over all seeds.
    """
    if len(routers) < 2:
        raise ConfigError("need at least two routers to compare")
    seeds = list(cfg.seeds if seeds is None else seeds)
    scenario = scenario or Scenario(cfg)
    report = ComparisonReport(list(routers), seeds)
    start = int(cfg.slots * (1.0 - tail_fraction))
    for kind in routers:
        rcfg = cfg.with_router(kind=kind)
        runs = {}
        for s in seeds:
            obs = None if observer is None else (lambda tr, k=kind, s=s: observer(k, s, tr))
            runs[s] = run_simulation(rcfg, s, scenario=scenario, observer=obs)
        report.records[kind] = runs
        tail = [r for s in seeds for r in runs[s][start:]]
        report.summaries[kind] = run_summary(tail, cfg.slot_duration_s)
    report.ratios = comparison_ratios(report.summaries)
    return report


def sweep_tiles(cfg: SimConfig, widths_m: Sequence[float], partitions: Sequence[int],
                seeds: Sequence[int] | None = None, *, scenario: Scenario | None = None) -> np.ndarray:
    """Mean SkyLink cost for every (width, partition count) cell; rows follow ``widths_m``."""
    if not widths_m or not partitions:
        raise ConfigError("sweep needs at least one width and one partition count")
    seeds = list(cfg.seeds if seeds is None else seeds)
    scenario = scenario or Scenario(cfg)
    grid = np.zeros((len(widths_m), len(partitions)))
    for i, w in enumerate(widths_m):
        for j, g in enumerate(partitions):
            tiles = TileCodingConfig(float(w), int(g), cfg.router.tiles.max_distance_m)
            rcfg = cfg.with_router(kind="skylink", tiles=tiles)
            costs = [r.cost_s for s in seeds for r in run_simulation(rcfg, s, scenario=scenario)]
            grid[i, j] = float(np.mean(costs))
    return grid


def sweep_csv(widths_m: Sequence[float], partitions: Sequence[int], grid: np.ndarray) -> str:
    lines = ["tile_width_km," + ",".join(f"G{g}" for g in partitions)]
    for w, row in zip(widths_m, grid):
        lines.append(",".join([repr(float(w) / 1e3)] + [repr(float(c)) for c in row]))
    return "\n".join(lines) + "\n"
