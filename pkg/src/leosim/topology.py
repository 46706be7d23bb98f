"""Per-slot network graph: +grid ISLs, ground links, and fiber to the internet.

Nodes are plain integers.  For a graph with ``N`` satellites and ``M`` ground
stations, satellites are ``0..N-1``, ground stations ``N..N+M-1`` and the
internet node is ``N+M``.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .channel import ChannelParams, gsl_capacity, isl_capacity, propagation_delay
from .ephemeris import GeodeticCoord, elevation_angles, geodetic_to_ecef


class LinkKind(enum.IntEnum):
    GSL = 0
    ISL = 1
    FIBER = 2


@dataclass(frozen=True, slots=True)
class Edge:
    index: int
    src: int
    dst: int
    kind: LinkKind
    capacity_bps: float
    prop_delay_s: float
    distance_m: float = 0.0


@dataclass(frozen=True)
class GroundStation:
    name: str
    location: GeodeticCoord
    num_antennas: int = 2
    fiber_capacity_bps: float = 50e9

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError(f"ground station {self.name!r} needs at least one antenna")
        if self.fiber_capacity_bps < 0:
            raise ValueError(f"ground station {self.name!r} has negative fiber capacity")


def load_ground_stations(path) -> list[GroundStation]:
    """Read a ``name,lat_deg,lon_deg,num_antennas,fiber_capacity_bps`` catalog."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out.append(GroundStation(
                    row["name"],
                    GeodeticCoord(float(row["lat_deg"]), float(row["lon_deg"])),
                    int(row["num_antennas"]),
                    float(row["fiber_capacity_bps"]),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return out


class NodeIds:
    """Integer layout of satellites, ground stations and the internet node."""

    def __init__(self, num_sats: int, num_ground: int):
        self.num_sats = num_sats
        self.num_ground = num_ground
        self.internet = num_sats + num_ground

    def __len__(self):
        return self.internet + 1

    def ground(self, i: int) -> int:
        return self.num_sats + i

    def is_sat(self, v: int) -> bool:
        return v < self.num_sats

    def is_ground(self, v: int) -> bool:
        return self.num_sats <= v < self.internet

    def label(self, v: int) -> str:
        if v < self.num_sats:
            return f"sat{v}"
        if v < self.internet:
            return f"gs{v - self.num_sats}"
        return "internet"

    def parse(self, label: str) -> int:
        if label == "internet":
            return self.internet
        if label.startswith("sat"):
            return int(label[3:])
        if label.startswith("gs"):
            return self.num_sats + int(label[2:])
        raise ValueError(f"unknown node label {label!r}")


@dataclass(frozen=True)
class TimeSlotGraph:
    slot: int
    nodes: NodeIds
    edges: tuple[Edge, ...]
    out_links: tuple[tuple[Edge, ...], ...]

    @property
    def internet(self) -> int:
        return self.nodes.internet

    def edges_of_kind(self, kind: LinkKind) -> list[Edge]:
        return [e for e in self.edges if e.kind == kind]


def build_isl_neighbors(positions: Mapping[int, np.ndarray], plane_of: Mapping[int, int],
                        sats_per_plane: int, cross_seam: bool = False,
                        removed=frozenset()) -> dict[int, list[int]]:
    """+grid neighbors of every satellite not in ``removed``.

    Satellites are numbered ``plane * sats_per_plane + slot_in_plane`` in
    anomaly order.  In-plane neighbors are the adjacent numbers (a missing
    satellite leaves a gap, never a skip).  Across planes, two satellites link
    only if each is the other's nearest in the neighboring plane; the pairing
    is decided on the full constellation before removals, so removing a
    satellite can only delete links.
    """
    everyone = sorted(positions)
    neighbors: dict[int, list[int]] = {s: [] for s in everyone}
    planes: dict[int, list[int]] = {}
    for s in everyone:
        planes.setdefault(plane_of[s], []).append(s)

    for s in everyone:
        p = plane_of[s]
        base, k = p * sats_per_plane, s - p * sats_per_plane
        for step in (-1, 1):
            other = base + (k + step) % sats_per_plane
            if other != s and other in neighbors and other not in neighbors[s]:
                neighbors[s].append(other)

    plane_ids = sorted(planes)
    pairs = list(zip(plane_ids, plane_ids[1:]))
    # planes must actually be adjacent by number
    pairs = [(a, b) for a, b in pairs if b == a + 1]
    if cross_seam and len(plane_ids) > 2:
        first, last = plane_ids[0], plane_ids[-1]
        if first == 0 and last == max(plane_of.values()):
            pairs.append((last, first))
    for a, b in pairs:
        sa, sb = planes[a], planes[b]
        pa = np.array([positions[s] for s in sa])
        pb = np.array([positions[s] for s in sb])
        d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)
        best_b = d.argmin(axis=1)
        best_a = d.argmin(axis=0)
        for i, j in enumerate(best_b):
            if best_a[j] == i:
                u, v = sa[i], sb[j]
                if len(neighbors[u]) < 4 and len(neighbors[v]) < 4 and v not in neighbors[u]:
                    neighbors[u].append(v)
                    neighbors[v].append(u)
    if removed:
        neighbors = {s: [v for v in vs if v not in removed] for s, vs in neighbors.items() if s not in removed}
    return neighbors


@dataclass(frozen=True)
class GslCandidate:
    sat: int
    station: int
    distance_m: float
    elevation_deg: float


def select_gsls(ground_positions: np.ndarray, sat_positions: np.ndarray, antennas: Sequence[int],
                min_elevation_deg: float, present: np.ndarray | None = None) -> list[GslCandidate]:
    """Each station links to its ``mu`` nearest satellites at or above the elevation mask."""
    out = []
    for m, gpos in enumerate(ground_positions):
        el, rng = elevation_angles(gpos, sat_positions)
        ok = el >= min_elevation_deg
        if present is not None:
            ok &= present
        idx = np.flatnonzero(ok)
        order = idx[np.argsort(rng[idx], kind="stable")][: antennas[m]]
        out.extend(GslCandidate(int(s), m, float(rng[s]), float(el[s])) for s in order)
    return out


def build_gsl_edges(ground: Sequence[GroundStation], positions: np.ndarray, min_elevation_deg: float,
                    params: ChannelParams | None = None, earth_radius_m: float = 6_371_000.0) -> list[Edge]:
    """Satellite-to-ground edges; ground nodes are numbered after the satellites."""
    params = params or ChannelParams()
    gpos = np.array([geodetic_to_ecef(g.location, earth_radius_m) for g in ground]).reshape(-1, 3)
    cands = select_gsls(gpos, positions, [g.num_antennas for g in ground], min_elevation_deg)
    n = len(positions)
    return [Edge(i, c.sat, n + c.station, LinkKind.GSL,
                 gsl_capacity(c.distance_m, c.elevation_deg, params),
                 propagation_delay(c.distance_m, params), c.distance_m)
            for i, c in enumerate(cands)]


@dataclass(frozen=True)
class SlotGeometry:
    """Seed-independent link geometry of one slot (fiber edges excluded)."""
    slot: int
    num_sats: int
    isl: tuple[tuple[int, int, float, float, float], ...]  # (u, v, distance, capacity, delay)
    gsl: tuple[tuple[int, int, float, float, float], ...]  # (sat, station, distance, capacity, delay)


def slot_geometry(slot: int, positions: np.ndarray, ground_positions: np.ndarray, antennas: Sequence[int],
                  params: ChannelParams, min_elevation_deg: float, sats_per_plane: int,
                  cross_seam: bool = False, present: np.ndarray | None = None) -> SlotGeometry:
    n = len(positions)
    alive = np.ones(n, dtype=bool) if present is None else np.asarray(present, dtype=bool)
    pos_map = {i: positions[i] for i in range(n)}
    plane_of = {i: i // sats_per_plane for i in pos_map}
    removed = frozenset(int(i) for i in np.flatnonzero(~alive))
    nbrs = build_isl_neighbors(pos_map, plane_of, sats_per_plane, cross_seam, removed)

    pairs = sorted((u, v) for u, vs in nbrs.items() for v in vs)
    if pairs:
        u_idx = np.array([u for u, _ in pairs])
        v_idx = np.array([v for _, v in pairs])
        dist = np.linalg.norm(positions[u_idx] - positions[v_idx], axis=1)
        caps = isl_capacity(dist, params)
        delays = dist / params.c_mps
        isl = tuple((int(u), int(v), float(d), float(c), float(t))
                    for u, v, d, c, t in zip(u_idx, v_idx, dist, np.atleast_1d(caps), delays))
    else:
        isl = ()

    cands = select_gsls(ground_positions, positions, antennas, min_elevation_deg, alive)
    if cands:
        dist = np.array([c.distance_m for c in cands])
        caps = np.atleast_1d(gsl_capacity(dist, np.array([c.elevation_deg for c in cands]), params))
        gsl = tuple((c.sat, c.station, c.distance_m, float(cap), c.distance_m / params.c_mps)
                    for c, cap in zip(cands, caps))
    else:
        gsl = ()
    return SlotGeometry(slot, n, isl, gsl)


def assemble_graph(geom: SlotGeometry, num_ground: int, fiber_capacity: Sequence[float],
                   fiber_delay_s: Sequence[float], failure_mask: np.ndarray | None = None) -> TimeSlotGraph:
    """Materialize the directed graph; satellites in ``failure_mask`` lose their GSLs."""
    nodes = NodeIds(geom.num_sats, num_ground)
    edges: list[Edge] = []
    out: list[list[Edge]] = [[] for _ in range(len(nodes))]

    def add(src, dst, kind, cap, delay, dist):
        e = Edge(len(edges), src, dst, kind, cap, delay, dist)
        edges.append(e)
        out[src].append(e)

    for sat, station, dist, cap, delay in geom.gsl:
        if failure_mask is not None and failure_mask[sat]:
            continue
        add(sat, nodes.ground(station), LinkKind.GSL, cap, delay, dist)
    for u, v, dist, cap, delay in geom.isl:
        add(u, v, LinkKind.ISL, cap, delay, dist)
    for m in range(num_ground):
        add(nodes.ground(m), nodes.internet, LinkKind.FIBER, float(fiber_capacity[m]), float(fiber_delay_s[m]), 0.0)
    return TimeSlotGraph(geom.slot, nodes, tuple(edges), tuple(tuple(o) for o in out))


def build_slot_graph(slot: int, positions: np.ndarray, ground: Sequence[GroundStation],
                     channel_params: ChannelParams, failure_mask: np.ndarray | None = None, *,
                     sats_per_plane: int | None = None, min_elevation_deg: float = 25.0,
                     cross_seam: bool = False, fiber_delay_s: Sequence[float] | None = None,
                     earth_radius_m: float = 6_371_000.0) -> TimeSlotGraph:
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    gpos = np.array([geodetic_to_ecef(g.location, earth_radius_m) for g in ground]).reshape(-1, 3)
    geom = slot_geometry(slot, positions, gpos, [g.num_antennas for g in ground], channel_params,
                         min_elevation_deg, sats_per_plane or len(positions), cross_seam)
    if fiber_delay_s is None:
        lo, hi = channel_params.fiber_delay_range_s
        fiber_delay_s = [0.5 * (lo + hi)] * len(ground)
    return assemble_graph(geom, len(ground), [g.fiber_capacity_bps for g in ground], fiber_delay_s, failure_mask)
