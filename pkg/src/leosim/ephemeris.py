"""Satellite and ground-station positions per time slot.

Positions come either from a synthetic circular-orbit Walker constellation or
from a precomputed ephemeris CSV (``slot,node_id,x_m,y_m,z_m``).  Everything
lives in an Earth-centered Earth-fixed frame on a spherical Earth.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
GM_EARTH = 3.986004418e14  # m^3 / s^2
EARTH_ROTATION_RATE = 7.2921159e-5  # rad / s

EPHEMERIS_HEADER = ("slot", "node_id", "x_m", "y_m", "z_m")


class EphemerisError(ValueError):
    """Raised for malformed or incomplete ephemeris input."""


@dataclass(frozen=True)
class GeodeticCoord:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if self.altitude_m < 0:
            raise ValueError(f"negative altitude: {self.altitude_m}")
        object.__setattr__(self, "longitude_deg", normalize_longitude(self.longitude_deg))


def normalize_longitude(lon_deg: float) -> float:
    """Wrap a longitude into [-180, 180)."""
    lon = (lon_deg + 180.0) % 360.0 - 180.0
    # float modulo can land exactly on 180 for inputs just below -180
    return -180.0 if lon >= 180.0 else lon


@dataclass(frozen=True)
class WalkerConfig:
    num_planes: int
    sats_per_plane: int
    inclination_deg: float = 87.9
    altitude_m: float = 1_200_000.0
    phasing_offset_deg: float = 0.0
    epoch_utc_s: float = 0.0
    raan_spread_deg: float = 360.0
    earth_radius_m: float = EARTH_RADIUS_M
    gm: float = GM_EARTH
    earth_rotation_rate: float = EARTH_ROTATION_RATE

    def __post_init__(self):
        if self.num_planes < 1 or self.sats_per_plane < 1:
            raise ValueError("a Walker constellation needs at least one plane and one satellite")
        if self.altitude_m <= 0:
            raise ValueError("altitude must be positive")

    @property
    def num_sats(self) -> int:
        return self.num_planes * self.sats_per_plane

    @property
    def semi_major_axis_m(self) -> float:
        return self.earth_radius_m + self.altitude_m

    @property
    def mean_motion(self) -> float:
        """Angular rate in rad/s of the circular orbit."""
        return math.sqrt(self.gm / self.semi_major_axis_m ** 3)

    def plane_of(self, sat: int) -> int:
        return sat // self.sats_per_plane


def walker_positions_eci(cfg: WalkerConfig, t_s: float) -> np.ndarray:
    """Inertial positions (num_sats x 3) at ``t_s`` seconds after the epoch."""
    p = np.repeat(np.arange(cfg.num_planes), cfg.sats_per_plane)
    s = np.tile(np.arange(cfg.sats_per_plane), cfg.num_planes)
    raan = np.radians(p * cfg.raan_spread_deg / cfg.num_planes)
    anomaly = np.radians(s * 360.0 / cfg.sats_per_plane + p * cfg.phasing_offset_deg)
    anomaly = anomaly + cfg.mean_motion * t_s
    inc = math.radians(cfg.inclination_deg)
    a = cfg.semi_major_axis_m

    cu, su = np.cos(anomaly), np.sin(anomaly)
    co, so = np.cos(raan), np.sin(raan)
    x = a * (co * cu - so * su * math.cos(inc))
    y = a * (so * cu + co * su * math.cos(inc))
    z = a * (su * math.sin(inc))
    return np.column_stack([x, y, z])


def eci_to_ecef(pos: np.ndarray, t_s: float, rotation_rate: float = EARTH_ROTATION_RATE) -> np.ndarray:
    theta = rotation_rate * t_s
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty_like(pos)
    out[..., 0] = c * pos[..., 0] + s * pos[..., 1]
    out[..., 1] = -s * pos[..., 0] + c * pos[..., 1]
    out[..., 2] = pos[..., 2]
    return out


def generate_walker_star(cfg: WalkerConfig, slot: int, slot_duration_s: float = 15.0,
                         num_slots: int | None = None) -> np.ndarray:
    """ECEF positions (num_sats x 3) of every satellite at ``slot``.

    Earth rotation is measured from the configured epoch, so at slot 0 the ECI
    and ECEF frames coincide.
    """
    if slot < 0 or (num_slots is not None and slot >= num_slots):
        raise ValueError(f"slot {slot} outside [0, {num_slots})")
    t = slot * slot_duration_s
    return eci_to_ecef(walker_positions_eci(cfg, t), t, cfg.earth_rotation_rate)


def geodetic_to_ecef(g: GeodeticCoord, earth_radius_m: float = EARTH_RADIUS_M) -> np.ndarray:
    lat, lon = math.radians(g.latitude_deg), math.radians(g.longitude_deg)
    r = earth_radius_m + g.altitude_m
    return np.array([r * math.cos(lat) * math.cos(lon),
                     r * math.cos(lat) * math.sin(lon),
                     r * math.sin(lat)])


def ecef_to_geodetic(pos: np.ndarray, earth_radius_m: float = EARTH_RADIUS_M) -> GeodeticCoord:
    x, y, z = (float(v) for v in pos)
    r = math.sqrt(x * x + y * y + z * z)
    return GeodeticCoord(math.degrees(math.asin(z / r)), math.degrees(math.atan2(y, x)),
                         max(r - earth_radius_m, 0.0))


def subpoint_longitudes(positions: np.ndarray) -> np.ndarray:
    """Longitudes in degrees of the sub-satellite points."""
    return np.degrees(np.arctan2(positions[:, 1], positions[:, 0]))


def distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def elevation_angle(ground, sat) -> float:
    """Elevation in degrees of ``sat`` above the local horizon at ``ground``."""
    g = np.asarray(ground, dtype=float)
    los = np.asarray(sat, dtype=float) - g
    n = np.linalg.norm(los)
    if n == 0.0:
        return 90.0
    sin_el = float(np.dot(g, los)) / (np.linalg.norm(g) * n)
    return math.degrees(math.asin(min(1.0, max(-1.0, sin_el))))


def elevation_angles(ground: np.ndarray, sats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized elevations (deg) and slant ranges (m) from one ground point."""
    los = sats - ground
    rng = np.linalg.norm(los, axis=1)
    up = ground / np.linalg.norm(ground)
    sin_el = np.clip(los @ up / np.where(rng == 0, 1.0, rng), -1.0, 1.0)
    return np.degrees(np.arcsin(sin_el)), rng


def local_solar_hour(longitude_deg: float, utc_s: float) -> int:
    utc_h = (utc_s % 86_400.0) / 3600.0
    return int(math.floor((utc_h + longitude_deg / 15.0) % 24.0)) % 24


@dataclass
class EphemerisTable:
    """Positions for every node at every slot; immutable once built."""
    node_ids: tuple[str, ...]
    positions: np.ndarray  # (num_slots, num_nodes, 3)
    slot_duration_s: float = 15.0
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 3 or pos.shape[1] != len(self.node_ids) or pos.shape[2] != 3:
            raise EphemerisError(f"positions shape {pos.shape} does not match {len(self.node_ids)} nodes")
        if not np.all(np.isfinite(pos)):
            raise EphemerisError("non-finite coordinate in ephemeris")
        pos.setflags(write=False)
        self.positions = pos
        self._index = {n: i for i, n in enumerate(self.node_ids)}

    @property
    def num_slots(self) -> int:
        return self.positions.shape[0]

    def __len__(self) -> int:
        return self.positions.shape[0] * self.positions.shape[1]

    def position(self, node_id: str, slot: int) -> np.ndarray:
        return self.positions[slot, self._index[node_id]]

    def at(self, slot: int) -> np.ndarray:
        return self.positions[slot]


def walker_ephemeris(cfg: WalkerConfig, num_slots: int, slot_duration_s: float) -> EphemerisTable:
    pos = np.stack([generate_walker_star(cfg, t, slot_duration_s) for t in range(num_slots)])
    return EphemerisTable(tuple(f"sat{i}" for i in range(cfg.num_sats)), pos, slot_duration_s)


def write_ephemeris(table: EphemerisTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPHEMERIS_HEADER)
        for t in range(table.num_slots):
            for i, node in enumerate(table.node_ids):
                x, y, z = table.positions[t, i]
                w.writerow([t, node, repr(float(x)), repr(float(y)), repr(float(z))])


def load_ephemeris(path, slot_duration_s: float = 15.0) -> EphemerisTable:
    """Read an ephemeris CSV; every (slot, node) pair must be present exactly once."""
    rows: dict[tuple[int, str], tuple[float, float, float]] = {}
    nodes: dict[str, None] = {}
    max_slot = -1
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != EPHEMERIS_HEADER:
            raise EphemerisError(f"line 1: expected header {','.join(EPHEMERIS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise EphemerisError(f"line {lineno}: expected 5 fields, got {len(row)}")
            try:
                slot = int(row[0])
                xyz = (float(row[2]), float(row[3]), float(row[4]))
            except ValueError as exc:
                raise EphemerisError(f"line {lineno}: {exc}") from None
            if slot < 0:
                raise EphemerisError(f"line {lineno}: negative slot {slot}")
            if not all(math.isfinite(v) for v in xyz):
                raise EphemerisError(f"line {lineno}: non-finite coordinate")
            node = row[1].strip()
            if (slot, node) in rows:
                raise EphemerisError(f"line {lineno}: duplicate entry for node {node} slot {slot}")
            rows[(slot, node)] = xyz
            nodes.setdefault(node)
            max_slot = max(max_slot, slot)
    if not rows:
        raise EphemerisError("ephemeris file has no rows")
    node_ids = tuple(nodes)
    pos = np.empty((max_slot + 1, len(node_ids), 3))
    for t in range(max_slot + 1):
        for i, node in enumerate(node_ids):
            try:
                pos[t, i] = rows[(t, node)]
            except KeyError:
                raise EphemerisError(f"incomplete ephemeris: node {node} missing at slot {t}") from None
    return EphemerisTable(node_ids, pos, slot_duration_s)
