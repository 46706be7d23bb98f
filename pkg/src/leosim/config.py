"""Scenario configuration: a TOML tree mirroring :class:`SimConfig`, plus presets."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import tomli_w

from .channel import ChannelParams
from .ephemeris import EARTH_RADIUS_M, GeodeticCoord, WalkerConfig
from .flow import TtlConfig
from .skylink import TileCodingConfig
from .topology import GroundStation, load_ground_stations
from .traffic import BufferSpec, PopulationGrid, TrafficParams

ROUTER_KINDS = ("skylink", "nc-skylink", "dijkstra", "ksp", "bentpipe", "random")


class ConfigError(ValueError):
    """Inconsistent or malformed scenario configuration."""


@dataclass(frozen=True)
class FailureSchedule:
    fraction: float = 0.0
    start_slot: int = 0
    end_slot: int = 0
    selection_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("failure fraction must lie in [0, 1]")
        if not 0 <= self.start_slot <= self.end_slot:
            raise ValueError("failure window needs 0 <= start_slot <= end_slot")


@dataclass(frozen=True)
class RouterSpec:
    kind: str = "skylink"
    sigma: float = 0.9
    k: int = 4
    tiles: TileCodingConfig = field(default_factory=TileCodingConfig)
    exploration_unit_s: float = 1e-3
    update_all_used: bool = False

    def __post_init__(self):
        if self.kind not in ROUTER_KINDS:
            raise ValueError(f"unknown router kind {self.kind!r}; choose from {', '.join(ROUTER_KINDS)}")
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.exploration_unit_s > 0:
            raise ValueError("exploration_unit_s must be positive")


@dataclass(frozen=True)
class SimConfig:
    walker: WalkerConfig | None = None
    ephemeris_path: str | None = None
    sats_per_plane: int | None = None  # plane layout of an ingested ephemeris
    cross_seam: bool = False
    ground: tuple[GroundStation, ...] = ()
    min_elevation_deg: float = 25.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    population_path: str | None = None
    hotspots: tuple[tuple[float, float, float, float], ...] = ()
    buffers: BufferSpec = field(default_factory=BufferSpec)
    ttl: TtlConfig = field(default_factory=TtlConfig)
    router: RouterSpec = field(default_factory=RouterSpec)
    slots: int = 1
    slot_duration_s: float = 15.0
    start_utc_s: float = 0.0
    seeds: tuple[int, ...] = (0,)
    failure: FailureSchedule | None = None
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        if self.slots < 1:
            raise ConfigError("slots must be at least 1")
        if not self.slot_duration_s > 0:
            raise ConfigError("slot_duration_s must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if (self.walker is None) == (self.ephemeris_path is None):
            raise ConfigError("give exactly one of a Walker constellation or an ephemeris file")
        if not 0 < self.min_elevation_deg < 90:
            raise ConfigError("min_elevation_deg must lie in (0, 90)")
        if self.failure is not None and self.failure.end_slot > self.slots:
            raise ConfigError("failure window ends after the last slot")

    def with_router(self, **changes) -> "SimConfig":
        return replace(self, router=replace(self.router, **changes))

    def population(self) -> PopulationGrid:
        if self.population_path:
            return PopulationGrid.from_csv(self.population_path)
        return PopulationGrid.synthetic(self.hotspots)


# -- TOML <-> SimConfig ------------------------------------------------------

def _section(tree: dict, name: str) -> dict:
    sec = tree.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _build(cls, values: dict, section: str, rename: dict | None = None):
    rename = rename or {}
    kwargs = {rename.get(k, k): v for k, v in values.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def config_from_dict(tree: dict, base_dir: Path | None = None) -> SimConfig:
    base_dir = base_dir or Path(".")

    def resolve(p):
        return None if p is None else str((base_dir / p) if not Path(p).is_absolute() else Path(p))

    sim = dict(_section(tree, "simulation"))
    const = dict(_section(tree, "constellation"))
    ground = dict(_section(tree, "ground"))
    chan = dict(_section(tree, "channel"))
    traffic = dict(_section(tree, "traffic"))
    buffers = _section(tree, "buffers")
    ttl = _section(tree, "ttl")
    router = dict(_section(tree, "router"))
    failure = tree.get("failure")

    ephemeris_path = resolve(const.pop("ephemeris", None))
    cross_seam = bool(const.pop("cross_seam", False))
    walker = sats_per_plane = None
    if ephemeris_path is None:
        walker = _build(WalkerConfig, const, "constellation")
    elif const.get("sats_per_plane") is not None:
        sats_per_plane = int(const["sats_per_plane"])

    stations = []
    if "catalog" in ground:
        try:
            stations.extend(load_ground_stations(resolve(ground["catalog"])))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"[ground] catalog: {exc}") from None
    for i, st in enumerate(ground.get("stations", [])):
        try:
            stations.append(GroundStation(
                str(st.get("name", f"gs{i}")),
                GeodeticCoord(float(st["lat_deg"]), float(st["lon_deg"])),
                int(st.get("num_antennas", 2)),
                float(st.get("fiber_capacity_bps", chan.get("fiber_capacity_bps", 50e9))),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"[ground] station {i}: {exc}") from None

    if "atmos_table" in chan:
        chan["atmos_table"] = tuple(tuple(map(float, pair)) for pair in chan["atmos_table"])
    if "fiber_delay_range_s" in chan:
        chan["fiber_delay_range_s"] = tuple(map(float, chan["fiber_delay_range_s"]))
    channel = _build(ChannelParams, chan, "channel")

    population_path = resolve(traffic.pop("population", None))
    hotspots = tuple(tuple(map(float, h)) for h in traffic.pop("hotspots", []))
    if "diurnal" in traffic:
        traffic["diurnal"] = tuple(traffic["diurnal"])
    traffic_params = _build(TrafficParams, traffic, "traffic")
    if population_path is None and not hotspots:
        raise ConfigError("[traffic] needs a population file or a hotspot list")

    tile_keys = {"tile_width_m", "num_partitions", "max_distance_m"}
    tiles = _build(TileCodingConfig, {k: router.pop(k) for k in list(router) if k in tile_keys}, "router")
    router_spec = _build(RouterSpec, {**router, "tiles": tiles}, "router")

    fail = None if failure is None else _build(FailureSchedule, failure, "failure")
    try:
        return SimConfig(
            walker=walker,
            ephemeris_path=ephemeris_path,
            sats_per_plane=sats_per_plane,
            cross_seam=cross_seam,
            ground=tuple(stations),
            min_elevation_deg=float(ground.get("min_elevation_deg", 25.0)),
            channel=channel,
            traffic=traffic_params,
            population_path=population_path,
            hotspots=hotspots,
            buffers=_build(BufferSpec, buffers, "buffers"),
            ttl=_build(TtlConfig, ttl, "ttl"),
            router=router_spec,
            slots=int(sim.get("slots", 1)),
            slot_duration_s=float(sim.get("slot_duration_s", 15.0)),
            start_utc_s=float(sim.get("start_utc_s", 0.0)),
            seeds=tuple(int(s) for s in sim.get("seeds", [0])),
            failure=fail,
            earth_radius_m=float(sim.get("earth_radius_m", EARTH_RADIUS_M)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            tree = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(tree, path.parent)


def config_to_dict(cfg: SimConfig) -> dict[str, Any]:
    tree: dict[str, Any] = {
        "simulation": {
            "slots": cfg.slots,
            "slot_duration_s": cfg.slot_duration_s,
            "start_utc_s": cfg.start_utc_s,
            "seeds": list(cfg.seeds),
            "earth_radius_m": cfg.earth_radius_m,
        },
    }
    if cfg.walker is not None:
        w = asdict(cfg.walker)
        tree["constellation"] = {**w, "cross_seam": cfg.cross_seam}
    else:
        tree["constellation"] = {"ephemeris": cfg.ephemeris_path, "cross_seam": cfg.cross_seam}
        if cfg.sats_per_plane is not None:
            tree["constellation"]["sats_per_plane"] = cfg.sats_per_plane
    tree["ground"] = {
        "min_elevation_deg": cfg.min_elevation_deg,
        "stations": [{"name": g.name, "lat_deg": g.location.latitude_deg, "lon_deg": g.location.longitude_deg,
                      "num_antennas": g.num_antennas, "fiber_capacity_bps": g.fiber_capacity_bps}
                     for g in cfg.ground],
    }
    ch = asdict(cfg.channel)
    ch["atmos_table"] = [list(p) for p in cfg.channel.atmos_table]
    ch["fiber_delay_range_s"] = list(cfg.channel.fiber_delay_range_s)
    tree["channel"] = ch
    tr = {"devices_per_person": cfg.traffic.devices_per_person,
          "rate_per_device_bps": cfg.traffic.rate_per_device_bps,
          "diurnal": list(cfg.traffic.diurnal)}
    if cfg.population_path:
        tr["population"] = cfg.population_path
    else:
        tr["hotspots"] = [list(h) for h in cfg.hotspots]
    tree["traffic"] = tr
    tree["buffers"] = asdict(cfg.buffers)
    tree["ttl"] = asdict(cfg.ttl)
    r = cfg.router
    tree["router"] = {"kind": r.kind, "sigma": r.sigma, "k": r.k, "exploration_unit_s": r.exploration_unit_s,
                      "update_all_used": r.update_all_used,
                      "tile_width_m": r.tiles.tile_width_m, "num_partitions": r.tiles.num_partitions,
                      "max_distance_m": r.tiles.max_distance_m}
    if cfg.failure is not None:
        tree["failure"] = asdict(cfg.failure)
    return tree


def dump_config(cfg: SimConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


# -- presets -----------------------------------------------------------------

def desk_preset() -> SimConfig:
    """Small congested scenario that finishes in seconds per run.

    64 satellites and two pairs of nearby gateways (London/Frankfurt,
    Tokyo/Osaka) with 40 Mbit/s fiber each.  Each hotspot sits 8 degrees
    north-east of its gateway, so the distance context separates gateways
    that a coarse tile would pool.  2,000 slots of 15 s.
    """
    walker = WalkerConfig(num_planes=8, sats_per_plane=8, inclination_deg=87.9, altitude_m=1_200_000.0,
                          phasing_offset_deg=360.0 / 64 * 3, raan_spread_deg=180.0)
    sites = (("london", 51.5, -0.1, 4e5), ("frankfurt", 50.1, 8.7, 3e5),
             ("tokyo", 35.7, 139.7, 4e5), ("osaka", 34.7, 135.5, 2e5))
    stations = tuple(GroundStation(name, GeodeticCoord(lat, lon), 4, 40e6) for name, lat, lon, _ in sites)
    hotspots = tuple((lat + 8.0, lon + 8.0, people, 8.0) for _, lat, lon, people in sites)
    return SimConfig(
        walker=walker,
        ground=stations,
        min_elevation_deg=10.0,
        traffic=TrafficParams(devices_per_person=0.003175),
        hotspots=hotspots,
        slots=2000,
        slot_duration_s=15.0,
        seeds=tuple(range(10)),
        router=RouterSpec(exploration_unit_s=0.03),
    )


# Approximate coordinates of large metropolitan areas, for the full-size shape.
_CITIES = (
    ("tokyo", 35.7, 139.7), ("delhi", 28.6, 77.2), ("shanghai", 31.2, 121.5), ("sao-paulo", -23.6, -46.6),
    ("mexico-city", 19.4, -99.1), ("cairo", 30.0, 31.2), ("mumbai", 19.1, 72.9), ("beijing", 39.9, 116.4),
    ("dhaka", 23.8, 90.4), ("osaka", 34.7, 135.5), ("new-york", 40.7, -74.0), ("karachi", 24.9, 67.0),
    ("buenos-aires", -34.6, -58.4), ("istanbul", 41.0, 29.0), ("kolkata", 22.6, 88.4), ("manila", 14.6, 121.0),
    ("lagos", 6.5, 3.4), ("rio", -22.9, -43.2), ("moscow", 55.8, 37.6), ("los-angeles", 34.1, -118.2),
    ("paris", 48.9, 2.4), ("jakarta", -6.2, 106.8), ("lima", -12.0, -77.0), ("bangkok", 13.8, 100.5),
    ("london", 51.5, -0.1), ("tehran", 35.7, 51.4), ("bogota", 4.7, -74.1), ("johannesburg", -26.2, 28.0),
    ("chicago", 41.9, -87.6), ("sydney", -33.9, 151.2), ("nairobi", -1.3, 36.8), ("madrid", 40.4, -3.7),
)


def paper_shape_preset() -> SimConfig:
    """Full-size layout with the published channel, traffic and buffer values.

    18 x 36 near-polar satellites, a week of 15 s slots, 100 seeds.  Ground
    stations and population are stand-ins (one station per listed city, one
    hotspot per city); point ``[ground] catalog`` and ``[traffic] population``
    at real data for fidelity runs.
    """
    walker = WalkerConfig(num_planes=18, sats_per_plane=36, inclination_deg=87.9, altitude_m=1_200_000.0,
                          phasing_offset_deg=360.0 / 648, raan_spread_deg=180.0)
    stations = tuple(GroundStation(n, GeodeticCoord(la, lo), 2, 50e9) for n, la, lo in _CITIES)
    hotspots = tuple((la, lo, 8e9 / len(_CITIES), 6.0) for _, la, lo in _CITIES)
    return SimConfig(
        walker=walker,
        ground=stations,
        min_elevation_deg=25.0,
        hotspots=hotspots,
        slots=40_320,
        slot_duration_s=15.0,
        seeds=tuple(range(100)),
    )


PRESETS = {"desk": desk_preset, "paper-shape": paper_shape_preset}
