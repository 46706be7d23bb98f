"""User upload traffic offered to each satellite per slot."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ephemeris import local_solar_hour, subpoint_longitudes

# Single-peak day curve: mean 1.0, trough 0.5 at 04h, peak 1.4 at 20h (local solar time).
DEFAULT_DIURNAL = (
    1.0341, 0.8715, 0.7119, 0.5768, 0.5000, 0.5273, 0.5768, 0.6398,
    0.7119, 0.7901, 0.8715, 0.9536, 1.0338, 1.1108, 1.1817, 1.2449,
    1.2989, 1.3423, 1.3741, 1.3935, 1.4000, 1.3741, 1.2989, 1.1817,
)


@dataclass(frozen=True)
class TrafficParams:
    devices_per_person: float = 0.003175
    rate_per_device_bps: float = 22.98e3
    diurnal: tuple[float, ...] = field(default=DEFAULT_DIURNAL)

    def __post_init__(self):
        if len(self.diurnal) != 24:
            raise ValueError("diurnal profile needs 24 hourly factors")
        if self.devices_per_person < 0 or self.rate_per_device_bps < 0 or min(self.diurnal) < 0:
            raise ValueError("traffic parameters must be non-negative")
        object.__setattr__(self, "diurnal", tuple(float(v) for v in self.diurnal))


@dataclass(frozen=True)
class BufferSpec:
    satellite_buffer_bits: float = 50e6 * 8
    ground_buffer_bits: float = 1e9 * 8

    def __post_init__(self):
        if self.satellite_buffer_bits <= 0 or self.ground_buffer_bits <= 0:
            raise ValueError("buffer sizes must be positive")


def _unit_vectors(lat_deg: np.ndarray, lon_deg: np.ndarray) -> np.ndarray:
    lat, lon = np.radians(lat_deg), np.radians(lon_deg)
    return np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


class PopulationGrid:
    """One-degree population raster; only non-empty cells are stored."""

    def __init__(self, lat_deg, lon_deg, population):
        lat = np.asarray(lat_deg, dtype=float)
        lon = np.asarray(lon_deg, dtype=float)
        pop = np.asarray(population, dtype=float)
        if not (lat.shape == lon.shape == pop.shape):
            raise ValueError("lat, lon and population must have equal length")
        if np.any(pop < 0):
            raise ValueError("population counts must be non-negative")
        keep = pop > 0
        self.lat_deg, self.lon_deg, self.population = lat[keep], lon[keep], pop[keep]
        self.unit = _unit_vectors(self.lat_deg, self.lon_deg)

    @property
    def total(self) -> float:
        return float(self.population.sum())

    def __len__(self):
        return len(self.population)

    @classmethod
    def from_csv(cls, path) -> "PopulationGrid":
        lat, lon, pop = [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    lat.append(float(row["lat_deg"]))
                    lon.append(float(row["lon_deg"]))
                    pop.append(float(row["population"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc}") from None
        return cls(lat, lon, pop)

    @classmethod
    def synthetic(cls, hotspots: Sequence[tuple[float, float, float, float]]) -> "PopulationGrid":
        """Gaussian blobs ``(lat, lon, population, radius_deg)`` rasterized on 1-degree cell centers.

        Each blob is truncated at its radius and renormalized, so its cells sum
        to exactly its population.
        """
        cells: dict[tuple[float, float], float] = {}
        for lat0, lon0, pop, radius in hotspots:
            r = max(float(radius), 0.5)
            center = _unit_vectors(np.array([lat0]), np.array([lon0]))[0]
            lats = np.arange(math.floor(lat0 - r) + 0.5, math.ceil(lat0 + r), 1.0)
            lats = lats[(lats > -90) & (lats < 90)]
            span = r / max(math.cos(math.radians(min(abs(lat0) + r, 89.0))), 0.05)
            lons = np.arange(math.floor(lon0 - span) + 0.5, math.ceil(lon0 + span), 1.0)
            glat, glon = np.meshgrid(lats, lons, indexing="ij")
            glat, glon = glat.ravel(), (glon.ravel() + 180.0) % 360.0 - 180.0
            ang = np.degrees(np.arccos(np.clip(_unit_vectors(glat, glon) @ center, -1.0, 1.0)))
            inside = ang <= r
            if not inside.any():
                inside = ang == ang.min()
            w = np.exp(-0.5 * (ang[inside] / (r / 2.0)) ** 2)
            w = w / w.sum() * pop
            for la, lo, v in zip(glat[inside], glon[inside], w):
                key = (float(la), float(lo))
                cells[key] = cells.get(key, 0.0) + float(v)
        keys = sorted(cells)
        return cls([k[0] for k in keys], [k[1] for k in keys], [cells[k] for k in keys])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lat_deg", "lon_deg", "population"])
            for la, lo, p in zip(self.lat_deg, self.lon_deg, self.population):
                w.writerow([repr(float(la)), repr(float(lo)), repr(float(p))])


def assign_cells(positions: np.ndarray, grid: PopulationGrid) -> np.ndarray:
    """Population served by each satellite: every cell goes to the satellite
    whose sub-satellite point is nearest on the sphere (lowest index on ties)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(positions) == 0:
        raise ValueError("need at least one satellite")
    pop = np.zeros(len(positions))
    if len(grid) == 0:
        return pop
    sub = positions / np.linalg.norm(positions, axis=1, keepdims=True)
    owner = np.argmax(grid.unit @ sub.T, axis=1)
    np.add.at(pop, owner, grid.population)
    return pop


def generation_rate(pop: float, params: TrafficParams, local_hour: int) -> float:
    """Offered upload rate in bit/s of a satellite serving ``pop`` people."""
    return pop * params.devices_per_person * params.rate_per_device_bps * params.diurnal[local_hour % 24]


class TrafficModel:
    def __init__(self, grid: PopulationGrid, params: TrafficParams):
        self.grid = grid
        self.params = params
        self._diurnal = np.asarray(params.diurnal)

    def rates(self, positions: np.ndarray, utc_s: float) -> np.ndarray:
        """Per-satellite offered rate (bit/s) at the given instant."""
        pop = assign_cells(positions, self.grid)
        lons = subpoint_longitudes(np.asarray(positions).reshape(-1, 3))
        hours = [local_solar_hour(float(lo), utc_s) for lo in lons]
        scale = self.params.devices_per_person * self.params.rate_per_device_bps
        return pop * scale * self._diurnal[hours]
