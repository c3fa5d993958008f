"""Coordinate transforms, geodesic distance, perturbation, and sphere sampling.

Conventions: latitude/longitude are degrees, latitude in [-90, 90] and
longitude wrapped into [-180, 180). Projected coordinates are dimensionless
with |x| <= 1. Distances are kilometers on a sphere of radius 6371 km.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, RejectedInputError

EARTH_RADIUS_KM = 6371.0

# Equal Earth polynomial coefficients.
EEP_P1 = 1.340264
EEP_P2 = -0.081106
EEP_P3 = 0.000893
EEP_P4 = 0.003796

_SQRT3 = math.sqrt(3.0)
# Normalizer: raw x evaluated at (lat=0, lon=pi), so x spans [-1, 1].
EEP_X_MAX = 2.0 * _SQRT3 * math.pi / (3.0 * EEP_P1)

# Meters of north-south displacement per degree of latitude.
_METERS_PER_DEG = 111_320.0
_MIN_COS_LAT = 0.01

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def wrap_lon(lon_deg):
    """Wrap longitude into [-180, 180). Works on scalars and arrays."""
    return (np.asarray(lon_deg) + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class GpsCoord:
    """A point on the globe in degrees. Longitude is wrapped on construction."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (-90.0 <= self.lat_deg <= 90.0) or not math.isfinite(self.lon_deg):
            raise InvalidInputError(
                f"invalid coordinate ({self.lat_deg}, {self.lon_deg})"
            )
        object.__setattr__(self, "lon_deg", float(wrap_lon(self.lon_deg)))
        object.__setattr__(self, "lat_deg", float(self.lat_deg))


@dataclass(frozen=True)
class ProjectedCoord:
    x: float
    y: float


def coords_to_array(coords) -> np.ndarray:
    """Stack GpsCoord objects into an (N, 2) float64 array of (lat, lon)."""
    return np.array([(c.lat_deg, c.lon_deg) for c in coords], dtype=np.float64).reshape(
        -1, 2
    )


def array_to_coords(latlon: np.ndarray) -> list[GpsCoord]:
    return [GpsCoord(float(lat), float(lon)) for lat, lon in np.asarray(latlon)]


def eep_project_array(latlon: np.ndarray) -> np.ndarray:
    """Equal Earth projection of (N, 2) degree coordinates, scaled to |x| <= 1.

    x is driven by longitude, y by latitude; both are divided by the raw x
    value at (0 deg, 180 deg) so the longitude axis spans exactly [-1, 1] and
    latitude is scaled by the same factor.
    """
    latlon = np.asarray(latlon, dtype=np.float64)
    phi = np.radians(latlon[..., 0])
    lam = np.radians(latlon[..., 1])
    theta = np.arcsin(0.5 * _SQRT3 * np.sin(phi))
    t2 = theta * theta
    denom = 3.0 * (((9.0 * EEP_P4 * t2 + 7.0 * EEP_P3) * t2 * t2 + 3.0 * EEP_P2) * t2 + EEP_P1)
    x = 2.0 * _SQRT3 * lam * np.cos(theta) / denom
    y = ((((EEP_P4 * t2 + EEP_P3) * t2) * t2 + EEP_P2) * t2 + EEP_P1) * theta
    return np.stack([x, y], axis=-1) / EEP_X_MAX


def eep_project(coord: GpsCoord) -> ProjectedCoord:
    xy = eep_project_array(np.array([[coord.lat_deg, coord.lon_deg]]))[0]
    return ProjectedCoord(float(xy[0]), float(xy[1]))


def geodesic_distance_km_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Haversine great-circle distance between paired (lat, lon) rows, in km."""
    a = np.radians(np.asarray(a, dtype=np.float64))
    b = np.radians(np.asarray(b, dtype=np.float64))
    dphi = b[..., 0] - a[..., 0]
    dlam = b[..., 1] - a[..., 1]
    h = (
        np.sin(0.5 * dphi) ** 2
        + np.cos(a[..., 0]) * np.cos(b[..., 0]) * np.sin(0.5 * dlam) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def geodesic_distance_km(a: GpsCoord, b: GpsCoord) -> float:
    return float(
        geodesic_distance_km_array(
            np.array([a.lat_deg, a.lon_deg]), np.array([b.lat_deg, b.lon_deg])
        )
    )


def perturb_array(
    latlon: np.ndarray, sigma_meters: float, rng: np.random.Generator
) -> np.ndarray:
    """Add independent N(0, sigma) meter displacements north and east.

    Meters convert to degrees via the local tangent plane; cos(lat) is floored
    at 0.01 so longitude noise stays bounded near the poles. Latitude is
    clamped and longitude wrapped afterwards.
    """
    if sigma_meters < 0:
        raise InvalidInputError("sigma_meters must be >= 0")
    latlon = np.asarray(latlon, dtype=np.float64)
    noise = rng.normal(0.0, sigma_meters, size=latlon.shape)
    dlat = noise[..., 0] / _METERS_PER_DEG
    cos_lat = np.maximum(np.cos(np.radians(latlon[..., 0])), _MIN_COS_LAT)
    dlon = noise[..., 1] / (_METERS_PER_DEG * cos_lat)
    lat = np.clip(latlon[..., 0] + dlat, -90.0, 90.0)
    lon = wrap_lon(latlon[..., 1] + dlon)
    return np.stack([lat, lon], axis=-1)


def perturb_coord(
    coord: GpsCoord, sigma_meters: float, rng: np.random.Generator
) -> GpsCoord:
    lat, lon = perturb_array(
        np.array([[coord.lat_deg, coord.lon_deg]]), sigma_meters, rng
    )[0]
    return GpsCoord(float(lat), float(lon))


def fibonacci_lattice(n: int) -> list[GpsCoord]:
    """n near-uniform points on the sphere via the golden-angle spiral."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    k = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n
    lat = np.degrees(np.arcsin(z))
    lon = wrap_lon(np.degrees(k * GOLDEN_ANGLE % (2.0 * math.pi)))
    return array_to_coords(np.stack([lat, lon], axis=-1))


@dataclass
class LandMask:
    """Regular lat/lon boolean raster; row 0 is the northernmost band."""

    mask: np.ndarray  # (rows, cols) bool
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    rows: int = field(init=False)
    cols: int = field(init=False)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2 or self.lat_max <= self.lat_min or self.lon_max <= self.lon_min:
            raise InvalidInputError("mask must be 2-D with increasing bounds")
        self.rows, self.cols = self.mask.shape

    def cell_index(self, coord: GpsCoord) -> tuple[int, int]:
        lat, lon = coord.lat_deg, coord.lon_deg
        if not (self.lat_min <= lat <= self.lat_max) or not (
            self.lon_min <= lon <= self.lon_max
        ):
            raise RejectedInputError(
                f"coordinate ({lat}, {lon}) outside mask coverage"
            )
        r = int((self.lat_max - lat) / (self.lat_max - self.lat_min) * self.rows)
        c = int((lon - self.lon_min) / (self.lon_max - self.lon_min) * self.cols)
        return min(r, self.rows - 1), min(c, self.cols - 1)

    def is_land(self, coord: GpsCoord) -> bool:
        r, c = self.cell_index(coord)
        return bool(self.mask[r, c])


def land_filter(coords, mask: LandMask) -> list[GpsCoord]:
    """Keep the coordinates whose containing raster cell is land, in order."""
    return [c for c in coords if mask.is_land(c)]


def read_landmask(path) -> LandMask:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 7 or header[0] != "LANDMASK":
            raise InvalidInputError(f"bad landmask header in {path}")
        rows, cols = int(header[1]), int(header[2])
        lat_min, lat_max, lon_min, lon_max = map(float, header[3:7])
        lines = [fh.readline().strip() for _ in range(rows)]
    if any(len(line) != cols or set(line) - {"0", "1"} for line in lines):
        raise InvalidInputError(f"bad landmask raster in {path}")
    grid = np.array([[ch == "1" for ch in line] for line in lines], dtype=bool)
    return LandMask(grid, lat_min, lat_max, lon_min, lon_max)


def write_landmask(mask: LandMask, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"LANDMASK {mask.rows} {mask.cols} "
            f"{mask.lat_min!r} {mask.lat_max!r} {mask.lon_min!r} {mask.lon_max!r}\n"
        )
        for row in mask.mask:
            fh.write("".join("1" if v else "0" for v in row) + "\n")
