"""Similarity maps: score a query embedding against a grid of coordinates."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .fileio import _atomic_write
from .geodesy import coords_to_array
from .locenc import LocationEncoder


def make_grid(step_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center grid covering the globe: (lats desc, lons asc)."""
    if step_deg <= 0 or step_deg > 180:
        raise InvalidInputError("grid step must be in (0, 180] degrees")
    lats = np.arange(90.0 - step_deg / 2.0, -90.0, -step_deg)
    lons = np.arange(-180.0 + step_deg / 2.0, 180.0, step_deg)
    return lats, lons


def heatmap_scores(query: np.ndarray, grid, encoder: LocationEncoder) -> np.ndarray:
    """Dot product of the query with the encoding of every grid coordinate."""
    query = np.asarray(query, dtype=np.float64)
    if abs(np.linalg.norm(query) - 1.0) > 1e-6:
        raise InvalidInputError("query must be unit-norm")
    latlon = grid if isinstance(grid, np.ndarray) else coords_to_array(grid)
    return encoder.encode_array(latlon) @ query


def write_heatmap_csv(path, latlon: np.ndarray, scores: np.ndarray) -> None:
    lines = ["lat,lon,score"]
    for (lat, lon), s in zip(latlon, scores):
        lines.append(f"{float(lat)!r},{float(lon)!r},{float(s)!r}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_heatmap_pgm(path, score_grid: np.ndarray) -> None:
    """Plain-text PGM raster (rows north to south), scores scaled to 0..255."""
    g = np.asarray(score_grid, dtype=np.float64)
    lo, hi = g.min(), g.max()
    pix = np.zeros(g.shape, dtype=np.int64) if hi == lo else np.rint(
        (g - lo) / (hi - lo) * 255.0
    ).astype(np.int64)
    lines = ["P2", f"{g.shape[1]} {g.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in pix]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
