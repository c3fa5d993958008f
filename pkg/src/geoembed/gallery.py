"""GPS gallery construction, exact top-k retrieval, radius restriction, and
geodesic threshold metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    EmptyRestrictionError,
    InvalidConfigError,
    InvalidInputError,
)
from .geodesy import GpsCoord, coords_to_array, geodesic_distance_km_array
from .locenc import LocationEncoder

DEFAULT_THRESHOLDS_KM = (1.0, 25.0, 200.0, 750.0, 2500.0)

_SCORE_BLOCK = 65536  # rows per block in the exact dot-product scan


@dataclass
class GalleryIndex:
    """Paired coordinate array (N, 2) and unit-norm embedding matrix (N, D)."""

    coords: np.ndarray
    embeddings: np.ndarray
    provenance: str = "train-sample"

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 2)
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if len(self.coords) != len(self.embeddings) or len(self.coords) == 0:
            raise InvalidInputError("gallery needs equal-length, nonempty arrays")
        norms = np.linalg.norm(self.embeddings, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-6:
            raise InvalidInputError("gallery embedding rows must be unit-norm")

    def __len__(self) -> int:
        return len(self.coords)


def build_gallery(
    coords, encoder: LocationEncoder, provenance: str = "train-sample"
) -> GalleryIndex:
    """Encode every coordinate with the trained encoder."""
    arr = coords if isinstance(coords, np.ndarray) else coords_to_array(coords)
    return GalleryIndex(arr, encoder.encode_array(arr), provenance)


def sample_training_coords(all_coords, k: int, seed: int) -> list[GpsCoord]:
    """Uniform sample without replacement, deterministic per seed."""
    pool = list(all_coords)
    if k < 1 or k > len(pool):
        raise InvalidConfigError(f"k must be in [1, {len(pool)}], got {k}")
    idx = np.random.default_rng(seed).choice(len(pool), size=k, replace=False)
    return [pool[i] for i in idx]


def _scores(query: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    out = np.empty(len(embeddings))
    for start in range(0, len(embeddings), _SCORE_BLOCK):
        block = embeddings[start : start + _SCORE_BLOCK]
        out[start : start + len(block)] = block @ query
    return out


def retrieve_topk(
    query: np.ndarray, gallery: GalleryIndex, k: int
) -> list[tuple[GpsCoord, float]]:
    """k entries with the largest dot products, descending; ties go to the
    lowest gallery index."""
    query = np.asarray(query, dtype=np.float64)
    if abs(np.linalg.norm(query) - 1.0) > 1e-6:
        raise InvalidInputError("query must be unit-norm")
    if not 1 <= k <= len(gallery):
        raise InvalidConfigError(f"k must be in [1, {len(gallery)}], got {k}")
    scores = _scores(query, gallery.embeddings)
    # Stable sort on -scores keeps the lowest index first among ties.
    order = np.argsort(-scores, kind="stable")[:k]
    return [
        (GpsCoord(*gallery.coords[i]), float(scores[i])) for i in order
    ]


def retrieve_top1_batch(queries: np.ndarray, gallery: GalleryIndex) -> np.ndarray:
    """Top-1 predicted coordinates, one row per query; same tie rule as topk."""
    queries = np.asarray(queries, dtype=np.float64)
    best_scores = np.full(len(queries), -np.inf)
    best_idx = np.zeros(len(queries), dtype=np.int64)
    for start in range(0, len(gallery), _SCORE_BLOCK):
        block = gallery.embeddings[start : start + _SCORE_BLOCK]
        S = queries @ block.T
        bi = np.argmax(S, axis=1)  # first maximum -> lowest index within block
        bs = S[np.arange(len(queries)), bi]
        upd = bs > best_scores  # strict: earlier blocks win ties
        best_idx[upd] = start + bi[upd]
        best_scores[upd] = bs[upd]
    return gallery.coords[best_idx]


def average_views(queries) -> np.ndarray:
    """Mean of unit-norm query vectors, re-normalized (Ten-Crop style fusion)."""
    Q = np.asarray(queries, dtype=np.float64)
    if Q.ndim != 2 or len(Q) == 0:
        raise InvalidInputError("need a nonempty list of vectors")
    if np.max(np.abs(np.linalg.norm(Q, axis=1) - 1.0)) > 1e-6:
        raise InvalidInputError("view vectors must be unit-norm")
    mean = Q.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateInputError("view vectors average to the zero vector")
    return mean / norm


def restrict_gallery(
    gallery: GalleryIndex, center: GpsCoord, radius_km: float
) -> GalleryIndex:
    """Keep entries within radius_km (geodesic) of center; order preserved."""
    if radius_km <= 0:
        raise InvalidConfigError("radius_km must be positive")
    c = np.array([center.lat_deg, center.lon_deg])
    dists = geodesic_distance_km_array(gallery.coords, c[None, :])
    keep = dists <= radius_km
    if not np.any(keep):
        raise EmptyRestrictionError(
            f"no gallery entries within {radius_km} km of ({center.lat_deg}, "
            f"{center.lon_deg}); widen the radius"
        )
    return GalleryIndex(
        gallery.coords[keep], gallery.embeddings[keep], provenance="restricted"
    )


@dataclass(frozen=True)
class ThresholdReport:
    thresholds_km: tuple[float, ...]
    accuracies_pct: tuple[float, ...]
    query_count: int

    def as_dict(self) -> dict:
        return {
            "query_count": self.query_count,
            "accuracy_pct": {
                f"{t:g}km": a
                for t, a in zip(self.thresholds_km, self.accuracies_pct)
            },
        }


def threshold_accuracy(
    pred, truth, thresholds_km=DEFAULT_THRESHOLDS_KM
) -> ThresholdReport:
    """Percentage of predictions within each geodesic threshold of the truth."""
    p = pred if isinstance(pred, np.ndarray) else coords_to_array(pred)
    t = truth if isinstance(truth, np.ndarray) else coords_to_array(truth)
    if p.shape != t.shape or len(p) == 0:
        raise InvalidInputError("pred/truth must be nonempty and equal-length")
    dists = geodesic_distance_km_array(p, t)
    accs = tuple(
        float(100.0 * np.count_nonzero(dists <= thr) / len(dists))
        for thr in thresholds_km
    )
    return ThresholdReport(tuple(float(x) for x in thresholds_km), accs, len(dists))
