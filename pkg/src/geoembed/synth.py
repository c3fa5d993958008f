"""Synthetic worlds for end-to-end experiments and fixtures.

Geography mimics photo datasets: a set of cities scattered over the globe,
each with a handful of popular sites, and observations jittered a few hundred
meters around a site. Image features are produced by a frozen random teacher
location encoder, lifted into feature space and perturbed with Gaussian noise,
so a trained student must recover the teacher's spatial structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geodesy import fibonacci_lattice, coords_to_array, perturb_array
from .locenc import EncoderConfig, LocationEncoder
from .trainer import TrainingSet

DEFAULT_TEACHER = EncoderConfig(
    M=3,
    sigma_min=1.0,
    sigma_max=256.0,
    rff_dim=128,
    hidden_dim=256,
    n_hidden=2,
    embed_dim=256,
    seed=0,
)


@dataclass
class SyntheticWorld:
    train_coords: np.ndarray  # (N, 2)
    train_features: np.ndarray  # (N, P, F)
    test_coords: np.ndarray  # (K, 2)
    test_features: np.ndarray  # (K, P, F)
    teacher: LocationEncoder = field(repr=False)
    lift: np.ndarray = field(repr=False)  # (F, teacher embed dim)

    def training_set(self) -> TrainingSet:
        return TrainingSet(self.train_features, self.train_coords)


def _sample_observations(sites, n, jitter_km, pick_rng, jitter_rng):
    n_sites = sites.shape[0]
    chosen = sites[pick_rng.integers(0, n_sites, size=n)]
    return perturb_array(chosen, jitter_km * 1000.0, jitter_rng)


def make_synthetic_world(
    n_train: int = 5000,
    n_test: int = 500,
    seed: int = 0,
    n_cities: int = 64,
    sites_per_city: int = 12,
    city_radius_km: float = 25.0,
    site_jitter_km: float = 0.3,
    feature_dim: int = 768,
    feature_noise: float = 0.01,
    views: int = 1,
    teacher_config: EncoderConfig | None = None,
) -> SyntheticWorld:
    if teacher_config is None:
        teacher_config = DEFAULT_TEACHER
    teacher_config = EncoderConfig(
        **{**teacher_config.__dict__, "seed": seed + 90_001}
    )
    teacher = LocationEncoder.create(teacher_config)

    city_rng = np.random.default_rng([seed, 11])
    site_rng = np.random.default_rng([seed, 12])
    pick_rng = np.random.default_rng([seed, 13])
    jitter_rng = np.random.default_rng([seed, 14])
    feat_rng = np.random.default_rng([seed, 15])

    # Cities cover the globe; sites scatter around each city center.
    centers = coords_to_array(fibonacci_lattice(n_cities))
    centers = perturb_array(centers, 150_000.0, city_rng)
    sites = perturb_array(
        np.repeat(centers, sites_per_city, axis=0), city_radius_km * 1000.0, site_rng
    )

    train_coords = _sample_observations(
        sites, n_train, site_jitter_km, pick_rng, jitter_rng
    )
    test_coords = _sample_observations(
        sites, n_test, site_jitter_km, pick_rng, jitter_rng
    )

    # Norm-preserving lift from teacher embedding space into feature space:
    # orthonormal columns when the feature space is wide enough, otherwise a
    # scaled Gaussian random projection.
    raw = feat_rng.standard_normal((feature_dim, teacher_config.embed_dim))
    if feature_dim >= teacher_config.embed_dim:
        lift, _ = np.linalg.qr(raw)
    else:
        lift = raw / np.sqrt(teacher_config.embed_dim)

    def features_for(coords: np.ndarray) -> np.ndarray:
        emb = teacher.encode_array(coords)
        base = emb @ lift.T  # (n, F)
        stack = np.stack([base] * views, axis=1)
        return stack + feat_rng.normal(0.0, feature_noise, size=stack.shape)

    return SyntheticWorld(
        train_coords=train_coords,
        train_features=features_for(train_coords),
        test_coords=test_coords,
        test_features=features_for(test_coords),
        teacher=teacher,
        lift=lift,
    )
