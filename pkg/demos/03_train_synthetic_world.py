"""End-to-end training on a synthetic world.

A frozen random "teacher" location encoder generates image features for a
clustered world of cities and photo sites. A fresh student (location encoder
plus image head) is trained contrastively against those features, then scored
by retrieving GPS coordinates for held-out queries. Takes about a minute.

Run with: python demos/03_train_synthetic_world.py
"""

import numpy as np

from geoembed import (
    EncoderConfig,
    TrainConfig,
    build_gallery,
    l2_normalize,
    threshold_accuracy,
    train,
)
from geoembed.gallery import retrieve_top1_batch
from geoembed.synth import make_synthetic_world

print("generating synthetic world (1200 train / 200 test)...")
world = make_synthetic_world(
    n_train=1200, n_test=200, seed=8, n_cities=24, sites_per_city=8,
    feature_dim=256,
)

config = TrainConfig(
    batch_size=64,
    queue_size=256,
    epochs=10,
    lr=1e-3,
    gamma=0.85,
    seed=8,
    dtype="float32",
    stop_grad_queue=True,
    feature_dim=256,
    head_hidden=256,
    encoder=EncoderConfig(
        M=3, sigma_min=1, sigma_max=256, rff_dim=128, hidden_dim=256,
        n_hidden=2, embed_dim=128, seed=8,
    ),
)

state, reports = train(
    world.training_set(),
    config,
    progress=lambda r: print(
        f"  epoch {r.epoch}: loss={r.mean_loss:.4f} lr={r.lr:.2e} tau={r.tau:.4f}"
    ),
)

print("\nbuilding gallery from the training coordinates...")
gallery = build_gallery(world.train_coords, state.encoder)

queries, _ = state.head.forward(world.test_features.reshape(200, -1))
pred = retrieve_top1_batch(l2_normalize(queries), gallery)
report = threshold_accuracy(pred, world.test_coords)

rng = np.random.default_rng(0)
baseline = threshold_accuracy(
    gallery.coords[rng.integers(0, len(gallery), 200)], world.test_coords
)

print(f"\n{'threshold':>10} {'student':>9} {'random':>9}")
for t, a, b in zip(
    report.thresholds_km, report.accuracies_pct, baseline.accuracies_pct
):
    print(f"{t:>8.0f}km {a:>8.1f}% {b:>8.1f}%")
