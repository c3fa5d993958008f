"""Contrastive training: InfoNCE-style loss with in-batch negatives plus a
dynamic FIFO queue of GPS negatives, per-view GPS noise, and epoch
orchestration with Adam and step decay.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InvalidConfigError,
    InvalidInputError,
    TrainingDivergenceError,
)
from .geodesy import GpsCoord, coords_to_array, perturb_array
from .locenc import EncoderConfig, LocationEncoder
from .net import (
    Mlp,
    TemperatureParam,
    adam_step,
    init_image_head,
    l2_normalize_backward,
    l2_normalize_cached,
    step_decay,
)

_UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class TrainSample:
    """One training record: P view features (P, feature_dim) and its GPS tag."""

    image_embeddings: np.ndarray
    gps: GpsCoord


class TrainingSet:
    """Dense view of the dataset: features (N, P, F) and coords (N, 2)."""

    def __init__(self, features: np.ndarray, coords: np.ndarray):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 2:
            features = features[:, None, :]
        coords = np.asarray(coords, dtype=np.float64)
        if features.shape[0] != coords.shape[0] or features.shape[0] == 0:
            raise InvalidInputError("features/coords mismatch or empty dataset")
        self.features = features
        self.coords = coords
        self.n, self.views, self.feature_dim = features.shape

    @classmethod
    def coerce(cls, dataset) -> "TrainingSet":
        if isinstance(dataset, cls):
            return dataset
        samples = list(dataset)
        if not samples:
            raise InvalidInputError("empty dataset")
        try:
            feats = np.stack(
                [np.atleast_2d(np.asarray(s.image_embeddings)) for s in samples]
            )
        except ValueError as exc:
            raise InvalidInputError("all samples must share the same view count") from exc
        coords = coords_to_array([s.gps for s in samples])
        return cls(feats, coords)


@dataclass
class TrainConfig:
    batch_size: int = 512
    views: int = 1
    queue_size: int = 4096
    sigma_eta: float = 150.0
    sigma_eta_prime: float = 1000.0
    lr: float = 3e-5
    weight_decay: float = 1e-6
    gamma: float = 0.87
    epochs: int = 10
    seed: int = 0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    tau_init: float = 0.07
    feature_dim: int = 768
    head_hidden: int = 768
    stop_grad_queue: bool = False
    dtype: str = "float64"  # "float32" roughly halves wall time per epoch

    def __post_init__(self):
        if self.sigma_eta_prime < self.sigma_eta:
            raise InvalidConfigError("sigma_eta_prime must be >= sigma_eta")
        if self.queue_size > 0 and self.batch_size > self.queue_size:
            raise InvalidConfigError("batch_size must be <= queue_size")
        if self.batch_size < 1 or self.views < 1 or self.epochs < 0:
            raise InvalidConfigError("batch_size, views >= 1 and epochs >= 0")
        if self.dtype not in ("float64", "float32"):
            raise InvalidConfigError(f"unsupported dtype {self.dtype!r}")


class GpsQueue:
    """Fixed-capacity FIFO ring of GPS coordinates."""

    def __init__(self, coords: np.ndarray):
        self.coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2).copy()
        self.capacity = self.coords.shape[0]
        self.cursor = 0  # next overwrite position == oldest entry

    @classmethod
    def init_uniform(cls, capacity: int, rng: np.random.Generator) -> "GpsQueue":
        """Warm-up fill: uniform over the full latitude/longitude range."""
        lat = rng.uniform(-90.0, 90.0, size=capacity)
        lon = rng.uniform(-180.0, 180.0, size=capacity)
        return cls(np.stack([lat, lon], axis=-1))

    def snapshot(self) -> np.ndarray:
        """Contents oldest-to-newest as an (S, 2) array."""
        return np.concatenate(
            [self.coords[self.cursor :], self.coords[: self.cursor]], axis=0
        )

    def push(self, batch: np.ndarray) -> None:
        batch = np.asarray(batch, dtype=np.float64).reshape(-1, 2)
        n = batch.shape[0]
        if n > self.capacity:
            raise InvalidConfigError(
                f"batch of {n} exceeds queue capacity {self.capacity}"
            )
        pos = (self.cursor + np.arange(n)) % self.capacity
        self.coords[pos] = batch
        self.cursor = (self.cursor + n) % self.capacity


def queue_update(queue: GpsQueue, batch_gps) -> GpsQueue:
    """Replace the oldest entries with this batch's coordinates, in order."""
    if len(batch_gps) and isinstance(batch_gps[0], GpsCoord):
        batch_gps = coords_to_array(batch_gps)
    queue.push(np.asarray(batch_gps, dtype=np.float64).reshape(-1, 2))
    return queue


def make_queue_negatives(
    queue: GpsQueue,
    encoder: LocationEncoder,
    sigma_eta_prime: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Perturb every queue coordinate and encode it; rows are unit-norm."""
    if queue.capacity == 0:
        return np.zeros((0, encoder.embed_dim))
    noisy = perturb_array(queue.snapshot(), sigma_eta_prime, rng)
    return encoder.encode_array(noisy)


def _check_unit_rows(name: str, X: np.ndarray) -> None:
    if X.shape[0] == 0:
        return
    norms = np.linalg.norm(X, axis=1)
    worst = np.max(np.abs(norms - 1.0))
    if worst > _UNIT_NORM_TOL:
        raise InvalidInputError(f"{name} rows must be unit-norm (off by {worst:.2e})")


def contrastive_loss(
    V: np.ndarray,
    L: np.ndarray,
    L_queue: np.ndarray,
    tau: float,
    views: int = 1,
    validate: bool = True,
):
    """Mean-over-samples InfoNCE loss with queue negatives, plus exact gradients.

    Row (i*views + j) of V and L holds view j of sample i. For each view the
    denominator runs over the batch locations of the same view index plus all
    queue rows. Returns (loss, dV, dL, dL_queue, d_tau).

    `validate=False` skips the unit-norm precondition so finite-difference
    probes can step off the unit sphere.
    """
    V = np.asarray(V, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    L_queue = np.asarray(L_queue, dtype=np.float64).reshape(-1, V.shape[1])
    if V.shape != L.shape or V.shape[0] % views != 0:
        raise InvalidInputError("V/L shape mismatch or row count not divisible by views")
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    if validate:
        _check_unit_rows("V", V)
        _check_unit_rows("L", L)
        _check_unit_rows("L_queue", L_queue)

    B = V.shape[0] // views
    S = L_queue.shape[0]
    diag = np.arange(B)
    loss = 0.0
    dV = np.zeros_like(V)
    dL = np.zeros_like(L)
    dLq = np.zeros_like(L_queue)
    d_tau = 0.0
    for j in range(views):
        Vj = V[j::views]
        Lj = L[j::views]
        logits = np.concatenate([Vj @ Lj.T, Vj @ L_queue.T], axis=1) / tau
        m = logits.max(axis=1, keepdims=True)
        exp_sh = np.exp(logits - m)
        Z = exp_sh.sum(axis=1, keepdims=True)
        # -log softmax at the positive (diagonal) entry.
        loss += float(
            np.sum(m.ravel() + np.log(Z.ravel()) - logits[diag, diag])
        )
        dlogits = exp_sh / Z
        dlogits[diag, diag] -= 1.0
        dlogits /= B
        d_tau += float(np.sum(dlogits * (-logits / tau)))
        dV[j::views] = (dlogits[:, :B] @ Lj + dlogits[:, B:] @ L_queue) / tau
        dL[j::views] = dlogits[:, :B].T @ Vj / tau
        dLq += dlogits[:, B:].T @ Vj / tau
    return loss / B, dV, dL, dLq, d_tau


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    mean_loss: float
    lr: float
    tau: float
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "mean_loss": self.mean_loss,
                "lr": self.lr,
                "tau": self.tau,
                "wall_ms": self.wall_ms,
            }
        )


@dataclass
class TrainState:
    """Everything the loop mutates: towers, temperature, queue, RNG streams."""

    encoder: LocationEncoder
    head: Mlp
    temp: TemperatureParam
    queue: GpsQueue
    config: TrainConfig
    shuffle_rng: np.random.Generator
    noise_rng: np.random.Generator
    queue_rng: np.random.Generator

    @classmethod
    def create(cls, config: TrainConfig) -> "TrainState":
        encoder = LocationEncoder.create(config.encoder)
        head = init_image_head(
            config.feature_dim,
            config.head_hidden,
            config.encoder.embed_dim,
            np.random.default_rng([config.seed, 5]),
        )
        if config.dtype != "float64":
            encoder.astype(np.dtype(config.dtype))
            head.astype(np.dtype(config.dtype))
        queue_rng = np.random.default_rng([config.seed, 4])
        queue = GpsQueue.init_uniform(config.queue_size, queue_rng)
        return cls(
            encoder=encoder,
            head=head,
            temp=TemperatureParam(config.tau_init),
            queue=queue,
            config=config,
            shuffle_rng=np.random.default_rng([config.seed, 2]),
            noise_rng=np.random.default_rng([config.seed, 3]),
            queue_rng=queue_rng,
        )

    def rng_states(self) -> dict:
        return {
            "shuffle": self.shuffle_rng.bit_generator.state,
            "noise": self.noise_rng.bit_generator.state,
            "queue": self.queue_rng.bit_generator.state,
        }


def _apply_grads(state: TrainState, enc_grads, head_grads, d_tau, lr) -> None:
    cfg = state.config
    for mlp, grads in zip(state.encoder.trainable_mlps(), enc_grads):
        for layer, (dW, db) in zip(mlp.layers, grads):
            adam_step(layer, dW, db, lr, weight_decay=cfg.weight_decay)
    for layer, (dW, db) in zip(state.head.layers, head_grads):
        adam_step(layer, dW, db, lr, weight_decay=cfg.weight_decay)
    state.temp.adam_step(state.temp.grad_from_dtau(d_tau), lr)


def train_epoch(
    dataset,
    encoder: LocationEncoder,
    head: Mlp,
    temp: TemperatureParam,
    queue: GpsQueue,
    config: TrainConfig,
    rng: np.random.Generator | TrainState,
    epoch: int = 0,
) -> EpochReport:
    """One pass over shuffled mini-batches; updates all trainable parameters.

    `rng` may be a TrainState (the orchestrated path, giving independent
    shuffle/noise streams) or a single Generator used for everything.
    """
    data = TrainingSet.coerce(dataset)
    if isinstance(rng, TrainState):
        state = rng
    else:
        state = TrainState(
            encoder, head, temp, queue, config, rng, rng, rng
        )
    t0 = time.perf_counter()
    cfg = config
    P = cfg.views
    if data.views != P:
        raise InvalidInputError(
            f"dataset has {data.views} views per record, config expects {P}"
        )
    lr = step_decay(cfg.lr, cfg.gamma, epoch)
    order = state.shuffle_rng.permutation(data.n)
    losses = []
    for batch_no, start in enumerate(range(0, data.n, cfg.batch_size)):
        sel = order[start : start + cfg.batch_size]
        bsz = sel.size
        feats = data.features[sel].reshape(bsz * P, data.feature_dim)
        gps_raw = data.coords[sel]
        gps_views = np.repeat(gps_raw, P, axis=0)
        gps_noisy = perturb_array(gps_views, cfg.sigma_eta, state.noise_rng)

        use_queue = queue.capacity > 0
        if use_queue:
            q_noisy = perturb_array(
                queue.snapshot(), cfg.sigma_eta_prime, state.queue_rng
            )

        # Location tower. When queue gradients are enabled the batch and queue
        # coordinates share one forward so one backward covers both.
        if use_queue and not cfg.stop_grad_queue:
            v_all, tapes = encoder.forward_raw(
                np.concatenate([gps_noisy, q_noisy], axis=0), with_tape=True
            )
            L_all, l_norms = l2_normalize_cached(v_all)
            L, Lq = L_all[: bsz * P], L_all[bsz * P :]
        else:
            v, tapes = encoder.forward_raw(gps_noisy, with_tape=True)
            L, l_norms = l2_normalize_cached(v)
            Lq = (
                encoder.encode_array(q_noisy)
                if use_queue
                else np.zeros((0, encoder.embed_dim))
            )

        # Image tower.
        y_head, head_tape = head.forward(feats)
        V, v_norms = l2_normalize_cached(y_head)

        loss, dV, dL, dLq, d_tau = contrastive_loss(V, L, Lq, temp.tau, views=P)
        if not math.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite loss in batch {batch_no} of epoch {epoch}"
            )
        losses.append(loss)

        _, head_grads = head.backward(
            head_tape, l2_normalize_backward(V, v_norms, dV)
        )
        if use_queue and not cfg.stop_grad_queue:
            d_all = l2_normalize_backward(
                L_all, l_norms, np.concatenate([dL, dLq], axis=0)
            )
            enc_grads = encoder.backward_raw(tapes, d_all)
        else:
            enc_grads = encoder.backward_raw(
                tapes, l2_normalize_backward(L, l_norms, dL)
            )
        _apply_grads(state, enc_grads, head_grads, d_tau, lr)

        if use_queue:
            queue.push(gps_raw)

    wall_ms = (time.perf_counter() - t0) * 1e3
    return EpochReport(
        epoch=epoch,
        mean_loss=float(np.mean(losses)),
        lr=lr,
        tau=temp.tau,
        wall_ms=wall_ms,
    )


def train(
    dataset,
    config: TrainConfig,
    report_path=None,
    progress=None,
) -> tuple[TrainState, list[EpochReport]]:
    """Full training run: fresh state, config.epochs passes, optional JSONL log."""
    data = TrainingSet.coerce(dataset)
    state = TrainState.create(
        replace(config, feature_dim=data.feature_dim)
        if data.feature_dim != config.feature_dim
        else config
    )
    reports = []
    sink = open(report_path, "w", encoding="utf-8") if report_path else None
    try:
        for epoch in range(config.epochs):
            report = train_epoch(
                data,
                state.encoder,
                state.head,
                state.temp,
                state.queue,
                state.config,
                state,
                epoch=epoch,
            )
            reports.append(report)
            if sink:
                sink.write(report.to_json() + "\n")
                sink.flush()
            if progress:
                progress(report)
    finally:
        if sink:
            sink.close()
    return state, reports
