"""Minimal dense-network kernel: linear layers, ReLU MLPs, L2 normalization,
reverse-mode gradients, Adam with decoupled weight decay, and step decay.

All math is float64. Forward passes accept a single vector or an (N, dim)
batch; gradients are summed over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    InvalidInputError,
    InvalidStateError,
    TrainingDivergenceError,
)


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    m_W: np.ndarray = field(default=None, repr=False)
    v_W: np.ndarray = field(default=None, repr=False)
    m_b: np.ndarray = field(default=None, repr=False)
    v_b: np.ndarray = field(default=None, repr=False)
    step: int = 0
    scratch_W: np.ndarray = field(default=None, repr=False, compare=False)
    scratch_b: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if np.asarray(self.W).dtype != np.float32:
            self.W = np.asarray(self.W, dtype=np.float64)
            self.b = np.asarray(self.b, dtype=np.float64)
        if self.m_W is None:
            self.m_W = np.zeros_like(self.W)
            self.v_W = np.zeros_like(self.W)
            self.m_b = np.zeros_like(self.b)
            self.v_b = np.zeros_like(self.b)

    def astype(self, dtype) -> "DenseLayer":
        """Cast parameters and optimizer state in place; returns self."""
        for name in ("W", "b", "m_W", "v_W", "m_b", "v_b"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=dtype))
        self.scratch_W = self.scratch_b = None
        return self

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


def init_dense(n_in: int, n_out: int, rng: np.random.Generator) -> DenseLayer:
    # Kaiming-style uniform fan-in scaling; biases start at zero.
    bound = math.sqrt(6.0 / n_in)
    W = rng.uniform(-bound, bound, size=(n_out, n_in))
    return DenseLayer(W, np.zeros(n_out))


@dataclass
class ActivationTape:
    """Forward cache: layer inputs and hidden ReLU masks."""

    mlp_id: int
    inputs: list  # activation entering each layer, (N, n_in_l)
    masks: list  # ReLU masks for hidden layers, (N, n_out_l) bool
    single: bool  # True if the forward input was a bare vector


class Mlp:
    """Affine + ReLU chain with a linear final layer."""

    def __init__(self, layers: list[DenseLayer]):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.n_out != nxt.n_in:
                raise InvalidInputError(
                    f"layer dims do not chain: {prev.n_out} -> {nxt.n_in}"
                )
        self.layers = layers

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    def forward(
        self, x: np.ndarray, want_tape: bool = True
    ) -> tuple[np.ndarray, ActivationTape | None]:
        dtype = self.layers[0].W.dtype
        x = np.asarray(x, dtype=dtype)
        single = x.ndim == 1
        a = x.reshape(1, -1) if single else x
        if a.shape[1] != self.n_in:
            raise InvalidInputError(
                f"input dim {a.shape[1]} != expected {self.n_in}"
            )
        inputs, masks = [], []
        last = len(self.layers) - 1
        for idx, layer in enumerate(self.layers):
            inputs.append(a)
            z = a @ layer.W.T
            z += layer.b
            if idx < last:
                if want_tape:
                    mask = z > 0.0  # subgradient 0 at exactly 0
                    a = z * mask
                    masks.append(mask)
                else:
                    a = np.maximum(z, 0.0, out=z)
            else:
                a = z
        tape = ActivationTape(id(self), inputs, masks, single) if want_tape else None
        return (a[0] if single else a), tape

    def backward(
        self, tape: ActivationTape, dy: np.ndarray
    ) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
        """Exact reverse-mode gradients; returns (dx, [(dW, db) per layer])."""
        if tape.mlp_id != id(self) or len(tape.inputs) != len(self.layers):
            raise InvalidStateError("tape does not match this network")
        dy = np.asarray(dy, dtype=self.layers[0].W.dtype)
        delta = dy.reshape(1, -1) if tape.single else dy
        if delta.shape != (tape.inputs[0].shape[0], self.n_out):
            raise InvalidStateError("gradient shape does not match tape")
        grads = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            a_in = tape.inputs[idx]
            dW = np.empty_like(layer.W)
            np.matmul(delta.T, a_in, out=dW)
            grads[idx] = (dW, delta.sum(axis=0))
            delta = delta @ layer.W
            if idx > 0:
                np.multiply(delta, tape.masks[idx - 1], out=delta)
        return (delta[0] if tape.single else delta), grads

    def astype(self, dtype) -> "Mlp":
        for layer in self.layers:
            layer.astype(dtype)
        return self


def init_mlp(dims: list[int], rng: np.random.Generator) -> Mlp:
    """Mlp with the given layer sizes, e.g. [512, 1024, 1024, 1024, 1024, 512]."""
    return Mlp([init_dense(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)])


def init_image_head(
    feature_dim: int, hidden_dim: int, embed_dim: int, rng: np.random.Generator
) -> Mlp:
    """Two trainable layers adapting frozen backbone features to the shared space."""
    return init_mlp([feature_dim, hidden_dim, embed_dim], rng)


def l2_normalize(x: np.ndarray) -> np.ndarray:
    y, _ = l2_normalize_cached(x)
    return y


def l2_normalize_cached(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalize rows (or a single vector) to unit length, keeping the norms.

    Norms always accumulate in float64 so float32 rows still come out unit to
    well under 1e-6.
    """
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    sq = np.einsum("...i,...i->...", x, x, dtype=np.float64)
    norms = np.sqrt(sq)[..., None].astype(x.dtype)
    if np.any(norms == 0.0):
        raise DegenerateInputError("cannot normalize a zero vector")
    return x / norms, norms


def l2_normalize_backward(
    y: np.ndarray, norms: np.ndarray, dy: np.ndarray
) -> np.ndarray:
    """Gradient through x -> x/||x|| given the normalized output and norms."""
    inner = np.sum(y * dy, axis=-1, keepdims=True)
    return (dy - y * inner) / norms


def _check_finite_grads(*grads) -> None:
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError("non-finite gradient")


def adam_step(
    layer: DenseLayer,
    dW: np.ndarray,
    db: np.ndarray,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """In-place bias-corrected Adam update with decoupled weight decay.

    Uses a per-layer scratch buffer so the hot path allocates nothing.
    """
    _check_finite_grads(dW, db)
    if layer.scratch_W is None:
        layer.scratch_W = np.empty_like(layer.W)
        layer.scratch_b = np.empty_like(layer.b)
    layer.step += 1
    t = layer.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v, s in (
        (layer.W, dW, layer.m_W, layer.v_W, layer.scratch_W),
        (layer.b, db, layer.m_b, layer.v_b, layer.scratch_b),
    ):
        np.multiply(m, beta1, out=m)
        np.multiply(g, 1.0 - beta1, out=s)
        m += s
        np.multiply(v, beta2, out=v)
        np.multiply(g, g, out=s)
        s *= 1.0 - beta2
        v += s
        np.divide(v, c2, out=s)
        np.sqrt(s, out=s)
        s += eps
        np.divide(m, s, out=s)
        s *= lr / c1
        p -= s
    if weight_decay:
        layer.W *= 1.0 - lr * weight_decay


def step_decay(lr0: float, gamma: float, epoch: int) -> float:
    """Learning rate after `epoch` whole-epoch decay steps: lr0 * gamma**epoch."""
    if epoch < 0:
        raise InvalidInputError("epoch must be >= 0")
    return lr0 * gamma**epoch


MIN_TAU = 0.01


class TemperatureParam:
    """Softmax temperature learned as log(1/tau), so tau stays positive."""

    def __init__(self, tau_init: float = 0.07):
        if tau_init < MIN_TAU:
            raise InvalidInputError(f"tau_init must be >= {MIN_TAU}")
        self.log_inv_tau = math.log(1.0 / tau_init)
        self.m = 0.0
        self.v = 0.0
        self.step = 0

    @property
    def tau(self) -> float:
        return math.exp(-self.log_inv_tau)

    def grad_from_dtau(self, d_tau: float) -> float:
        # Chain rule: tau = exp(-log_inv_tau).
        return -d_tau * self.tau

    def adam_step(
        self,
        grad: float,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        if not math.isfinite(grad):
            raise TrainingDivergenceError("non-finite temperature gradient")
        self.step += 1
        self.m = beta1 * self.m + (1.0 - beta1) * grad
        self.v = beta2 * self.v + (1.0 - beta2) * grad * grad
        mhat = self.m / (1.0 - beta1**self.step)
        vhat = self.v / (1.0 - beta2**self.step)
        self.log_inv_tau -= lr * mhat / (math.sqrt(vhat) + eps)
        # Keep tau >= MIN_TAU.
        self.log_inv_tau = min(self.log_inv_tau, math.log(1.0 / MIN_TAU))
