"""Random Fourier Feature encoding and the exponential sigma schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError


@dataclass(frozen=True)
class SigmaSchedule:
    sigma_min: float
    sigma_max: float
    M: int
    values: tuple[float, ...]


def sigma_schedule(sigma_min: float, sigma_max: float, M: int) -> SigmaSchedule:
    """Geometric ladder of M sigma values from sigma_min to sigma_max.

    sigma_i = 2^(log2(smin) + (i-1) * (log2(smax) - log2(smin)) / (M-1)).
    """
    if sigma_min <= 0 or sigma_max < sigma_min or M < 1:
        raise InvalidConfigError(
            f"need 0 < sigma_min <= sigma_max and M >= 1, got "
            f"({sigma_min}, {sigma_max}, {M})"
        )
    if M == 1:
        if sigma_min != sigma_max:
            raise InvalidConfigError("M=1 requires sigma_min == sigma_max")
        return SigmaSchedule(sigma_min, sigma_max, 1, (float(sigma_min),))
    lo, hi = math.log2(sigma_min), math.log2(sigma_max)
    values = tuple(2.0 ** (lo + i * (hi - lo) / (M - 1)) for i in range(M))
    return SigmaSchedule(float(sigma_min), float(sigma_max), M, values)


@dataclass
class RffLayer:
    """Frozen Gaussian frequency matrix; maps 2-vectors to dim_out features."""

    R: np.ndarray  # (dim_out // 2, 2), immutable after construction
    sigma: float
    dim_out: int
    seed: int

    def __post_init__(self):
        self.R = np.ascontiguousarray(self.R, dtype=np.float64)
        self.R.flags.writeable = False


def init_rff(dim_out: int, sigma: float, seed: int) -> RffLayer:
    """Sample the (dim_out/2, 2) frequency matrix with i.i.d. N(0, sigma) entries."""
    if dim_out < 2 or dim_out % 2 != 0:
        raise InvalidConfigError(f"dim_out must be even and >= 2, got {dim_out}")
    rng = np.random.default_rng(seed)
    R = rng.normal(0.0, sigma, size=(dim_out // 2, 2))
    return RffLayer(R, float(sigma), dim_out, seed)


def rff_encode(layer: RffLayer, p, dtype=np.float64) -> np.ndarray:
    """Encode projected coordinates as [cos(2*pi*R*p), sin(2*pi*R*p)].

    Accepts a ProjectedCoord, a 2-vector, or an (N, 2) batch; the cos block
    comes first. The phase is always computed in float64; trig runs in `dtype`.
    """
    if hasattr(p, "x"):
        p = (p.x, p.y)
    p = np.asarray(p, dtype=np.float64)
    phase = (2.0 * np.pi * (p @ layer.R.T)).astype(dtype, copy=False)
    out = np.empty(phase.shape[:-1] + (2 * phase.shape[-1],), dtype=dtype)
    half = phase.shape[-1]
    np.cos(phase, out=out[..., :half])
    np.sin(phase, out=out[..., half:])
    return out
