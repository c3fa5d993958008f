"""Hierarchical location encoder: Equal Earth projection, per-branch random
Fourier features, per-branch MLPs, element-wise sum, L2 normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .geodesy import GpsCoord, coords_to_array, eep_project_array
from .net import ActivationTape, Mlp, init_mlp
from .posenc import RffLayer, SigmaSchedule, init_rff, rff_encode, sigma_schedule


@dataclass(frozen=True)
class EncoderConfig:
    M: int = 3
    sigma_min: float = 1.0
    sigma_max: float = 256.0
    rff_dim: int = 512
    hidden_dim: int = 1024
    n_hidden: int = 4
    embed_dim: int = 512
    seed: int = 0


class LocationEncoder:
    """M branches of (frozen RFF layer, trainable MLP) summed into one embedding."""

    def __init__(
        self,
        schedule: SigmaSchedule,
        branches: list[tuple[RffLayer, Mlp]],
        config: EncoderConfig,
    ):
        assert len(branches) == schedule.M
        self.schedule = schedule
        self.branches = branches
        self.config = config
        self.embed_dim = config.embed_dim

    @classmethod
    def create(cls, config: EncoderConfig) -> "LocationEncoder":
        schedule = sigma_schedule(config.sigma_min, config.sigma_max, config.M)
        mlp_dims = (
            [config.rff_dim]
            + [config.hidden_dim] * config.n_hidden
            + [config.embed_dim]
        )
        mlp_rng = np.random.default_rng([config.seed, 1])
        branches = []
        for i, sigma in enumerate(schedule.values, start=1):
            rff = init_rff(config.rff_dim, sigma, config.seed + i)
            branches.append((rff, init_mlp(mlp_dims, mlp_rng)))
        return cls(schedule, branches, config)

    def trainable_mlps(self) -> list[Mlp]:
        return [mlp for _, mlp in self.branches]

    def astype(self, dtype) -> "LocationEncoder":
        for _, mlp in self.branches:
            mlp.astype(dtype)
        return self

    def forward_raw(
        self, latlon: np.ndarray, with_tape: bool = False
    ) -> tuple[np.ndarray, list[ActivationTape] | None]:
        """Pre-normalization branch sum over an (N, 2) degree-coordinate batch."""
        p = eep_project_array(latlon)
        total = None
        tapes = [] if with_tape else None
        dtype = self.branches[0][1].layers[0].W.dtype
        for rff, mlp in self.branches:
            y, tape = mlp.forward(rff_encode(rff, p, dtype=dtype), want_tape=with_tape)
            if total is None:
                total = y
            else:
                total += y
            if with_tape:
                tapes.append(tape)
        return total, tapes

    def backward_raw(
        self, tapes: list[ActivationTape], dv: np.ndarray
    ) -> list[list[tuple[np.ndarray, np.ndarray]]]:
        """Per-branch parameter gradients of the branch sum; dv is (N, embed_dim)."""
        grads = []
        for (_, mlp), tape in zip(self.branches, tapes):
            _, g = mlp.backward(tape, dv)
            grads.append(g)
        return grads

    def encode_array(self, latlon: np.ndarray) -> np.ndarray:
        """Unit-norm embeddings for an (N, 2) array of degree coordinates."""
        v, _ = self.forward_raw(np.asarray(latlon, dtype=np.float64))
        sq = np.einsum("...i,...i->...", v, v, dtype=np.float64)
        bad = np.flatnonzero(np.atleast_1d(sq) == 0.0)
        if bad.size:
            raise DegenerateInputError(
                f"zero embedding vector at batch index {bad[0]}"
            )
        return v / np.sqrt(sq)[..., None].astype(v.dtype)


def encode_gps(enc: LocationEncoder, g: GpsCoord) -> np.ndarray:
    """Unit-norm embedding of a single coordinate."""
    return enc.encode_array(np.array([[g.lat_deg, g.lon_deg]]))[0]


def encode_gps_batch(enc: LocationEncoder, coords) -> np.ndarray:
    """Row k is encode_gps(enc, coords[k]); numerically identical to the scalar path."""
    if len(coords) == 0:
        raise DegenerateInputError("empty coordinate batch")
    return enc.encode_array(coords_to_array(coords))
