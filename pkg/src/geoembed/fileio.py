"""File formats: the binary embedding container, coordinate CSVs, and model
checkpoints.

All binary layouts are little-endian regardless of host. Payload floats are
32-bit in embedding files and 64-bit in checkpoints (checkpoints must
round-trip bit-identical forward outputs). Writes go to a temp file followed
by an atomic rename.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CorruptionError, FormatError, InvalidInputError
from .locenc import EncoderConfig, LocationEncoder
from .net import DenseLayer, Mlp, TemperatureParam
from .posenc import RffLayer, sigma_schedule
from .trainer import TrainState

EMBED_MAGIC = b"GCEB"
EMBED_VERSION = 1
_EMBED_HEADER = struct.Struct("<4sIQII")  # magic, version, count, dim, views

CKPT_MAGIC = b"GCKP"
CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sIQ")  # magic, version, meta length


def _atomic_write(path, payload: bytes) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


@dataclass
class EmbeddingFile:
    """count x dim float32 rows; consecutive groups of `views_per_record` rows
    belong to one record."""

    vectors: np.ndarray
    views_per_record: int = 1

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def records(self) -> int:
        return self.count // self.views_per_record


def write_embeddings(data, path, views_per_record: int = 1) -> None:
    if isinstance(data, EmbeddingFile):
        vectors, views_per_record = data.vectors, data.views_per_record
    else:
        vectors = data
    vectors = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
    if vectors.ndim != 2:
        raise InvalidInputError("embedding payload must be a 2-D array")
    count, dim = vectors.shape
    if views_per_record < 1 or count % views_per_record != 0:
        raise InvalidInputError(
            f"count {count} not divisible by views_per_record {views_per_record}"
        )
    header = _EMBED_HEADER.pack(EMBED_MAGIC, EMBED_VERSION, count, dim, views_per_record)
    _atomic_write(path, header + vectors.astype("<f4", copy=False).tobytes(order="C"))


def read_embeddings(path) -> EmbeddingFile:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _EMBED_HEADER.size:
        raise CorruptionError(f"{path}: truncated header")
    magic, version, count, dim, views = _EMBED_HEADER.unpack_from(raw)
    if magic != EMBED_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != EMBED_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if views < 1 or (count and count % views != 0):
        raise FormatError(f"{path}: count {count} not divisible by views {views}")
    expected = count * dim * 4
    payload = raw[_EMBED_HEADER.size :]
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim).astype(
        np.float32
    )
    return EmbeddingFile(vectors, views)


def write_coord_csv(path, coords, ids=None) -> None:
    """UTF-8 CSV with header id,lat,lon; floats use shortest round-trip repr."""
    coords = np.asarray(
        coords if isinstance(coords, np.ndarray) else
        [(c.lat_deg, c.lon_deg) for c in coords],
        dtype=np.float64,
    ).reshape(-1, 2)
    if ids is None:
        ids = range(len(coords))
    rows = ["id,lat,lon"]
    for rid, (lat, lon) in zip(ids, coords):
        rows.append(f"{rid},{float(lat)!r},{float(lon)!r}")
    _atomic_write(path, ("\n".join(rows) + "\n").encode("utf-8"))


def read_coord_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != ["id", "lat", "lon"]:
            raise FormatError(f"{path}: expected header id,lat,lon, got {header}")
        ids, latlon = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}: bad row {row}")
            ids.append(row[0])
            latlon.append((float(row[1]), float(row[2])))
    return ids, np.asarray(latlon, dtype=np.float64).reshape(-1, 2)


def _flatten_model_arrays(encoder: LocationEncoder, head: Mlp):
    arrays = []
    for bi, (rff, mlp) in enumerate(encoder.branches):
        arrays.append((f"branch{bi}/rff_R", rff.R))
        for li, layer in enumerate(mlp.layers):
            arrays.append((f"branch{bi}/mlp{li}/W", layer.W))
            arrays.append((f"branch{bi}/mlp{li}/b", layer.b))
    for li, layer in enumerate(head.layers):
        arrays.append((f"head{li}/W", layer.W))
        arrays.append((f"head{li}/b", layer.b))
    return arrays


def save_checkpoint(
    path,
    encoder: LocationEncoder,
    head: Mlp,
    temp: TemperatureParam,
    rng_states: dict | None = None,
) -> None:
    arrays = _flatten_model_arrays(encoder, head)
    meta = {
        "format_version": CKPT_VERSION,
        "encoder_config": asdict(encoder.config),
        "sigma_values": list(encoder.schedule.values),
        "rff_seeds": [rff.seed for rff, _ in encoder.branches],
        "head_dims": [head.n_in] + [layer.n_out for layer in head.layers],
        "param_dtype": str(head.layers[0].W.dtype),
        "log_inv_tau": temp.log_inv_tau,
        "rng_states": rng_states,
        "arrays": [
            {"name": name, "shape": list(arr.shape)} for name, arr in arrays
        ],
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    blob = bytearray(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, len(meta_bytes)))
    blob += meta_bytes
    for _, arr in arrays:
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C")
    _atomic_write(path, bytes(blob))


def load_checkpoint(path):
    """Rebuild (encoder, head, temperature, rng_states) from a checkpoint."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _CKPT_HEADER.size:
        raise CorruptionError(f"{path}: truncated header")
    magic, version, meta_len = _CKPT_HEADER.unpack_from(raw)
    if magic != CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CKPT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    try:
        meta = json.loads(raw[_CKPT_HEADER.size : _CKPT_HEADER.size + meta_len])
    except ValueError as exc:
        raise CorruptionError(f"{path}: unreadable metadata") from exc

    offset = _CKPT_HEADER.size + meta_len
    loaded = {}
    for spec in meta["arrays"]:
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        chunk = raw[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptionError(f"{path}: truncated array {spec['name']}")
        loaded[spec["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise CorruptionError(f"{path}: {len(raw) - offset} trailing bytes")

    config = EncoderConfig(**meta["encoder_config"])
    schedule = sigma_schedule(config.sigma_min, config.sigma_max, config.M)
    dtype = np.dtype(meta.get("param_dtype", "float64"))

    def dense(prefix):
        return DenseLayer(
            loaded[f"{prefix}/W"].astype(dtype), loaded[f"{prefix}/b"].astype(dtype)
        )

    branches = []
    for bi, (sigma, seed) in enumerate(zip(schedule.values, meta["rff_seeds"])):
        rff = RffLayer(loaded[f"branch{bi}/rff_R"], sigma, config.rff_dim, seed)
        layers = []
        li = 0
        while f"branch{bi}/mlp{li}/W" in loaded:
            layers.append(dense(f"branch{bi}/mlp{li}"))
            li += 1
        branches.append((rff, Mlp(layers)))
    encoder = LocationEncoder(schedule, branches, config)

    head_layers = []
    li = 0
    while f"head{li}/W" in loaded:
        head_layers.append(dense(f"head{li}"))
        li += 1
    head = Mlp(head_layers)

    temp = TemperatureParam()
    temp.log_inv_tau = float(meta["log_inv_tau"])
    return encoder, head, temp, meta.get("rng_states")


def save_train_state(path, state: TrainState) -> None:
    save_checkpoint(path, state.encoder, state.head, state.temp, state.rng_states())
