"""Writers for the embedding container and coordinate CSV consumed by the
core toolkit. Implemented standalone against the documented layout so this
package only touches the file-format boundary.

Layout: magic `GCEB`, u32 version=1, u64 count, u32 dim, u32 views-per-record
(all little-endian), then count x dim float32 values row-major.
"""

from __future__ import annotations

import os
import struct

import numpy as np

EMBED_MAGIC = b"GCEB"
EMBED_VERSION = 1
_HEADER = struct.Struct("<4sIQII")


def _atomic_write(path, payload: bytes) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_embeddings(vectors: np.ndarray, path, views_per_record: int = 1) -> None:
    vectors = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
    if vectors.ndim != 2:
        raise ValueError("expected a 2-D array of feature rows")
    count, dim = vectors.shape
    if views_per_record < 1 or count % views_per_record != 0:
        raise ValueError(
            f"count {count} not divisible by views_per_record {views_per_record}"
        )
    header = _HEADER.pack(EMBED_MAGIC, EMBED_VERSION, count, dim, views_per_record)
    _atomic_write(path, header + vectors.astype("<f4", copy=False).tobytes(order="C"))


def write_coord_csv(path, rows) -> None:
    """rows: iterable of (id, lat, lon)."""
    lines = ["id,lat,lon"]
    for rid, lat, lon in rows:
        lines.append(f"{rid},{float(lat)!r},{float(lon)!r}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
