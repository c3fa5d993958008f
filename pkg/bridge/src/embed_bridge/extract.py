"""Offline feature extraction: manifest of geotagged images in, embedding
container plus coordinate CSV out. The backbone stays frozen; features are
raw (not normalized) so the downstream head remains trainable.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .augment import augment_view
from .backbones import load_backbone
from .formats import write_coord_csv, write_embeddings


@dataclass
class ExtractionManifest:
    items: list  # of (path, lat, lon)
    model: str = "tiny"
    views: int = 1
    augmentation: str = "none"

    def __post_init__(self):
        if self.views < 1:
            raise ValueError("views must be >= 1")
        if self.views > 1 and self.augmentation == "none":
            # identical views are allowed but almost always a mistake
            print(
                "warning: views > 1 with augmentation=none produces duplicate rows",
                file=sys.stderr,
            )

    @classmethod
    def load(cls, path) -> "ExtractionManifest":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        items = [(it["path"], float(it["lat"]), float(it["lon"])) for it in raw["items"]]
        return cls(
            items=items,
            model=raw.get("model", "tiny"),
            views=int(raw.get("views", 1)),
            augmentation=raw.get("augmentation", "none"),
        )


@dataclass
class ExtractionResult:
    features: np.ndarray  # (accepted * views, dim)
    records: list  # of (id, lat, lon) for accepted images
    rejects: list = field(default_factory=list)  # of (path, reason)


def extract_image_embeddings(
    manifest: ExtractionManifest, backbone=None, seed: int = 0
) -> ExtractionResult:
    """Encode every manifest image into `views` feature rows.

    Undecodable or missing images are skipped with a warning and recorded in
    the rejects list; record order otherwise matches the manifest.
    """
    if backbone is None:
        backbone = load_backbone(manifest.model)
    rows, records, rejects = [], [], []
    for idx, (path, lat, lon) in enumerate(manifest.items):
        try:
            with Image.open(path) as img:
                img.load()
                for view in range(manifest.views):
                    aug = augment_view(img, seed, idx, view, manifest.augmentation)
                    rows.append(backbone.encode_image(aug))
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            rejects.append((str(path), str(exc)))
            continue
        records.append((Path(path).name, lat, lon))
    features = (
        np.stack(rows) if rows else np.zeros((0, 0), dtype=np.float64)
    )
    if features.size and not np.all(np.isfinite(features)):
        raise RuntimeError("backbone produced non-finite features")
    return ExtractionResult(features, records, rejects)


def extract_text_embedding(prompt: str, backbone=None, model: str = "tiny") -> np.ndarray:
    """One raw text-feature row; the trained image head is applied downstream."""
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be nonempty")
    if backbone is None:
        backbone = load_backbone(model)
    return backbone.encode_text(prompt)[None, :]


def write_extraction(result: ExtractionResult, out_path, views: int) -> None:
    out_path = Path(out_path)
    write_embeddings(result.features, out_path, views_per_record=views)
    write_coord_csv(out_path.with_suffix(".csv"), result.records)
    if result.rejects:
        rej_path = out_path.with_suffix(".rejects.txt")
        rej_path.write_text(
            "".join(f"{p}\t{reason}\n" for p, reason in result.rejects),
            encoding="utf-8",
        )
