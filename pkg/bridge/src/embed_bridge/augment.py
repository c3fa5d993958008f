"""Per-view image augmentations: random resized crop, horizontal flip, and
color jitter, seeded per (record, view) so extraction is reproducible.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def augment_view(
    image: Image.Image, seed: int, record: int, view: int, recipe: str
) -> Image.Image:
    if recipe == "none":
        return image
    if recipe != "simclr":
        raise ValueError(f"unknown augmentation recipe {recipe!r}")
    rng = np.random.default_rng([seed, record, view])
    w, h = image.size
    # random resized crop: keep 60..100% of each side
    fw, fh = rng.uniform(0.6, 1.0, size=2)
    cw, ch = max(1, int(w * fw)), max(1, int(h * fh))
    x0 = int(rng.integers(0, w - cw + 1))
    y0 = int(rng.integers(0, h - ch + 1))
    out = image.convert("RGB").crop((x0, y0, x0 + cw, y0 + ch)).resize((w, h))
    if rng.random() < 0.5:
        out = out.transpose(Image.FLIP_LEFT_RIGHT)
    # channel-wise color jitter
    arr = np.asarray(out, dtype=np.float64)
    arr = np.clip(arr * rng.uniform(0.8, 1.2, size=3), 0.0, 255.0)
    return Image.fromarray(arr.astype(np.uint8))
