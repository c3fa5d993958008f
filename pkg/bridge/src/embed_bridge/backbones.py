"""Frozen vision-language backbones.

`clip` wraps a pretrained CLIP model via transformers (weights must be
available locally or downloadable). `tiny` is a bundled deterministic
color/layout model for offline smoke tests and fixtures: images and captions
that describe their dominant colors land close together in the shared
768-dim feature space.
"""

from __future__ import annotations

import re

import numpy as np
from PIL import Image

FEATURE_DIM = 768

_TINY_SEED = 20_240

# Anchor colors for the toy text tower.
_COLOR_RGB = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 0.8, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "orange": (1.0, 0.5, 0.0),
    "purple": (0.5, 0.0, 0.8),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
    "gray": (0.5, 0.5, 0.5),
    "grey": (0.5, 0.5, 0.5),
    "brown": (0.55, 0.3, 0.1),
    "pink": (1.0, 0.6, 0.7),
}


class TinyVlm:
    """Deterministic stand-in backbone: 19-dim color/layout descriptors lifted
    to 768 dims by a fixed random projection shared by both towers."""

    name = "tiny"

    def __init__(self):
        rng = np.random.default_rng(_TINY_SEED)
        self._proj = rng.standard_normal((19, FEATURE_DIM)) / np.sqrt(19.0)

    def _lift(self, desc: np.ndarray) -> np.ndarray:
        return desc @ self._proj

    def _image_descriptor(self, rgb: np.ndarray) -> np.ndarray:
        # rgb: (H, W, 3) floats in [0, 1]
        mean = rgb.mean(axis=(0, 1))
        h, w = rgb.shape[:2]
        grid = [
            rgb[i * h // 2 : (i + 1) * h // 2, j * w // 2 : (j + 1) * w // 2].mean(
                axis=(0, 1)
            )
            for i in range(2)
            for j in range(2)
        ]
        std = rgb.std(axis=(0, 1))
        return np.concatenate([mean, np.concatenate(grid), std, [1.0]])

    def encode_image(self, image: Image.Image) -> np.ndarray:
        rgb = np.asarray(image.convert("RGB").resize((32, 32)), dtype=np.float64)
        return self._lift(self._image_descriptor(rgb / 255.0))

    def encode_text(self, prompt: str) -> np.ndarray:
        words = re.findall(r"[a-z]+", prompt.lower())
        hits = [np.array(_COLOR_RGB[w]) for w in words if w in _COLOR_RGB]
        mean = np.mean(hits, axis=0) if hits else np.full(3, 0.5)
        if "dark" in words:
            mean = mean * 0.4
        if "bright" in words or "light" in words:
            mean = np.clip(mean * 1.4, 0.0, 1.0)
        desc = np.concatenate([mean, np.tile(mean, 4), np.zeros(3), [1.0]])
        return self._lift(desc)


class ClipBackbone:
    """Frozen pretrained CLIP. Features come from the shared projection space
    (768 dims for ViT-L/14), where image and text towers are interchangeable.
    """

    def __init__(self, model_id: str = "openai/clip-vit-large-patch14"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "clip backbone needs torch + transformers installed"
            ) from exc
        self.name = model_id
        self._torch = torch
        self._model = CLIPModel.from_pretrained(model_id).eval()
        self._processor = CLIPProcessor.from_pretrained(model_id)

    def encode_image(self, image: Image.Image) -> np.ndarray:
        inputs = self._processor(images=image.convert("RGB"), return_tensors="pt")
        with self._torch.no_grad():
            feats = self._model.get_image_features(pixel_values=inputs["pixel_values"])
        return feats[0].double().numpy()

    def encode_text(self, prompt: str) -> np.ndarray:
        import warnings

        inputs = self._processor(
            text=[prompt], return_tensors="pt", truncation=True, padding=True
        )
        limit = self._processor.tokenizer.model_max_length
        if inputs["input_ids"].shape[1] >= limit:
            warnings.warn(f"prompt truncated to {limit} tokens", stacklevel=2)
        with self._torch.no_grad():
            feats = self._model.get_text_features(
                input_ids=inputs["input_ids"],
                attention_mask=inputs["attention_mask"],
            )
        return feats[0].double().numpy()


def load_backbone(name: str):
    if name == "tiny":
        return TinyVlm()
    return ClipBackbone(name if "/" in name else "openai/clip-vit-large-patch14")
