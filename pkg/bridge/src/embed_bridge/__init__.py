"""embed_bridge: offline export of image/text features from a frozen
vision-language backbone into the core toolkit's file formats."""

from .backbones import ClipBackbone, TinyVlm, load_backbone
from .extract import (
    ExtractionManifest,
    ExtractionResult,
    extract_image_embeddings,
    extract_text_embedding,
    write_extraction,
)
from .formats import write_coord_csv, write_embeddings

__version__ = "0.1.0"
