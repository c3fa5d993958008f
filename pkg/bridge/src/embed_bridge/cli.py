"""CLI: `embed-bridge extract images ...` and `embed-bridge extract text ...`."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .backbones import load_backbone
from .extract import (
    ExtractionManifest,
    extract_image_embeddings,
    extract_text_embedding,
    write_extraction,
)
from .formats import write_embeddings


def _cmd_images(args) -> int:
    manifest = ExtractionManifest.load(args.manifest)
    if args.views is not None:
        manifest = dataclasses.replace(manifest, views=args.views)
    if args.backbone is not None:
        manifest = dataclasses.replace(manifest, model=args.backbone)
    try:
        backbone = load_backbone(manifest.model)
    except Exception as exc:
        print(f"error model-load: {exc}", file=sys.stderr)
        return 1
    result = extract_image_embeddings(manifest, backbone, seed=args.seed)
    if result.features.shape[0] == 0:
        print("error invalid-input: no decodable images in manifest", file=sys.stderr)
        return 1
    write_extraction(result, args.out, manifest.views)
    print(
        f"wrote {len(result.records)} records x {manifest.views} views "
        f"({result.features.shape[1]} dims) -> {args.out}"
        + (f", {len(result.rejects)} rejects" if result.rejects else "")
    )
    return 0


def _cmd_text(args) -> int:
    try:
        backbone = load_backbone(args.backbone or "tiny")
    except Exception as exc:
        print(f"error model-load: {exc}", file=sys.stderr)
        return 1
    try:
        row = extract_text_embedding(args.prompt, backbone)
    except ValueError as exc:
        print(f"error invalid-input: {exc}", file=sys.stderr)
        return 1
    write_embeddings(row, args.out)
    print(f"wrote 1 text feature ({row.shape[1]} dims) -> {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-bridge",
        description="export image/text features from a frozen backbone",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_extract = sub.add_parser("extract", help="feature extraction")
    esub = p_extract.add_subparsers(dest="what", required=True)

    p_img = esub.add_parser("images", help="encode a manifest of geotagged images")
    p_img.add_argument("--manifest", required=True)
    p_img.add_argument("--out", required=True)
    p_img.add_argument("--views", type=int, default=None)
    p_img.add_argument("--backbone", default=None, help="tiny | clip model id")
    p_img.add_argument("--seed", type=int, default=0)
    p_img.set_defaults(func=_cmd_images)

    p_txt = esub.add_parser("text", help="encode a single text prompt")
    p_txt.add_argument("--prompt", required=True)
    p_txt.add_argument("--out", required=True)
    p_txt.add_argument("--backbone", default=None)
    p_txt.set_defaults(func=_cmd_text)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
