"""Command-line interface.

Subcommands: train, gallery (build | sample | lattice), eval, encode-gps,
heatmap, selftest. Every command exits 0 on success and prints a one-line
`error <slug>: message` to stderr otherwise. All randomness is seed-driven.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import fileio, gallery as gallery_mod, heatmap as heatmap_mod
from .errors import GeoembedError, InvalidConfigError, InvalidInputError
from .geodesy import (
    GpsCoord,
    array_to_coords,
    eep_project_array,
    fibonacci_lattice,
    land_filter,
    read_landmask,
)
from .locenc import EncoderConfig
from .net import init_mlp, l2_normalize
from .posenc import init_rff, rff_encode, sigma_schedule
from .trainer import (
    GpsQueue,
    TrainConfig,
    TrainingSet,
    contrastive_loss,
    queue_update,
    train,
)

_ENCODER_KEYS = {f.name for f in dataclasses.fields(EncoderConfig)}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"encoder"}


def _parse_value(raw: str):
    low = raw.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw.strip()


def _read_config_file(path) -> dict:
    """Flat key=value text; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfigError(f"{path}:{lineno}: expected key=value")
            key, raw = line.split("=", 1)
            out[key.strip()] = _parse_value(raw)
    return out


def _build_train_config(args) -> TrainConfig:
    merged: dict = {}
    if args.config:
        merged.update(_read_config_file(args.config))
    for pair in args.set or []:
        if "=" not in pair:
            raise InvalidConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        merged[key.strip()] = _parse_value(raw)
    for flag in ("seed", "epochs", "batch_size", "lr", "queue_size"):
        val = getattr(args, flag, None)
        if val is not None:
            merged[flag] = val
    unknown = set(merged) - _TRAIN_KEYS - _ENCODER_KEYS
    if unknown:
        raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
    enc_kwargs = {k: v for k, v in merged.items() if k in _ENCODER_KEYS}
    train_kwargs = {k: v for k, v in merged.items() if k in _TRAIN_KEYS}
    if "seed" in train_kwargs and "seed" not in enc_kwargs:
        enc_kwargs["seed"] = train_kwargs["seed"]
    return TrainConfig(encoder=EncoderConfig(**enc_kwargs), **train_kwargs)


def _load_queries(path, head):
    """Query embeddings in the shared space: raw backbone rows go through the
    head, shared-space rows pass straight through; all rows re-normalized."""
    ef = fileio.read_embeddings(path)
    rows = ef.vectors.astype(np.float64)
    if ef.dim == head.n_in:
        rows, _ = head.forward(rows)
    elif ef.dim != head.n_out:
        raise InvalidInputError(
            f"{path}: dim {ef.dim} matches neither backbone features "
            f"({head.n_in}) nor the shared space ({head.n_out})"
        )
    return l2_normalize(rows), ef.views_per_record


def _load_gallery(prefix) -> gallery_mod.GalleryIndex:
    ef = fileio.read_embeddings(str(prefix) + ".emb")
    _, coords = fileio.read_coord_csv(str(prefix) + ".csv")
    if ef.count != len(coords):
        raise InvalidInputError(
            f"gallery {prefix}: {ef.count} embeddings vs {len(coords)} coordinates"
        )
    return gallery_mod.GalleryIndex(
        coords, l2_normalize(ef.vectors.astype(np.float64))
    )


def _cmd_train(args) -> int:
    config = _build_train_config(args)
    ef = fileio.read_embeddings(args.embeddings)
    _, coords = fileio.read_coord_csv(args.coords)
    if ef.records != len(coords):
        raise InvalidInputError(
            f"{ef.records} embedding records vs {len(coords)} coordinates"
        )
    feats = ef.vectors.astype(np.float64).reshape(ef.records, ef.views_per_record, ef.dim)
    if ef.views_per_record != config.views:
        config = dataclasses.replace(config, views=ef.views_per_record)
    data = TrainingSet(feats, coords)
    report_path = args.report or str(args.out) + ".jsonl"
    state, reports = train(
        data,
        config,
        report_path=report_path,
        progress=lambda r: print(
            f"epoch {r.epoch}: loss={r.mean_loss:.4f} lr={r.lr:.3g} tau={r.tau:.4f}"
        ),
    )
    fileio.save_train_state(args.out, state)
    print(f"saved checkpoint to {args.out} ({len(reports)} epochs)")
    return 0


def _cmd_gallery_build(args) -> int:
    encoder, _, _, _ = fileio.load_checkpoint(args.checkpoint)
    _, coords = fileio.read_coord_csv(args.coords)
    index = gallery_mod.build_gallery(coords, encoder)
    fileio.write_embeddings(index.embeddings, str(args.out) + ".emb")
    fileio.write_coord_csv(str(args.out) + ".csv", index.coords)
    print(f"gallery of {len(index)} entries -> {args.out}.emb / {args.out}.csv")
    return 0


def _cmd_gallery_sample(args) -> int:
    ids, coords = fileio.read_coord_csv(args.coords)
    picked = gallery_mod.sample_training_coords(
        array_to_coords(coords), args.k, args.seed
    )
    fileio.write_coord_csv(args.out, picked)
    print(f"sampled {len(picked)} of {len(ids)} coordinates -> {args.out}")
    return 0


def _cmd_gallery_lattice(args) -> int:
    coords = fibonacci_lattice(args.n)
    if args.land:
        coords = land_filter(coords, read_landmask(args.land))
    fileio.write_coord_csv(args.out, coords)
    print(f"lattice of {len(coords)} coordinates -> {args.out}")
    return 0


def _cmd_encode_gps(args) -> int:
    encoder, _, _, _ = fileio.load_checkpoint(args.checkpoint)
    _, coords = fileio.read_coord_csv(args.coords)
    emb = encoder.encode_array(coords)
    fileio.write_embeddings(emb, args.out)
    print(f"encoded {len(coords)} coordinates -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    encoder, head, _, _ = fileio.load_checkpoint(args.checkpoint)
    queries, views = _load_queries(args.queries, head)
    _, truth = fileio.read_coord_csv(args.truth)
    index = _load_gallery(args.gallery)

    if args.tencrop and views > 1:
        queries = np.stack(
            [
                gallery_mod.average_views(queries[r * views : (r + 1) * views])
                for r in range(len(queries) // views)
            ]
        )
    elif views > 1:
        queries = queries[::views]  # first view per record
    if len(queries) != len(truth):
        raise InvalidInputError(
            f"{len(queries)} query records vs {len(truth)} truth rows"
        )

    if args.restrict:
        parts = args.restrict.split(",")
        if len(parts) != 3:
            raise InvalidConfigError("--restrict expects lat,lon,radius_km")
        center = GpsCoord(float(parts[0]), float(parts[1]))
        index = gallery_mod.restrict_gallery(index, center, float(parts[2]))

    pred = gallery_mod.retrieve_top1_batch(queries, index)
    report = gallery_mod.threshold_accuracy(pred, truth)
    print(f"{'threshold':>12} {'accuracy':>9}")
    for t, a in zip(report.thresholds_km, report.accuracies_pct):
        print(f"{t:>10.0f}km {a:>8.2f}%")
    print(json.dumps(report.as_dict()))
    return 0


def _cmd_heatmap(args) -> int:
    encoder, head, _, _ = fileio.load_checkpoint(args.checkpoint)
    queries, _ = _load_queries(args.query, head)
    query = queries[0]
    lats, lons = heatmap_mod.make_grid(args.grid_step)
    grid = np.stack(
        [np.repeat(lats, len(lons)), np.tile(lons, len(lats))], axis=-1
    )
    scores = heatmap_mod.heatmap_scores(query, grid, encoder)
    heatmap_mod.write_heatmap_csv(args.out, grid, scores)
    if args.pgm:
        heatmap_mod.write_heatmap_pgm(args.pgm, scores.reshape(len(lats), len(lons)))
    print(f"heatmap of {len(grid)} cells -> {args.out}")
    return 0


def _selftest_checks():
    rng = np.random.default_rng(7)

    def check_eep():
        assert np.allclose(eep_project_array(np.zeros((1, 2)))[0], 0.0)
        pts = rng.uniform([-90, -180], [90, 180], size=(200, 2))
        plus = eep_project_array(pts)
        flip_lat = eep_project_array(pts * [-1, 1])
        flip_lon = eep_project_array(pts * [1, -1])
        assert np.array_equal(plus[:, 1], -flip_lat[:, 1])
        assert np.array_equal(plus[:, 0], -flip_lon[:, 0])
        lats = np.arange(-90.0, 91.0)
        lons = np.arange(-180.0, 181.0)
        grid = np.stack(np.meshgrid(lats, lons, indexing="ij"), axis=-1).reshape(-1, 2)
        assert np.max(np.abs(eep_project_array(grid)[:, 0])) <= 1.0 + 1e-15

    def check_rff():
        layer = init_rff(64, 4.0, 3)
        p = rng.uniform(-1, 1, size=(500, 2))
        enc = rff_encode(layer, p)
        pair = enc[:, :32] ** 2 + enc[:, 32:] ** 2
        assert np.max(np.abs(pair - 1.0)) < 1e-12

    def check_schedule():
        assert sigma_schedule(1, 256, 3).values == (1.0, 16.0, 256.0)

    def check_gradients():
        mlp = init_mlp([3, 5, 2], rng)
        x = rng.standard_normal(3)
        y, tape = mlp.forward(x)
        dy = rng.standard_normal(2)
        _, grads = mlp.backward(tape, dy)
        h = 1e-6
        W = mlp.layers[0].W
        for i in range(W.shape[0]):
            for j in range(W.shape[1]):
                orig = W[i, j]
                W[i, j] = orig + h
                yp, _ = mlp.forward(x)
                W[i, j] = orig - h
                ym, _ = mlp.forward(x)
                W[i, j] = orig
                fd = float((yp - ym) @ dy) / (2 * h)
                assert abs(fd - grads[0][0][i, j]) < 1e-4 * max(1.0, abs(fd))

    def check_loss_closed_forms():
        e = np.zeros((2, 4))
        e[:, 0] = 1.0
        loss, *_ = contrastive_loss(e, e, e, tau=1.0)
        assert abs(loss - math.log(4.0)) < 1e-9
        v = np.array([[1.0, 0.0]])
        q = np.array([[0.0, 1.0]])
        loss2, *_ = contrastive_loss(v, v, q, tau=0.07)
        expected = math.log1p(math.exp(-1 / 0.07))
        assert abs(loss2 - expected) < 1e-9

    def check_queue():
        q = GpsQueue(np.array([[1.0, 1], [2, 2], [3, 3], [4, 4]]))
        queue_update(q, np.array([[5.0, 5], [6, 6]]))
        assert np.array_equal(
            q.snapshot(), np.array([[3.0, 3], [4, 4], [5, 5], [6, 6]])
        )

    return [
        ("eep-symmetry", check_eep),
        ("rff-identity", check_rff),
        ("sigma-schedule", check_schedule),
        ("mlp-gradients", check_gradients),
        ("loss-closed-forms", check_loss_closed_forms),
        ("queue-fifo", check_queue),
    ]


def _cmd_selftest(_args) -> int:
    failed = 0
    for name, fn in _selftest_checks():
        try:
            fn()
            print(f"ok {name}")
        except Exception as exc:  # noqa: BLE001 - report and continue
            failed += 1
            print(f"FAIL {name}: {exc}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoembed",
        description="GPS embedding training and image-to-GPS retrieval toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train encoder + image head")
    p_train.add_argument("--embeddings", required=True)
    p_train.add_argument("--coords", required=True)
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--report", default=None)
    p_train.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--queue-size", dest="queue_size", type=int, default=None)
    p_train.set_defaults(func=_cmd_train)

    p_gal = sub.add_parser("gallery", help="gallery construction")
    gal_sub = p_gal.add_subparsers(dest="gallery_command", required=True)

    p_build = gal_sub.add_parser("build", help="encode coordinates into a gallery")
    p_build.add_argument("--coords", required=True)
    p_build.add_argument("--checkpoint", required=True)
    p_build.add_argument("--out", required=True)
    p_build.set_defaults(func=_cmd_gallery_build)

    p_sample = gal_sub.add_parser("sample", help="sample coordinates without replacement")
    p_sample.add_argument("--coords", required=True)
    p_sample.add_argument("--k", type=int, required=True)
    p_sample.add_argument("--seed", type=int, required=True)
    p_sample.add_argument("--out", required=True)
    p_sample.set_defaults(func=_cmd_gallery_sample)

    p_lat = gal_sub.add_parser("lattice", help="evenly spaced sphere coordinates")
    p_lat.add_argument("--n", type=int, required=True)
    p_lat.add_argument("--land", default=None)
    p_lat.add_argument("--out", required=True)
    p_lat.set_defaults(func=_cmd_gallery_lattice)

    p_eval = sub.add_parser("eval", help="retrieval evaluation with threshold metrics")
    p_eval.add_argument("--queries", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--gallery", required=True)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--restrict", default=None, metavar="LAT,LON,RADIUS_KM")
    p_eval.add_argument("--tencrop", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    p_enc = sub.add_parser("encode-gps", help="batch location embeddings")
    p_enc.add_argument("--coords", required=True)
    p_enc.add_argument("--checkpoint", required=True)
    p_enc.add_argument("--out", required=True)
    p_enc.set_defaults(func=_cmd_encode_gps)

    p_heat = sub.add_parser("heatmap", help="similarity map over a global grid")
    p_heat.add_argument("--query", required=True)
    p_heat.add_argument("--grid-step", dest="grid_step", type=float, required=True)
    p_heat.add_argument("--checkpoint", required=True)
    p_heat.add_argument("--out", required=True)
    p_heat.add_argument("--pgm", default=None)
    p_heat.set_defaults(func=_cmd_heatmap)

    p_self = sub.add_parser("selftest", help="run analytic invariant checks")
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GeoembedError as exc:
        print(f"error {exc.slug}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
