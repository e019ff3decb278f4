"""``fieldgrid`` command line.

Every subcommand is deterministic given its inputs, options and ``--seed``.
Options can also come from ``--config`` (YAML or JSON): top-level keys set
global options, a section named after the subcommand sets its defaults.
Command-line flags win over the config file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .edges import scharr_magnitude, scharr_pseudoprobability
from .extract import MaskTriple, ThresholdSet, extract, vectorize
from .fusion import WindowPrediction, consensus, mosaic_windows
from .io import read_polygons, read_raster, write_csv, write_json, write_polygons, write_raster
from .labels import make_labels, rasterize_polygons
from .metrics import object_metrics, pixel_metrics
from .optimize import DEFAULT_BUDGET, GRID_STEP, search_thresholds
from .raster import Raster
from .reports import (
    CANDIDATE_COLUMNS,
    FIELD_COLUMNS,
    TABLE_COLUMNS,
    evaluation_report,
    optimization_report,
    table_row,
)
from .synth import SceneSpec, generate_scene

log = logging.getLogger("fieldgrid")

MASK_BANDS = ["extent", "boundary", "distance"]


class CommandError(Exception):
    pass


# --- helpers --------------------------------------------------------------


def _read_masks(path) -> tuple[MaskTriple, Raster]:
    raster = read_raster(path)
    if raster.bands != 3:
        raise CommandError(f"{path}: mask raster must have 3 bands (extent, boundary, distance)")
    return MaskTriple.from_stack(raster.data), raster


def _write_masks(masks: MaskTriple, like: Raster, path, extra: dict | None = None) -> None:
    meta = {"bands": MASK_BANDS, **(extra or {})}
    write_raster(Raster(masks.stack().astype(np.float32), like.geotransform, None, meta), path)


def _read_labels(path) -> tuple[np.ndarray, Raster]:
    raster = read_raster(path)
    if raster.bands != 1 or raster.data.dtype.kind not in "iu":
        raise CommandError(f"{path}: expected a single-band integer label raster")
    return raster.data[0].astype(np.int32), raster


def _write_labels(labels: np.ndarray, like: Raster | tuple, path) -> None:
    gt = like.geotransform if isinstance(like, Raster) else like
    write_raster(Raster(labels.astype(np.int32), gt), path)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text()
    doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise CommandError(f"{path}: config must be a mapping")
    return doc


# --- subcommands ----------------------------------------------------------


def cmd_synth(args) -> None:
    spec = SceneSpec(
        size=args.size,
        n_fields=args.n_fields,
        crop_fraction=args.crop_fraction,
        noise_sigma=args.noise_sigma,
        blur_sigma=args.blur_sigma,
        rng_seed=args.seed,
        pixel_size=args.pixel_size,
        buffer_px=args.buffer_px,
    )
    scene = generate_scene(spec)
    out = Path(args.out)
    gt = scene.geotransform
    write_raster(Raster(scene.image.astype(np.float32), gt, None, {"bands": ["b1", "b2", "b3", "b4"]}), out / "image.fgr")
    _write_labels(scene.reference, gt, out / "reference.fgr")
    labels = np.stack([scene.labels.extent, scene.labels.boundary, scene.labels.distance]).astype(np.float32)
    write_raster(Raster(labels, gt, None, {"bands": MASK_BANDS}), out / "labels.fgr")
    _write_masks(scene.oracle_masks, Raster(labels, gt), out / "masks.fgr")
    write_polygons(vectorize(scene.reference, gt), out / "reference.geojson")
    write_json({"kind": "scene", "version": __version__, "spec": spec.as_dict()}, out / "scene.json")
    log.info("synthetic scene with %d fields written to %s", scene.reference.max(), out)


def cmd_labels(args) -> None:
    if args.like:
        like = read_raster(args.like)
        gt, shape = like.geotransform, like.shape
    else:
        if args.width is None or args.height is None or args.geotransform is None:
            raise CommandError("labels: give --like or all of --width, --height, --geotransform")
        gt, shape = tuple(args.geotransform), (args.height, args.width)
    label_map = rasterize_polygons(read_polygons(args.polygons), gt, shape)
    ls = make_labels(label_map, args.buffer_px)
    stack = np.stack([ls.extent, ls.boundary, ls.distance]).astype(np.float32)
    write_raster(Raster(stack, gt, None, {"bands": MASK_BANDS}), args.out)
    if args.label_map:
        _write_labels(label_map, gt, args.label_map)


def cmd_scharr(args) -> None:
    image = read_raster(args.image)
    prob = scharr_pseudoprobability(image.data, rescale_per_band=args.rescale_per_band)
    write_raster(Raster(prob.astype(np.float32), image.geotransform), args.out)
    if args.magnitude_out:
        write_raster(Raster(scharr_magnitude(image.data).astype(np.float32), image.geotransform), args.magnitude_out)


def cmd_mosaic(args) -> None:
    windows, like = [], None
    for path in args.windows:
        masks, raster = _read_masks(path)
        origin = raster.metadata.get("window_origin")
        if origin is None:
            raise CommandError(f"{path}: header metadata lacks 'window_origin' [row, col]")
        windows.append(WindowPrediction((int(origin[0]), int(origin[1])), masks))
        like = like or raster
    if args.like:
        target = read_raster(args.like)
        shape, gt = target.shape, target.geotransform
    else:
        if args.height is None or args.width is None:
            raise CommandError("mosaic: give --like or --height and --width")
        shape, gt = (args.height, args.width), like.geotransform
    _write_masks(mosaic_windows(windows, shape), Raster(np.zeros((1, 1, 1)), gt), args.out)


def cmd_consensus(args) -> None:
    series, first = [], None
    for path in args.masks:
        masks, raster = _read_masks(path)
        series.append(masks)
        first = first or raster
    _write_masks(consensus(series), first, args.out, {"dates": len(series)})


def _thresholds_from(args) -> ThresholdSet:
    if args.thresholds_from:
        doc = json.loads(Path(args.thresholds_from).read_text())
        return ThresholdSet(**doc["thresholds"])
    if args.thresholds:
        return ThresholdSet(*args.thresholds)
    return ThresholdSet()


def cmd_extract(args) -> None:
    masks, raster = _read_masks(args.masks)
    t = _thresholds_from(args)
    labels = extract(masks, t, args.method, args.min_size)
    _write_labels(labels, raster, args.out)
    if args.polygons:
        write_polygons(vectorize(labels, raster.geotransform), args.polygons)
    log.info("%s extraction with %s: %d fields", args.method, t, labels.max(initial=0))


def cmd_optimize(args) -> None:
    masks, _ = _read_masks(args.masks)
    ref, _ = _read_labels(args.reference)
    result = search_thresholds(
        masks, ref, args.method, args.budget, args.seed, t_extent=args.extent_threshold,
        step=args.step, min_size=args.min_size,
    )
    doc = optimization_report(result, {"masks": args.masks, "reference": args.reference})
    write_json(doc, args.out)
    if args.csv:
        write_csv(doc["candidates"], CANDIDATE_COLUMNS, args.csv)


def cmd_evaluate(args) -> None:
    extracted, _ = _read_labels(args.extracted)
    reference, _ = _read_labels(args.reference)
    objects = object_metrics(extracted, reference)
    pixels = None
    if args.masks:
        masks, _ = _read_masks(args.masks)
        pixels = pixel_metrics(masks.extent >= args.extent_threshold, reference > 0)
    inputs = {"extracted": args.extracted, "reference": args.reference, "masks": args.masks}
    doc = evaluation_report(objects, pixels, inputs)
    write_json(doc, args.out)
    if args.csv:
        write_csv(objects.fields, FIELD_COLUMNS, args.csv)


def cmd_report(args) -> None:
    rows = []
    for path in args.inputs:
        doc = json.loads(Path(path).read_text())
        if doc.get("kind") != "evaluation":
            raise CommandError(f"{path}: not an evaluation report")
        rows.append(table_row(Path(path).stem, doc))
    write_csv(rows, TABLE_COLUMNS, args.out)


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fieldgrid", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="YAML/JSON file with option defaults")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--threads", type=int, default=None, help="cap numba worker threads")
    parser.add_argument("--version", action="version", version=f"fieldgrid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic field mosaic")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--n-fields", type=int, default=40)
    p.add_argument("--crop-fraction", type=float, default=0.7)
    p.add_argument("--noise-sigma", type=float, default=0.03)
    p.add_argument("--blur-sigma", type=float, default=1.0)
    p.add_argument("--pixel-size", type=float, default=10.0)
    p.add_argument("--buffer-px", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("labels", help="rasterise polygons into extent/boundary/distance layers")
    p.add_argument("--polygons", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--like", help="raster whose grid to copy")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--geotransform", type=float, nargs=3, metavar=("X0", "Y0", "PIXEL"))
    p.add_argument("--buffer-px", type=int, default=1)
    p.add_argument("--label-map", help="also write the rasterised field ids here")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("scharr", help="Scharr edge pseudoprobability baseline")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rescale-per-band", action="store_true")
    p.add_argument("--magnitude-out")
    p.set_defaults(func=cmd_scharr)

    p = sub.add_parser("mosaic", help="average overlapping window predictions")
    p.add_argument("--windows", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--like")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("consensus", help="average masks across acquisition dates")
    p.add_argument("--masks", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("extract", help="extract field instances from masks")
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("cutoff", "watershed"), default="watershed")
    p.add_argument("--thresholds", type=float, nargs=3, metavar=("EXTENT", "BOUNDARY", "DISTANCE"))
    p.add_argument("--thresholds-from", help="optimization report to take thresholds from")
    p.add_argument("--min-size", type=int, default=0)
    p.add_argument("--polygons", help="also write GeoJSON polygons")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("optimize", help="tune thresholds against reference fields")
    p.add_argument("--masks", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("cutoff", "watershed"), default="watershed")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--step", type=float, default=GRID_STEP)
    p.add_argument("--extent-threshold", type=float, default=None)
    p.add_argument("--min-size", type=int, default=0)
    p.add_argument("--csv", help="also write the candidate table as CSV")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="object (and pixel) accuracy of extracted fields")
    p.add_argument("--extracted", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--masks", help="mask raster for pixel metrics of the extent layer")
    p.add_argument("--extent-threshold", type=float, default=0.5)
    p.add_argument("--csv", help="also write per-field rows as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="tabulate evaluation reports")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def _parse(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = _load_config(known.config)
    if config:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        top = {k.replace("-", "_"): v for k, v in config.items() if not isinstance(v, dict)}
        parser.set_defaults(**top)
        command = next((tok for tok in argv if tok in subparsers.choices), None)
        if command is not None:
            section = {k.replace("-", "_"): v for k, v in (config.get(command) or {}).items()}
            sub = subparsers.choices[command]
            sub.set_defaults(**section)
            for action in sub._actions:
                if action.dest in section:
                    action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    level = os.environ.get("FIELDGRID_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        if args.threads:
            import numba

            numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
        args.func(args)
    except (CommandError, ValueError, KeyError, OSError) as exc:
        print(f"fieldgrid: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
