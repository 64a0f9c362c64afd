"""Batch command line: extract, sweep, eval, fetch, serve.

Machine-readable JSON/CSV goes to stdout; human logs go to stderr. Exit
codes: 0 success, 1 runtime failure (message names the failing stage),
2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import evaluation, ingest, pipeline
from .errors import GroundTruthSchemaError, MapTextError
from .gridfilter import GridSpec
from .ingest import MapRequest
from .morphology import label_components
from .pipeline import PipelineConfig, config_from_json, config_to_json
from .raster import apply_threshold, to_grayscale

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_grid(text: str) -> GridSpec:
    text = text.strip()
    if text in ("", "none"):
        return GridSpec(passes=())
    passes = tuple(int(b) for b in text.split(","))
    return GridSpec(block=passes[0], passes=passes)


def _parse_rounds(text: str):
    rounds = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        t_str, _, g_str = part.partition(":")
        rounds.append((int(t_str), _parse_grid(g_str)))
    if not rounds:
        raise ValueError("rounds list is empty")
    return tuple(rounds)


def _positive_threshold(value: str) -> int:
    t = int(value)
    if t <= 0:
        raise argparse.ArgumentTypeError(
            f"threshold must satisfy 0 < T < width*height of the image, got {t}"
        )
    return t


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="input image path (PNG/JPEG/PGM/PPM)")
    p.add_argument("--lat", type=float, help="latitude for --url-template fetch")
    p.add_argument("--lon", type=float, help="longitude for --url-template fetch")
    p.add_argument("--zoom", type=int, default=15)
    p.add_argument("--fetch-width", type=int, default=600)
    p.add_argument("--fetch-height", type=int, default=400)
    p.add_argument("--url-template", help="static map URL template with {lat},{lon},{zoom},{w},{h}")
    p.add_argument("--config", help="JSON config file; explicit flags win over it")
    p.add_argument("--clusters", type=int, help="FCM cluster count K")
    p.add_argument("--fuzzifier", type=float, help="FCM fuzzifier m > 1")
    p.add_argument("--seed", type=int, help="seed for center initialization")
    p.add_argument("--selection", help="cluster selection: darkest, brightest, or an index")
    p.add_argument("--threshold", type=_positive_threshold, help="component area threshold T")
    p.add_argument("--grid", help="grid passes, e.g. '3', '3,5', or 'none'")
    p.add_argument("--rounds", help="explicit (T, grid) rounds, e.g. '400:3;410:'")
    p.add_argument("--bg", type=int, help="background intensity for the output image")
    p.add_argument("--connectivity", type=int, choices=(4, 8), help="component connectivity")
    p.add_argument("--denoise-window", type=int, help="median filter window (odd, >= 3)")
    p.add_argument("--dilate-iterations", type=int, help="dilation repetitions")


def _build_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        # export archives wrap the config under a "config" key
        if isinstance(doc, dict) and set(doc) <= {"config", "summary"} and "config" in doc:
            doc = doc["config"]
        cfg = config_from_json(doc, base=cfg)
    overrides: dict = {}
    fcm_overrides: dict = {}
    if args.clusters is not None:
        fcm_overrides["k"] = args.clusters
    if args.fuzzifier is not None:
        fcm_overrides["fuzzifier"] = args.fuzzifier
    if args.seed is not None:
        fcm_overrides["seed"] = args.seed
    if fcm_overrides:
        overrides["fcm"] = fcm_overrides
    if args.selection is not None:
        sel = args.selection
        overrides["selection"] = int(sel) if sel.lstrip("-").isdigit() else sel
    if args.threshold is not None:
        overrides["area_threshold"] = args.threshold
    if args.bg is not None:
        overrides["bg_color"] = args.bg
    if args.connectivity is not None:
        overrides["connectivity"] = args.connectivity
    if getattr(args, "denoise_window", None) is not None:
        overrides["denoise_window"] = args.denoise_window
    if getattr(args, "dilate_iterations", None) is not None:
        overrides["dilate_iterations"] = args.dilate_iterations
    if overrides:
        cfg = config_from_json(overrides, base=cfg)
    # structured flags applied directly
    if args.grid is not None:
        cfg = replace(cfg, grid=_parse_grid(args.grid))
    if args.rounds is not None:
        cfg = replace(cfg, cc_grid_repeats=_parse_rounds(args.rounds))
    return cfg


def _load_input(args) -> "ingest.RgbImage":
    if args.input:
        return ingest.load_image(args.input)
    if args.lat is not None and args.lon is not None and args.url_template:
        req = MapRequest(
            latitude=args.lat,
            longitude=args.lon,
            zoom=args.zoom,
            width=args.fetch_width,
            height=args.fetch_height,
            url_template=args.url_template,
        )
        return ingest.fetch_map(req)
    raise SystemExit2("either --input or --lat/--lon with --url-template is required")


class SystemExit2(Exception):
    """Usage error discovered after argparse (still exits 2)."""


def _dump_stages(stages, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in pipeline.STAGES:
        ingest.save_image(stages.planes[name], directory / f"{name}.png")


def _summary_json(stages) -> str:
    s = stages.summary
    return json.dumps(
        {
            "component_count": s["component_count"],
            "foreground_area": s["foreground_area"],
            "j_m": s["j_m"],
            "iterations": s["iterations"],
        },
        sort_keys=True,
    )


def cmd_extract(args) -> int:
    cfg = _build_config(args)
    img = _load_input(args)
    stages = pipeline.run_pipeline(img, cfg)
    if args.out:
        ingest.save_image(stages.planes["i_f"], args.out)
        log(f"wrote {args.out}")
    if args.dump_stages:
        _dump_stages(stages, args.dump_stages)
        log(f"dumped 8 stages to {args.dump_stages}")
    print(_summary_json(stages))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    img = _load_input(args)
    if args.t_list is None and args.t_range is None:
        raise SystemExit2("sweep needs --t-list or --t-range")
    if args.t_list is not None:
        ts = [int(t) for t in args.t_list.split(",") if t.strip()]
    else:
        a, b, step = (int(x) for x in args.t_range.split(":"))
        if step <= 0:
            raise SystemExit2("--t-range step must be positive")
        ts = list(range(a, b, step))
    if not ts:
        raise SystemExit2("sweep needs at least one threshold")

    entries = pipeline.threshold_sweep(img, cfg, ts, jobs=args.jobs)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["t", "component_count", "foreground_area"])
    failures = 0
    for e in entries:
        if e.error is not None:
            failures += 1
            log(f"T={e.t} failed: {e.error}")
            continue
        writer.writerow([e.t, e.component_count, e.foreground_area])
        if out_dir:
            ingest.save_image(e.i_f, out_dir / f"i_f_t{e.t}.png")
    sys.stdout.write(buf.getvalue())
    if out_dir:
        (out_dir / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
    if failures == len(entries):
        log("every threshold failed")
        return EXIT_RUNTIME
    return EXIT_OK


def _labels_from_stage_dir(directory: Path, connectivity: int):
    i_o_path = directory / "i_o.png"
    if not i_o_path.exists():
        raise SystemExit2(f"{directory} has no i_o.png")
    gray = to_grayscale(ingest.load_image(i_o_path))
    mask = apply_threshold(gray, 127, "above")
    return label_components(mask, connectivity)


def _eval_single(pred_dir: Path, truth_path: Path, args):
    truth = evaluation.load_ground_truth(truth_path)
    labels, stats = _labels_from_stage_dir(pred_dir, args.connectivity or 8)
    return evaluation.match_components(labels, stats, truth, iou_min=args.iou, mode=args.mode)


def cmd_eval(args) -> int:
    truth_path = Path(args.truth)
    if args.run_config:
        if not args.input:
            raise SystemExit2("--run-config needs --input")
        with open(args.run_config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if isinstance(doc, dict) and "config" in doc and set(doc) <= {"config", "summary"}:
            doc = doc["config"]
        cfg = config_from_json(doc, base=PipelineConfig())
        img = ingest.load_image(args.input)
        stages = pipeline.run_pipeline(img, cfg)
        truth = evaluation.load_ground_truth(truth_path)
        labels, stats = label_components(stages.planes["i_o"], cfg.connectivity)
        cm = evaluation.match_components(labels, stats, truth, iou_min=args.iou, mode=args.mode)
        print(json.dumps(evaluation.confusion_to_dict(cm), sort_keys=True))
        return EXIT_OK

    pred_root = Path(args.pred_stages)
    if truth_path.is_dir():
        rows = []
        for sub in sorted(p for p in pred_root.iterdir() if p.is_dir()):
            t = truth_path / f"{sub.name}.json"
            if not t.exists():
                log(f"no truth for {sub.name}, skipping")
                continue
            rows.append((sub.name, _eval_single(sub, t, args)))
        if not rows:
            raise SystemExit2("aggregate eval found no (stages, truth) pairs")
        evaluation.write_aggregate_csv(rows, sys.stdout)
        return EXIT_OK

    cm = _eval_single(pred_root, truth_path, args)
    print(json.dumps(evaluation.confusion_to_dict(cm), sort_keys=True))
    return EXIT_OK


def cmd_fetch(args) -> int:
    req = MapRequest(
        latitude=args.lat,
        longitude=args.lon,
        zoom=args.zoom,
        width=args.fetch_width,
        height=args.fetch_height,
        url_template=args.url_template,
    )
    img = ingest.fetch_map(
        req, timeout=args.timeout, retries=args.retries, cache_dir=args.cache_dir
    )
    ingest.save_image(img, args.out)
    log(f"wrote {args.out}")
    print(json.dumps({"width": img.width, "height": img.height}, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(max_pixels=args.max_pixels, ttl_seconds=args.ttl)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maptext", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the extraction pipeline on one image")
    _add_pipeline_flags(p)
    p.add_argument("--out", help="path for the extracted-text image i_f")
    p.add_argument("--dump-stages", help="directory for all eight stage PNGs")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sweep", help="run a threshold sweep; never auto-selects")
    _add_pipeline_flags(p)
    p.add_argument("--t-range", help="A:B:STEP, end-exclusive")
    p.add_argument("--t-list", help="comma-separated thresholds, e.g. 400,410")
    p.add_argument("--out-dir", help="directory for sweep.csv and per-T outputs")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score extraction against ground truth")
    p.add_argument("--pred-stages", help="stage dump directory (or parent of per-image dirs)")
    p.add_argument("--run-config", help="config JSON: run the pipeline, then evaluate")
    p.add_argument("--input", help="input image (with --run-config)")
    p.add_argument("--truth", required=True, help="ground truth JSON file or directory")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold for matching")
    p.add_argument("--mode", choices=("bbox", "pixel"), default="bbox")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fetch", help="fetch a static map image over HTTP")
    p.add_argument("--lat", type=float, required=True)
    p.add_argument("--lon", type=float, required=True)
    p.add_argument("--zoom", type=int, default=15)
    p.add_argument("--fetch-width", type=int, default=600)
    p.add_argument("--fetch-height", type=int, default=400)
    p.add_argument("--url-template", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--retries", type=int, default=0)
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("serve", help="start the interactive tuning service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ttl", type=float, default=3600.0, help="idle session expiry, seconds")
    p.add_argument("--max-pixels", type=int, default=16_000_000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit2 as e:
        log(f"usage error: {e}")
        return EXIT_USAGE
    except GroundTruthSchemaError as e:
        log(f"ground truth schema error: {e}")
        return EXIT_RUNTIME
    except MapTextError as e:
        log(f"error: {e}")
        return EXIT_RUNTIME
    except (OSError, json.JSONDecodeError, ValueError) as e:
        log(f"error: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
