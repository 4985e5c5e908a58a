"""Command-line front end: ``inspect``, ``eval``, ``synth`` and ``batch``.

Exit codes: 0 success, 1 input/output failure, 2 bad parameters or usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import io
from .evaluation import aggregate, evaluate
from .pipeline import PipelineParams, inspect, load_config, write_outputs
from .synth import CorpusRanges, SceneSpec, corpus, generate, write_corpus, write_scene

log = logging.getLogger("afpseg")

EXIT_IO = 1
EXIT_USAGE = 2

# flag name -> (PipelineParams field, type)
_PARAM_FLAGS = {
    "--median": ("median", int),
    "--sigma": ("sigma", float),
    "--canny-low": ("canny_low", float),
    "--canny-high": ("canny_high", float),
    "--se-length": ("se_length", int),
    "--alpha-x": ("alpha_x", float),
    "--alpha-y": ("alpha_y", float),
    "--d-th": ("d_th", float),
    "--spline-s": ("spline_s", float),
    "--min-span": ("min_span", int),
    "--tolerance": ("tolerance", float),
}


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline parameters (override --config)")
    for flag, (name, typ) in _PARAM_FLAGS.items():
        g.add_argument(flag, dest=name, type=typ, default=None,
                       help=f"default {getattr(PipelineParams(), name)}")
    p.add_argument("--config", type=Path, help="JSON file setting any pipeline parameter")


def resolve_params(args: argparse.Namespace) -> PipelineParams:
    """Defaults, then the config file, then explicit flags."""
    values: dict = {}
    if getattr(args, "config", None) is not None:
        try:
            values.update(load_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON: {exc}") from exc
    for f in fields(PipelineParams):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        return PipelineParams.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


# -- inspect -----------------------------------------------------------------

def cmd_inspect(args) -> int:
    params = resolve_params(args)
    try:
        img = io.load_depth_map(args.input)
    except io.ImageFormatError as exc:
        log.error("%s", exc)
        return EXIT_IO
    try:
        insp = inspect(img, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        write_outputs(insp, img, args.out, stages=args.stages, timing=args.timing)
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return EXIT_IO
    print(f"{len(insp.boundaries)} boundaries, {len(insp.regions)} defect regions -> {args.out}")
    return 0


# -- eval ----------------------------------------------------------------------

def cmd_eval(args) -> int:
    try:
        pred = io.load_mask_png(args.pred)
        gt = io.load_mask_png(args.gt)
    except io.ImageFormatError as exc:
        log.error("%s", exc)
        return EXIT_IO
    try:
        report = evaluate(pred, gt)
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_IO
    print(_dump(report.to_dict()))
    return 0


# -- synth ---------------------------------------------------------------------

def _scene_spec(d: dict, seed: int | None) -> SceneSpec:
    d = dict(d)
    if seed is not None:
        d["seed"] = seed
    if "courses" in d:
        return SceneSpec.from_dict(d)
    # shorthand: {"width", "tow_height", "offsets", optional "drifts", "margin", ...}
    width, th, offsets = d.pop("width"), d.pop("tow_height"), d.pop("offsets")
    return SceneSpec.stacked(width, th, offsets, **d)


def cmd_synth(args) -> int:
    try:
        d = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        log.error("cannot read spec: %s", exc)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.spec}: invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise UsageError("scene spec must be a JSON object")
    out = Path(args.out)
    try:
        if "n" in d:
            seed = args.seed if args.seed is not None else int(d.get("seed", 0))
            ranges = CorpusRanges.from_dict(d.get("ranges", {}))
            specs = corpus(int(d["n"]), ranges, seed)
            write_corpus(specs, out, {"corpus_seed": seed, "n": len(specs)})
            print(f"{len(specs)} scenes -> {out}")
        else:
            spec = _scene_spec(d, args.seed)
            write_scene(generate(spec), out)
            manifest = {"scenes": [{"name": ".", "spec": spec.to_dict()}]}
            text = _dump(manifest) + "\n"
            io.atomic_write(out / "manifest.json", lambda f: f.write(text.encode()))
            print(f"scene {spec.width}x{spec.height} -> {out}")
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad scene spec: {exc}") from exc
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return EXIT_IO
    return 0


# -- batch ---------------------------------------------------------------------

def _score_scene(job):
    name, scene_dir, params, out_dir = job
    try:
        img = io.load_depth_map(scene_dir / "scene.png")
        gt = io.load_mask_png(scene_dir / "truth.png")
    except io.ImageFormatError as exc:
        return name, None, str(exc)
    insp = inspect(img, params)
    if out_dir is not None:
        write_outputs(insp, img, out_dir / name)
    try:
        rep = evaluate(insp.segmentation.mask, gt)
    except ValueError as exc:
        return name, None, str(exc)
    return name, rep, None


def cmd_batch(args) -> int:
    params = resolve_params(args)
    root = Path(args.dir)
    if not root.is_dir():
        log.error("not a directory: %s", root)
        return EXIT_IO
    if args.jobs is not None and args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    jobs, skipped = [], []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (d / "scene.png").is_file():
            continue
        if not (d / "truth.png").is_file():
            skipped.append({"scene": d.name, "reason": "missing truth.png"})
            continue
        jobs.append((d.name, d, params, Path(args.out) if args.out else None))

    if args.jobs and args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_score_scene, jobs))
    else:
        results = [_score_scene(j) for j in jobs]

    scenes, reports = [], []
    for name, rep, err in results:  # already in filename order
        if rep is None:
            skipped.append({"scene": name, "reason": err})
            continue
        reports.append(rep)
        scenes.append({"scene": name, "iou_gap": rep.iou_gap,
                       "iou_overlap": rep.iou_overlap, "mean_iou": rep.mean_iou})
    skipped.sort(key=lambda s: s["scene"])
    summary = {
        "params": params.to_dict(),
        "scenes": scenes,
        "skipped": skipped,
        "aggregate": aggregate(reports).to_dict(),
    }
    text = _dump(summary)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.atomic_write(out / "summary.json", lambda f: f.write((text + "\n").encode()))
    print(text)
    for s in skipped:
        log.warning("skipped %s: %s", s["scene"], s["reason"])
    return 0


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afpseg", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="segment gaps and overlaps in one depth map")
    p.add_argument("input", type=Path, help="PNG (8/16-bit gray) or binary PGM")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--stages", action="store_true", help="also dump 01..06 stage images")
    p.add_argument("--timing", action="store_true", help="record per-stage timings in report.json")
    p.add_argument("--seed", type=int, default=None, help="accepted for symmetry; inspect is deterministic")
    _add_param_flags(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("eval", help="score a predicted label mask against ground truth")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="render synthetic scenes with exact truth")
    p.add_argument("--spec", type=Path, required=True,
                   help="scene spec JSON, or corpus spec {n, ranges, seed}")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the seed in the spec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("batch", help="inspect and score every scene directory under DIR")
    p.add_argument("dir", type=Path)
    p.add_argument("--out", type=Path, default=None, help="write per-scene outputs and summary.json here")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    p.add_argument("--seed", type=int, default=None, help="accepted for symmetry; batch is deterministic")
    _add_param_flags(p)
    p.set_defaults(func=cmd_batch)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
