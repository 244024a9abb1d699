"""Command-line interface.

Subcommands cover the pipeline pieces end to end: ``grid`` and ``project``
for anchor geometry, ``nms`` and ``extract`` for inference on saved frames,
``match`` for training-style assignment, ``eval`` for metrics, ``synth`` for
generating test scenes and ``bench`` for timing the inference hot path.

Exit codes: 0 on success, 1 on validation or file errors, 2 on usage errors
(argparse's default).  ``LANEKIT_THREADS`` caps the worker pool used when
loading a directory of prediction files.
"""

import argparse
import json
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import EVAL_THRESHOLDS_M, MODEL_PRESETS
from .errors import ValidationError
from .geometry import (build_custom_grid, build_uniform_grid,
                       make_forward_camera, project_grid_to_image)
from .graph import extract_lanes
from .io import (load_camera, load_ground_truth, load_lane_frame,
                 load_prediction_frame, save_grid_csv, save_ground_truth,
                 save_lane_frame, save_prediction_frame)
from .matching import GroundTruthKeypoint, build_connection_targets, match_keypoints
from .metrics import evaluate
from .nms import point_nms
from .pipeline import infer_nms_thresholds, run_pipeline
from .synthetic import SceneSpec, generate_scene


def _threshold_list(text):
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ValueError("empty threshold list")
    return values


def _add_grid_args(parser):
    parser.add_argument("--mode", choices=("uniform", "custom"), default="uniform")
    parser.add_argument("--rows", type=int, default=12)
    parser.add_argument("--cols", type=int, default=32)
    parser.add_argument("--y-min", type=float, default=3.0)
    parser.add_argument("--y-max", type=float, default=58.0)
    parser.add_argument("--x-min", type=float, default=-8.0)
    parser.add_argument("--x-max", type=float, default=8.0)
    parser.add_argument("--spacing-near", type=float, default=0.5)
    parser.add_argument("--spacing-far", type=float, default=1.5)
    parser.add_argument("--width", type=float, default=20.0)
    parser.add_argument("--y-origin", type=float, default=3.0)
    parser.add_argument("--preset", choices=sorted(MODEL_PRESETS))


def _grid_from_args(args):
    if args.preset:
        rows, cols = MODEL_PRESETS[args.preset].bev_shape
        return build_custom_grid(rows=rows, cols=cols,
                                 spacing_near=args.spacing_near,
                                 spacing_far=args.spacing_far,
                                 width=args.width, y_origin=args.y_origin)
    if args.mode == "uniform":
        return build_uniform_grid(rows=args.rows, cols=args.cols,
                                  y_range=(args.y_min, args.y_max),
                                  x_range=(args.x_min, args.x_max))
    return build_custom_grid(rows=args.rows, cols=args.cols,
                             spacing_near=args.spacing_near,
                             spacing_far=args.spacing_far,
                             width=args.width, y_origin=args.y_origin)


def _cmd_grid(args):
    grid = _grid_from_args(args)
    save_grid_csv(grid, args.out)
    print(f"wrote {grid.rows}x{grid.cols} {grid.mode} grid to {args.out}")
    return 0


def _cmd_project(args):
    grid = _grid_from_args(args)
    camera = load_camera(args.camera) if args.camera else make_forward_camera()
    pmap = project_grid_to_image(grid, camera, ground_height=args.ground_height)
    lines = ["row,col,u,v,valid"]
    for r in range(grid.rows):
        for c in range(grid.cols):
            u, v = pmap.pixel_coords[r, c]
            lines.append(f"{r},{c},{float(u)!r},{float(v)!r},{int(pmap.valid[r, c])}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    visible = int(pmap.valid.sum())
    print(f"projected {grid.rows * grid.cols} anchors, {visible} inside the image")
    return 0


def _cmd_nms(args):
    frame = load_prediction_frame(args.pred)
    proposals = frame.keypoints
    thresh_x, thresh_y = args.thresh_x, args.thresh_y
    if thresh_x is None or thresh_y is None:
        auto_x, auto_y = infer_nms_thresholds(proposals)
        thresh_x = auto_x if thresh_x is None else thresh_x
        thresh_y = auto_y if thresh_y is None else thresh_y
    keep = np.sort(point_nms(proposals.refined_xy, proposals.confidences,
                             thresh_x, thresh_y, r=args.r, iou_thresh=args.iou))
    kept = type(frame)(frame_id=frame.frame_id, keypoints=proposals.subset(keep),
                       adjacency=frame.adjacency[np.ix_(keep, keep)],
                       camera=frame.camera)
    save_prediction_frame(kept, args.out)
    print(f"kept {len(keep)} of {len(proposals)} proposals")
    return 0


def _cmd_extract(args):
    frame = load_prediction_frame(args.pred)
    result = run_pipeline(frame, t_a=args.t_a, thresh_x=args.thresh_x,
                          thresh_y=args.thresh_y, r=args.r, iou_thresh=args.iou,
                          min_lane_points=args.min_lane_points)
    save_lane_frame(frame.frame_id, result.lanes, args.out)
    print(f"extracted {len(result.lanes)} lanes from {len(result.kept)} "
          f"kept proposals")
    return 0


def _cmd_match(args):
    frame = load_prediction_frame(args.pred)
    gt_frames = load_ground_truth(args.gt)
    frame_id = args.frame_id or frame.frame_id
    if frame_id not in gt_frames:
        raise ValidationError(f"frame {frame_id!r} not present in {args.gt}")
    gts = [GroundTruthKeypoint(lane_id=lane_id, order_in_lane=order,
                               x=float(x), y=float(y), z=float(z),
                               category=lane.category)
           for lane_id, lane in enumerate(gt_frames[frame_id])
           for order, (x, y, z) in enumerate(lane.points)]
    repeats = args.repeats if args.repeats else frame.keypoints.repeats_n
    matching = match_keypoints(frame.keypoints, gts, repeats_n=repeats,
                               strongest=args.strongest,
                               lambda_dist=args.lambda_dist,
                               lambda_cls=args.lambda_cls)
    report = {
        "frame_id": frame_id,
        "pairs": [[int(p), int(g)] for p, g in matching.pairs],
        "unmatched_proposals": [int(p) for p in matching.unmatched_proposals],
        "unmatched_gts": [int(g) for g in matching.unmatched_gts],
        # Chain targets exist only for one-to-one matchings; duplicated
        # matchings (repeats > 1) put several proposals on one GT.
        "connection_targets": None,
    }
    matched_gts = [g for _, g in matching.pairs]
    if len(set(matched_gts)) == len(matched_gts):
        targets = build_connection_targets(matching, gts, len(frame.keypoints))
        src, dst = np.nonzero(targets)
        report["connection_targets"] = [[int(i), int(j)] for i, j in zip(src, dst)]
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"matched {len(matching.pairs)} proposal-GT pairs covering "
          f"{len(set(matched_gts))} of {len(gts)} ground-truth keypoints",
          file=sys.stderr)
    return 0


def _worker_count(n_files):
    cap = os.environ.get("LANEKIT_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    if limit < 1:
        raise ValidationError("LANEKIT_THREADS must be >= 1")
    return max(1, min(limit, n_files))


def _load_pred_lanes(path):
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == ".json")
        if not files:
            raise ValidationError(f"no .json prediction files in {path}")
        frames = {}
        with ThreadPoolExecutor(max_workers=_worker_count(len(files))) as pool:
            for frame_id, lanes in pool.map(load_lane_frame, files):
                if frame_id in frames:
                    raise ValidationError(f"duplicate frame_id {frame_id!r}")
                frames[frame_id] = lanes
        return frames
    frame_id, lanes = load_lane_frame(path)
    return {frame_id: lanes}


def _cmd_eval(args):
    preds = _load_pred_lanes(args.pred)
    gts = load_ground_truth(args.gt)
    reports = evaluate(preds, gts, thresholds=args.threshold)
    payload = {"aggregate": [r.as_dict() for r in reports]}
    if args.per_frame:
        payload["per_frame"] = {
            fid: [r.as_dict() for r in
                  evaluate({fid: preds[fid]}, {fid: gts[fid]},
                           thresholds=args.threshold)]
            for fid in sorted(preds)}
    for r in reports:
        print(f"threshold {r.threshold:g} m: F1={r.f1:.4f} "
              f"precision={r.precision:.4f} recall={r.recall:.4f} AP={r.ap:.4f} "
              f"x_err near/far={r.x_err_near:.3f}/{r.x_err_far:.3f} "
              f"z_err near/far={r.z_err_near:.3f}/{r.z_err_far:.3f}")
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_synth(args):
    grid = _grid_from_args(args)
    spec = SceneSpec(seed=args.seed, lane_count=args.lanes, sigma_x=args.noise_x,
                     sigma_z=args.noise_z, proposals_per_target=args.n,
                     dropout_p=args.dropout,
                     distractor_edge_rate=args.distractors,
                     strong_distractors=args.strong_distractors)
    gt_lanes, frame = generate_scene(spec, grid)
    save_prediction_frame(frame, args.out_pred)
    if args.out_gt:
        save_ground_truth({frame.frame_id: gt_lanes}, args.out_gt)
    print(f"scene {frame.frame_id}: {len(gt_lanes)} lanes, "
          f"{len(frame.keypoints)} proposals")
    return 0


def _percentile(values, q):
    return float(np.percentile(np.asarray(values), q))


def _cmd_bench(args):
    rng = np.random.default_rng(args.seed)
    warmup = 5
    nms_times = []
    for trial in range(args.trials + warmup):
        pts = np.column_stack([rng.uniform(-10, 10, args.proposals),
                               rng.uniform(0, 100, args.proposals)])
        scores = rng.uniform(0, 1, args.proposals)
        start = time.perf_counter()
        point_nms(pts, scores, 1.0, 1.0)
        if trial >= warmup:
            nms_times.append((time.perf_counter() - start) * 1e3)

    lanes, rows = 8, args.nodes // 8
    grid = build_uniform_grid(rows=rows, cols=64, y_range=(3.0, 3.0 + 2.0 * (rows - 1)),
                              x_range=(-9.0, 9.0))
    extract_times = []
    for trial in range(args.trials + warmup):
        spec = SceneSpec(seed=args.seed + trial, lane_count=lanes,
                         proposals_per_target=1, distractor_edge_rate=0.02)
        _, frame = generate_scene(spec, grid)
        start = time.perf_counter()
        extract_lanes(frame.keypoints, frame.adjacency, t_a=args.t_a)
        if trial >= warmup:
            extract_times.append((time.perf_counter() - start) * 1e3)

    report = {
        "point_nms": {"proposals": args.proposals, "trials": args.trials,
                      "median_ms": statistics.median(nms_times),
                      "p99_ms": _percentile(nms_times, 99)},
        "extract_lanes": {"nodes": lanes * rows, "trials": args.trials,
                          "median_ms": statistics.median(extract_times),
                          "p99_ms": _percentile(extract_times, 99)},
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="lanekit",
                                     description="keypoint-graph lane detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="write anchor grid positions as CSV")
    _add_grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("project", help="project grid anchors into the image")
    _add_grid_args(p)
    p.add_argument("--camera", help="camera JSON (default: forward camera)")
    p.add_argument("--ground-height", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("nms", help="suppress duplicate proposals in a frame")
    p.add_argument("--pred", required=True)
    p.add_argument("--thresh-x", type=float)
    p.add_argument("--thresh-y", type=float)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--iou", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("extract", help="run NMS and extract lane instances")
    p.add_argument("--pred", required=True)
    p.add_argument("--t-a", type=float, default=0.5)
    p.add_argument("--min-lane-points", type=int, default=2)
    p.add_argument("--thresh-x", type=float)
    p.add_argument("--thresh-y", type=float)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--iou", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("match", help="assign proposals to ground-truth keypoints")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--frame-id")
    p.add_argument("--repeats", type=int)
    p.add_argument("--strongest", action="store_true")
    p.add_argument("--lambda-dist", type=float, default=1.0)
    p.add_argument("--lambda-cls", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("eval", help="score extracted lanes against ground truth")
    p.add_argument("--pred", required=True,
                   help="lane file or directory of per-frame lane files")
    p.add_argument("--gt", required=True)
    p.add_argument("--threshold", type=_threshold_list, default=EVAL_THRESHOLDS_M,
                   help="comma-separated distance thresholds in meters")
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--per-frame", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    _add_grid_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lanes", type=int, default=3)
    p.add_argument("--noise-x", type=float, default=0.0)
    p.add_argument("--noise-z", type=float, default=0.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--distractors", type=float, default=0.0)
    p.add_argument("--strong-distractors", action="store_true")
    p.add_argument("--out-pred", required=True)
    p.add_argument("--out-gt")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="time the suppression and extraction path")
    p.add_argument("--proposals", type=int, default=512)
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--t-a", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
