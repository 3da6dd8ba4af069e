"""Command-line surface: evaluation, sweeps, curve export, threshold
export, side-by-side comparison, and stream filtering.

Progress and warnings go to standard error; data goes to standard output
or to files. Exit codes: 0 success, 2 input error, 3 nothing evaluable.
Identical invocations on identical inputs write byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from .dataio import (
    DEFAULT_TAU,
    SchemaError,
    build_report,
    export_curves,
    export_report,
    load_detections,
    load_ground_truth,
    load_stream,
    load_thresholds,
    report_to_dict,
    save_stream,
    save_thresholds,
    threshold_rows,
    _open_out,
)
from .ap import rp_curve
from .lrp import UndefinedLrp
from .matching import count_real
from .sweep import DEFAULT_GRID_STEP, molrp, sweep_class
from .video import DEFAULT_ALPHA, DEFAULT_COST_CUTOFF, run_stream, stream_to_detections

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NOTHING_EVALUABLE = 3
DEFAULT_TAU_RANGE = "0.5:0.05:0.95"


def parse_tau_list(text: str) -> tuple[float, ...]:
    """Parse "start:step:stop" ranges or comma-separated tau values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"tau range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad tau range {text!r}")
        count = round((stop - start) / step) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(p) for p in text.split(","))


def _add_io_args(sub, with_detections=True):
    sub.add_argument("--gt", required=True, help="COCO-style annotation JSON")
    if with_detections:
        sub.add_argument("--det", required=True, help="COCO-style detection results JSON")
    sub.add_argument(
        "--tau", type=float, default=DEFAULT_TAU,
        help=f"IoU validation threshold (default: {DEFAULT_TAU})",
    )
    sub.add_argument(
        "--grid-step", type=float, default=DEFAULT_GRID_STEP,
        help=f"score-threshold grid resolution (default: {DEFAULT_GRID_STEP})",
    )
    sub.add_argument(
        "--output", default="-",
        help="output path; '-' writes to standard output (default: -)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrpeval",
        description=(
            "Object-detection evaluation with the LRP error: per-class optimal "
            "LRP and thresholds, AP variants, curve data, and stream filtering."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="full evaluation report (oLRP, components, s*, AP, moLRP, mAP)")
    _add_io_args(p_eval)
    p_eval.add_argument(
        "--tau-list", default=DEFAULT_TAU_RANGE,
        help=f"taus averaged into mean AP, as start:step:stop or a comma list (default: {DEFAULT_TAU_RANGE})",
    )
    p_eval.add_argument(
        "--ap-variant", choices=("continuous", "pascal11", "coco101"), default="coco101",
        help="AP integration rule (default: coco101)",
    )
    p_eval.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format (default: json)")
    p_eval.add_argument("--workers", type=int, default=1,
                        help="parallel per-class evaluation workers (default: 1)")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="per-class optimal LRP at one or more taus")
    _add_io_args(p_sweep)
    p_sweep.add_argument(
        "--taus", default=None,
        help="comma list or start:step:stop of taus to sweep (default: just --tau)",
    )
    p_sweep.add_argument("--format", choices=("json", "csv"), default="csv",
                         help="table format (default: csv)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_curves = sub.add_parser("curves", help="long-format curve data (sweep samples + RP points)")
    _add_io_args(p_curves)
    p_curves.add_argument(
        "--taus", default=None,
        help="comma list or start:step:stop of taus, one curve block per tau (default: just --tau)",
    )
    p_curves.add_argument("--no-rp", action="store_true",
                          help="omit recall-precision points, keep only sweep samples")
    p_curves.set_defaults(func=cmd_curves)

    p_thr = sub.add_parser("thresholds", help="per-class optimal score thresholds (s*)")
    _add_io_args(p_thr)
    p_thr.set_defaults(func=cmd_thresholds)

    p_cmp = sub.add_parser("compare", help="two detection result files side by side")
    p_cmp.add_argument("--gt", required=True, help="COCO-style annotation JSON")
    p_cmp.add_argument("--det-a", required=True, help="first detection results JSON")
    p_cmp.add_argument("--det-b", required=True, help="second detection results JSON")
    p_cmp.add_argument("--tau", type=float, default=DEFAULT_TAU,
                       help=f"IoU validation threshold (default: {DEFAULT_TAU})")
    p_cmp.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP,
                       help=f"score-threshold grid resolution (default: {DEFAULT_GRID_STEP})")
    p_cmp.add_argument("--tau-list", default=DEFAULT_TAU_RANGE,
                       help=f"taus averaged into mean AP (default: {DEFAULT_TAU_RANGE})")
    p_cmp.add_argument("--format", choices=("json", "csv"), default="json",
                       help="comparison format (default: json)")
    p_cmp.add_argument("--output", default="-",
                       help="output path; '-' writes to standard output (default: -)")
    p_cmp.set_defaults(func=cmd_compare)

    p_stream = sub.add_parser(
        "stream", help="link/rescore/filter a detection stream and compare thresholdings"
    )
    p_stream.add_argument("--stream", required=True, help="stream fixture JSON")
    p_stream.add_argument("--gt", required=True,
                          help="COCO-style annotations with image id = frame index")
    p_stream.add_argument("--thresholds-file", default=None,
                          help="per-class thresholds JSON from the thresholds command")
    p_stream.add_argument("--threshold", type=float, default=0.5,
                          help="general score threshold baseline (default: 0.5)")
    p_stream.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                          help=f"box-overlap weight in the linking cost (default: {DEFAULT_ALPHA})")
    p_stream.add_argument("--cost-cutoff", type=float, default=DEFAULT_COST_CUTOFF,
                          help=f"linking cost above which pairs sever (default: {DEFAULT_COST_CUTOFF})")
    p_stream.add_argument("--tau", type=float, default=DEFAULT_TAU,
                          help=f"IoU threshold for stream evaluation (default: {DEFAULT_TAU})")
    p_stream.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP,
                          help=f"score-threshold grid resolution (default: {DEFAULT_GRID_STEP})")
    p_stream.add_argument("--filtered-output", default=None,
                          help="write the filtered stream fixture here")
    p_stream.add_argument("--output", default="-",
                          help="comparison table path; '-' writes to standard output (default: -)")
    p_stream.set_defaults(func=cmd_stream)

    return parser


def cmd_eval(args) -> int:
    dataset = load_ground_truth(args.gt)
    dets = load_detections(args.det, dataset)
    report = build_report(
        dataset, dets,
        tau=args.tau,
        tau_list=parse_tau_list(args.tau_list),
        grid_step=args.grid_step,
        ap_variant=args.ap_variant,
        workers=args.workers,
    )
    export_report(report, args.output, args.format)
    return EXIT_OK


_SWEEP_FIELDS = ["class_id", "class_name", "tau", "evaluable",
                 "olrp", "olrp_iou", "olrp_fp", "olrp_fn", "s_star"]


def cmd_sweep(args) -> int:
    dataset = load_ground_truth(args.gt)
    dets = load_detections(args.det, dataset)
    taus = parse_tau_list(args.taus) if args.taus else (args.tau,)
    names = dataset.category_names()
    rows = []
    any_evaluable = False
    for tau in taus:
        for cid in dataset.class_ids():
            result = sweep_class(dataset.ground_truths, dets, cid, tau, args.grid_step)
            any_evaluable = any_evaluable or result.evaluable
            rows.append({
                "class_id": cid,
                "class_name": names[cid],
                "tau": tau,
                "evaluable": result.evaluable,
                "olrp": result.olrp,
                "olrp_iou": result.olrp_iou,
                "olrp_fp": result.olrp_fp,
                "olrp_fn": result.olrp_fn,
                "s_star": result.s_star,
            })
    if not any_evaluable:
        raise UndefinedLrp("no class has anything to evaluate")
    with _open_out(args.output) as fh:
        if args.format == "json":
            json.dump({"schema": "lrp_sweep_v1", "rows": _rounded_rows(rows)}, fh, indent=2)
            fh.write("\n")
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_SWEEP_FIELDS)
            for row in rows:
                writer.writerow([
                    row["class_id"], row["class_name"], f"{row['tau']:.4f}",
                    str(row["evaluable"]).lower(),
                    *(("" if row[k] is None else f"{row[k]:.4f}")
                      for k in ("olrp", "olrp_iou", "olrp_fp", "olrp_fn", "s_star")),
                ])
    return EXIT_OK


def _rounded_rows(rows):
    out = []
    for row in rows:
        out.append({
            k: (round(v, 4) if isinstance(v, float) else v) for k, v in row.items()
        })
    return out


def cmd_curves(args) -> int:
    dataset = load_ground_truth(args.gt)
    dets = load_detections(args.det, dataset)
    taus = parse_tau_list(args.taus) if args.taus else (args.tau,)
    items = []
    any_evaluable = False
    for tau in taus:
        for cid in dataset.class_ids():
            sweep = sweep_class(dataset.ground_truths, dets, cid, tau, args.grid_step)
            any_evaluable = any_evaluable or sweep.evaluable
            items.append(sweep)
            class_gts = [g for g in dataset.ground_truths if g.class_id == cid]
            if not args.no_rp and count_real(class_gts) > 0:
                items.append(rp_curve(dataset.ground_truths, dets, cid, tau))
    if not any_evaluable:
        raise UndefinedLrp("no class has anything to evaluate")
    export_curves(items, args.output)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    dataset = load_ground_truth(args.gt)
    dets = load_detections(args.det, dataset)
    report = molrp(dataset.ground_truths, dets, dataset.class_ids(), args.tau, args.grid_step)
    rows = threshold_rows(report, dataset.category_names())
    save_thresholds(rows, args.tau, args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    dataset = load_ground_truth(args.gt)
    tau_list = parse_tau_list(args.tau_list)
    reports = {}
    for side, path in (("a", args.det_a), ("b", args.det_b)):
        dets = load_detections(path, dataset)
        reports[side] = build_report(
            dataset, dets, tau=args.tau, tau_list=tau_list, grid_step=args.grid_step
        )
    doc = _comparison_doc(reports["a"], reports["b"], args)
    with _open_out(args.output) as fh:
        if args.format == "json":
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([
                "class_id", "class_name",
                "olrp_a", "olrp_b", "olrp_delta",
                "s_star_a", "s_star_b", "ap_a", "ap_b",
            ])
            for row in doc["classes"]:
                writer.writerow([
                    row["class_id"], row["class_name"],
                    *(("" if row[k] is None else f"{row[k]:.4f}")
                      for k in ("olrp_a", "olrp_b", "olrp_delta",
                                "s_star_a", "s_star_b", "ap_a", "ap_b")),
                ])
    return EXIT_OK


def _comparison_doc(a, b, args) -> dict:
    classes = []
    for ra, rb in zip(a.rows, b.rows):
        delta = None
        if ra.olrp is not None and rb.olrp is not None:
            delta = rb.olrp - ra.olrp
        classes.append({
            "class_id": ra.class_id,
            "class_name": ra.class_name,
            "olrp_a": _r4(ra.olrp), "olrp_b": _r4(rb.olrp), "olrp_delta": _r4(delta),
            "s_star_a": _r4(ra.s_star), "s_star_b": _r4(rb.s_star),
            "ap_a": _r4(ra.ap_coco101), "ap_b": _r4(rb.ap_coco101),
        })
    return {
        "schema": "lrp_compare_v1",
        "config": {"tau": args.tau, "grid_step": args.grid_step},
        "classes": classes,
        "summary": {
            "molrp_a": _r4(a.molrp), "molrp_b": _r4(b.molrp),
            "mean_ap_a": _r4(a.mean_ap), "mean_ap_b": _r4(b.mean_ap),
        },
    }


def _r4(value):
    return None if value is None else round(value, 4)


def cmd_stream(args) -> int:
    frames = load_stream(args.stream)
    dataset = load_ground_truth(args.gt)
    class_ids = dataset.class_ids()
    names = dataset.category_names()

    def evaluate(dets):
        report = molrp(dataset.ground_truths, dets, class_ids, args.tau, args.grid_step)
        return {cid: report.per_class[cid] for cid in class_ids}, report

    raw_eval, raw_report = evaluate(stream_to_detections(frames))
    general = run_stream(frames, {}, args.alpha, args.cost_cutoff, args.threshold)
    general_eval, general_report = evaluate(stream_to_detections(general.frames))

    specific = None
    specific_eval = specific_report = None
    if args.thresholds_file:
        thresholds = load_thresholds(args.thresholds_file)
        specific = run_stream(frames, thresholds, args.alpha, args.cost_cutoff, args.threshold)
        specific_eval, specific_report = evaluate(stream_to_detections(specific.frames))

    if args.filtered_output:
        save_stream((specific or general).frames, args.filtered_output)

    classes = []
    for cid in class_ids:
        row = {
            "class_id": cid,
            "class_name": names[cid],
            "olrp_raw": _r4(raw_eval[cid].olrp),
            "olrp_general": _r4(general_eval[cid].olrp),
        }
        if specific_eval is not None:
            row["olrp_class_specific"] = _r4(specific_eval[cid].olrp)
        classes.append(row)
    doc = {
        "schema": "lrp_stream_compare_v1",
        "config": {
            "tau": args.tau,
            "general_threshold": args.threshold,
            "alpha": args.alpha,
            "cost_cutoff": args.cost_cutoff,
            "thresholds_file": args.thresholds_file,
        },
        "classes": classes,
        "summary": {
            "molrp_raw": _r4(raw_report.molrp),
            "molrp_general": _r4(general_report.molrp),
            "molrp_class_specific": (
                _r4(specific_report.molrp) if specific_report is not None else None
            ),
        },
    }
    with _open_out(args.output) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def main(argv=None) -> int:
    # bind warnings to the stderr of this invocation
    log = logging.getLogger("lrpeval")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("warning: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (SchemaError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except UndefinedLrp as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOTHING_EVALUABLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
