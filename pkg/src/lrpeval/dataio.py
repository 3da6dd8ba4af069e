"""File ingestion and report/curve export.

Inputs follow the COCO conventions: an annotation document with images /
annotations / categories (bbox as [x, y, w, h], iscrowd mapping to the
ignore flag) and a results array of {image_id, category_id, bbox, score}.
Schema violations raise SchemaError with a path to the offending field.
Outputs are deterministic byte streams: an evaluation report (JSON or
CSV, schema lrp_report_v1), long-format curve data, per-class threshold
files, and stream fixtures for the video-linking pipeline.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .ap import AP_VARIANTS, RPCurve, ap, map_over_taus, rp_curve
from .geometry import BoundingBox
from .lrp import UndefinedLrp
from .matching import ClassId, Detection, GroundTruth, count_real
from .sweep import (
    DEFAULT_GRID_STEP,
    MoLrpReport,
    SweepResult,
    aggregate_molrp,
    sweep_class,
)
from .video import FrameDetections, StreamDetection

logger = logging.getLogger("lrpeval")

REPORT_SCHEMA = "lrp_report_v1"
THRESHOLDS_SCHEMA = "lrp_thresholds_v1"
DEFAULT_TAU = 0.5
DEFAULT_TAU_LIST = tuple(i / 100 for i in range(50, 100, 5))


class SchemaError(ValueError):
    """An input file violates its declared schema; the message names the
    offending field."""


@dataclass(frozen=True)
class ImageInfo:
    id: object
    width: float | None = None
    height: float | None = None


@dataclass(frozen=True)
class Category:
    id: ClassId
    name: str


@dataclass(frozen=True)
class Dataset:
    """Validated ground-truth side of an evaluation."""

    images: tuple[ImageInfo, ...]
    categories: tuple[Category, ...]
    ground_truths: tuple[GroundTruth, ...]

    def category_names(self) -> dict[ClassId, str]:
        return {c.id: c.name for c in self.categories}

    def class_ids(self) -> list[ClassId]:
        return sorted(c.id for c in self.categories)


def _require(record: Mapping, key: str, where: str):
    if key not in record:
        raise SchemaError(f"{where}.{key}: missing required field")
    return record[key]


def _parse_bbox(raw, where: str) -> BoundingBox:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise SchemaError(f"{where}: bbox must be [x, y, width, height], got {raw!r}")
    x, y, w, h = raw
    try:
        return BoundingBox.from_xywh(float(x), float(y), float(w), float(h))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def load_ground_truth(path) -> Dataset:
    """Load and validate a COCO-style annotation file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise SchemaError("root: annotation document must be a JSON object")

    images = []
    image_ids = set()
    for i, img in enumerate(data.get("images", [])):
        img_id = _require(img, "id", f"images[{i}]")
        if img_id in image_ids:
            raise SchemaError(f"images[{i}].id: duplicate image id {img_id!r}")
        image_ids.add(img_id)
        images.append(ImageInfo(img_id, img.get("width"), img.get("height")))
    image_by_id = {im.id: im for im in images}

    categories = []
    category_ids = set()
    for i, cat in enumerate(data.get("categories", [])):
        cat_id = _require(cat, "id", f"categories[{i}]")
        if cat_id in category_ids:
            raise SchemaError(f"categories[{i}].id: duplicate category id {cat_id!r}")
        category_ids.add(cat_id)
        categories.append(Category(cat_id, str(cat.get("name", cat_id))))

    gts = []
    for i, ann in enumerate(data.get("annotations", [])):
        where = f"annotations[{i}]"
        img_id = _require(ann, "image_id", where)
        if img_id not in image_ids:
            raise SchemaError(f"{where}.image_id: unknown image id {img_id!r}")
        cat_id = _require(ann, "category_id", where)
        if cat_id not in category_ids:
            raise SchemaError(f"{where}.category_id: unknown category id {cat_id!r}")
        raw_bbox = _require(ann, "bbox", where)
        try:
            box = _parse_bbox(raw_bbox, f"{where}.bbox")
        except SchemaError as exc:
            ann_id = ann.get("id", "?")
            raise SchemaError(f"{exc} (annotation id {ann_id})") from None
        image = image_by_id[img_id]
        if box.x_min < 0 or box.y_min < 0 or (
            image.width is not None and box.x_max > image.width
        ) or (image.height is not None and box.y_max > image.height):
            logger.warning(
                "annotation id %s extends outside image %s; kept as annotated",
                ann.get("id", "?"), img_id,
            )
        gts.append(GroundTruth(img_id, cat_id, box, ignore=bool(ann.get("iscrowd", 0))))

    return Dataset(tuple(images), tuple(categories), tuple(gts))


def load_detections(path, dataset: Dataset) -> list[Detection]:
    """Load a COCO-style results array and validate it against a dataset."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise SchemaError("root: detection results must be a JSON array")
    image_ids = {im.id for im in dataset.images}
    category_ids = {c.id for c in dataset.categories}
    dets = []
    for i, rec in enumerate(data):
        where = f"detections[{i}]"
        img_id = _require(rec, "image_id", where)
        if img_id not in image_ids:
            raise SchemaError(f"{where}.image_id: unknown image id {img_id!r}")
        cat_id = _require(rec, "category_id", where)
        if cat_id not in category_ids:
            raise SchemaError(f"{where}.category_id: unknown category id {cat_id!r}")
        score = _require(rec, "score", where)
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise SchemaError(f"{where}.score: must be a real in [0, 1], got {score!r}")
        box = _parse_bbox(_require(rec, "bbox", where), f"{where}.bbox")
        dets.append(Detection(img_id, cat_id, box, float(score)))
    return dets


def save_detections(dets: Sequence[Detection], path) -> None:
    """Write detections as a COCO-style results array."""
    records = [
        {
            "image_id": d.image_id,
            "category_id": d.class_id,
            "bbox": list(d.box.as_xywh()),
            "score": d.score,
        }
        for d in dets
    ]
    _dump_json(records, path)


def save_ground_truth(dataset: Dataset, path) -> None:
    """Write a dataset back out in COCO annotation form."""
    doc = {
        "images": [
            {"id": im.id, "width": im.width, "height": im.height} for im in dataset.images
        ],
        "annotations": [
            {
                "id": i + 1,
                "image_id": g.image_id,
                "category_id": g.class_id,
                "bbox": list(g.box.as_xywh()),
                "iscrowd": int(g.ignore),
            }
            for i, g in enumerate(dataset.ground_truths)
        ],
        "categories": [{"id": c.id, "name": c.name} for c in dataset.categories],
    }
    _dump_json(doc, path)


def load_stream(path) -> list[FrameDetections]:
    """Load a stream fixture: {frames: [{frame_index, detections:
    [{class_id, bbox, class_scores}]}]} with bbox as [x, y, w, h]."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "frames" not in data:
        raise SchemaError("root: stream fixture must be an object with a 'frames' array")
    frames = []
    for i, frame in enumerate(data["frames"]):
        where = f"frames[{i}]"
        index = _require(frame, "frame_index", where)
        dets = []
        for j, rec in enumerate(frame.get("detections", [])):
            dwhere = f"{where}.detections[{j}]"
            class_id = _require(rec, "class_id", dwhere)
            box = _parse_bbox(_require(rec, "bbox", dwhere), f"{dwhere}.bbox")
            raw_scores = _require(rec, "class_scores", dwhere)
            if not isinstance(raw_scores, list):
                raise SchemaError(f"{dwhere}.class_scores: must be an array")
            try:
                dets.append(StreamDetection(class_id, box, tuple(float(v) for v in raw_scores)))
            except ValueError as exc:
                raise SchemaError(f"{dwhere}.class_scores: {exc}") from exc
        frames.append(FrameDetections(int(index), tuple(dets)))
    return frames


def save_stream(frames: Sequence[FrameDetections], path) -> None:
    doc = {
        "frames": [
            {
                "frame_index": frame.frame_index,
                "detections": [
                    {
                        "class_id": det.class_id,
                        "bbox": list(det.box.as_xywh()),
                        "class_scores": list(det.class_scores),
                    }
                    for det in frame.detections
                ],
            }
            for frame in frames
        ]
    }
    _dump_json(doc, path)


@dataclass(frozen=True)
class ThresholdRow:
    class_id: ClassId
    class_name: str
    s_star: float
    olrp: float
    warning: str | None


def threshold_rows(
    report: MoLrpReport, names: Mapping[ClassId, str] | None = None
) -> list[ThresholdRow]:
    """Per-class operating thresholds from a sweep report.

    A class with ground truth but no detections has every threshold tie
    at total error 1; exporting the tie-break winner (1.0) would suppress
    any future detection of that class, so the row is forced to 0.0 with
    a warning instead.
    """
    names = names or {}
    rows = []
    for cid in sorted(report.per_class, key=str):
        result = report.per_class[cid]
        if not result.evaluable:
            continue
        warning = None
        s_star = result.s_star
        first = result.samples[0].breakdown
        if first is not None and first.n_tp + first.n_fp == 0:
            s_star = 0.0
            warning = "class has ground truth but no detections; threshold forced to 0.00"
            logger.warning("class %s: %s", cid, warning)
        rows.append(ThresholdRow(cid, str(names.get(cid, cid)), s_star, result.olrp, warning))
    return rows


def save_thresholds(rows: Sequence[ThresholdRow], tau: float, path) -> None:
    doc = {
        "schema": THRESHOLDS_SCHEMA,
        "tau": tau,
        "thresholds": [
            {
                "class_id": r.class_id,
                "class_name": r.class_name,
                "s_star": round(r.s_star, 4),
                "olrp": round(r.olrp, 4),
                "warning": r.warning,
            }
            for r in rows
        ],
    }
    _dump_json(doc, path)


def load_thresholds(path) -> dict[ClassId, float]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or data.get("schema") != THRESHOLDS_SCHEMA:
        raise SchemaError(f"root: expected a {THRESHOLDS_SCHEMA} document")
    out = {}
    for i, rec in enumerate(data.get("thresholds", [])):
        cid = _require(rec, "class_id", f"thresholds[{i}]")
        out[cid] = float(_require(rec, "s_star", f"thresholds[{i}]"))
    return out


@dataclass(frozen=True)
class ClassReportRow:
    """One class of an evaluation report."""

    class_id: ClassId
    class_name: str
    n_gt: int
    n_det: int
    evaluable: bool
    olrp: float | None
    olrp_iou: float | None
    olrp_fp: float | None
    olrp_fn: float | None
    s_star: float | None
    ap_continuous: float | None
    ap_pascal11: float | None
    ap_coco101: float | None


@dataclass(frozen=True)
class EvalReport:
    """Per-class rows plus the summary means; every summary value is
    recomputable from the rows."""

    tau: float
    grid_step: float
    ap_variant: str
    tau_list: tuple[float, ...]
    rows: tuple[ClassReportRow, ...]
    molrp: float
    molrp_iou: float | None
    molrp_fp: float | None
    molrp_fn: float | None
    mean_ap: float | None
    s_star_min: float
    s_star_max: float
    not_evaluable: tuple[ClassId, ...]


def build_report(
    dataset: Dataset,
    detections: Sequence[Detection],
    tau: float = DEFAULT_TAU,
    tau_list: Sequence[float] = DEFAULT_TAU_LIST,
    grid_step: float = DEFAULT_GRID_STEP,
    ap_variant: str = "coco101",
    workers: int = 1,
) -> EvalReport:
    """Evaluate detections against a dataset: per-class sweep optima, AP
    variants at tau, and the tau-averaged mean AP over tau_list."""
    if ap_variant not in AP_VARIANTS:
        raise ValueError(f"unknown AP variant {ap_variant!r}")
    gts = dataset.ground_truths
    class_ids = dataset.class_ids()
    names = dataset.category_names()

    def evaluate_class(cid: ClassId):
        class_gts = [g for g in gts if g.class_id == cid]
        class_dets = [d for d in detections if d.class_id == cid]
        sweep = sweep_class(class_gts, class_dets, cid, tau, grid_step)
        aps = {v: None for v in AP_VARIANTS}
        tau_avg_ap = None
        if count_real(class_gts) > 0:
            curve = rp_curve(class_gts, class_dets, cid, tau)
            aps = {v: ap(curve, v) for v in AP_VARIANTS}
            per_tau = [
                ap(rp_curve(class_gts, class_dets, cid, t), ap_variant) for t in tau_list
            ]
            tau_avg_ap = sum(per_tau) / len(per_tau)
        return cid, class_gts, class_dets, sweep, aps, tau_avg_ap

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(evaluate_class, class_ids))
    else:
        evaluated = [evaluate_class(cid) for cid in class_ids]

    rows = []
    per_class_sweeps: dict[ClassId, SweepResult] = {}
    per_class_tau_ap = []
    for cid, class_gts, class_dets, sweep, aps, tau_avg_ap in evaluated:
        per_class_sweeps[cid] = sweep
        if tau_avg_ap is not None:
            per_class_tau_ap.append(tau_avg_ap)
        rows.append(
            ClassReportRow(
                class_id=cid,
                class_name=names[cid],
                n_gt=count_real(class_gts),
                n_det=len(class_dets),
                evaluable=sweep.evaluable,
                olrp=sweep.olrp,
                olrp_iou=sweep.olrp_iou,
                olrp_fp=sweep.olrp_fp,
                olrp_fn=sweep.olrp_fn,
                s_star=sweep.s_star,
                ap_continuous=aps["continuous"],
                ap_pascal11=aps["pascal11"],
                ap_coco101=aps["coco101"],
            )
        )

    summary = aggregate_molrp(per_class_sweeps, tau)
    if per_class_tau_ap:
        mean_ap = sum(per_class_tau_ap) / len(per_class_tau_ap)
    else:
        logger.warning("no class has ground truth; mean AP left unset")
        mean_ap = None

    return EvalReport(
        tau=tau,
        grid_step=grid_step,
        ap_variant=ap_variant,
        tau_list=tuple(tau_list),
        rows=tuple(rows),
        molrp=summary.molrp,
        molrp_iou=summary.molrp_iou,
        molrp_fp=summary.molrp_fp,
        molrp_fn=summary.molrp_fn,
        mean_ap=mean_ap,
        s_star_min=summary.s_star_min,
        s_star_max=summary.s_star_max,
        not_evaluable=summary.not_evaluable,
    )


def _round4(value: float | None) -> float | None:
    return None if value is None else round(value, 4)


def _fmt4(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def report_to_dict(report: EvalReport) -> dict:
    """JSON-ready form of a report, reals at 4 decimal places."""
    return {
        "schema": REPORT_SCHEMA,
        "config": {
            "tau": report.tau,
            "grid_step": report.grid_step,
            "ap_variant": report.ap_variant,
            "tau_list": list(report.tau_list),
        },
        "classes": [
            {
                "class_id": r.class_id,
                "class_name": r.class_name,
                "n_gt": r.n_gt,
                "n_det": r.n_det,
                "evaluable": r.evaluable,
                "olrp": _round4(r.olrp),
                "olrp_iou": _round4(r.olrp_iou),
                "olrp_fp": _round4(r.olrp_fp),
                "olrp_fn": _round4(r.olrp_fn),
                "s_star": _round4(r.s_star),
                "ap_continuous": _round4(r.ap_continuous),
                "ap_pascal11": _round4(r.ap_pascal11),
                "ap_coco101": _round4(r.ap_coco101),
            }
            for r in report.rows
        ],
        "summary": {
            "molrp": _round4(report.molrp),
            "molrp_iou": _round4(report.molrp_iou),
            "molrp_fp": _round4(report.molrp_fp),
            "molrp_fn": _round4(report.molrp_fn),
            "mean_ap": _round4(report.mean_ap),
            "s_star_min": _round4(report.s_star_min),
            "s_star_max": _round4(report.s_star_max),
            "not_evaluable": [str(c) for c in report.not_evaluable],
        },
    }

_REPORT_CSV_FIELDS = [
    "class_id", "class_name", "n_gt", "n_det", "evaluable",
    "olrp", "olrp_iou", "olrp_fp", "olrp_fn", "s_star",
    "ap_continuous", "ap_pascal11", "ap_coco101",
    "mean_ap", "s_star_min", "s_star_max",
]


def export_report(report: EvalReport, path, fmt: str = "json") -> None:
    """Write a report as JSON or CSV with stable field ordering."""
    if fmt == "json":
        _dump_json(report_to_dict(report), path)
        return
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}; expected json or csv")
    with _open_out(path) as fh:
        fh.write(
            f"# {REPORT_SCHEMA} tau={report.tau:.4f} grid_step={report.grid_step:.4f} "
            f"ap_variant={report.ap_variant} "
            f"tau_list={','.join(f'{t:.2f}' for t in report.tau_list)}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_REPORT_CSV_FIELDS)
        for r in report.rows:
            writer.writerow([
                r.class_id, r.class_name, r.n_gt, r.n_det, str(r.evaluable).lower(),
                _fmt4(r.olrp), _fmt4(r.olrp_iou), _fmt4(r.olrp_fp), _fmt4(r.olrp_fn),
                _fmt4(r.s_star),
                _fmt4(r.ap_continuous), _fmt4(r.ap_pascal11), _fmt4(r.ap_coco101),
                "", "", "",
            ])
        writer.writerow([
            "", "summary", sum(r.n_gt for r in report.rows),
            sum(r.n_det for r in report.rows), "",
            _fmt4(report.molrp), _fmt4(report.molrp_iou), _fmt4(report.molrp_fp),
            _fmt4(report.molrp_fn), "",
            "", "", "",
            _fmt4(report.mean_ap), _fmt4(report.s_star_min), _fmt4(report.s_star_max),
        ])


CURVE_CSV_FIELDS = [
    "class_id", "tau", "source", "s", "recall", "precision",
    "lrp_total", "lrp_iou", "lrp_fp", "lrp_fn", "is_optimal",
]


def export_curves(items: Iterable[SweepResult | RPCurve], path) -> None:
    """Write long-format curve records.

    Sweep results yield one record per defined grid sample (recall and
    precision recovered from the FN/FP components, the optimal threshold
    flagged on exactly one record); recall-precision curves yield one
    record per point with the detection score in the s column.
    """
    with _open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_CSV_FIELDS)
        for item in items:
            if isinstance(item, SweepResult):
                for sample in item.samples:
                    bd = sample.breakdown
                    if bd is None:
                        continue
                    recall = None if bd.fn_component is None else 1.0 - bd.fn_component
                    precision = None if bd.fp_component is None else 1.0 - bd.fp_component
                    writer.writerow([
                        item.class_id, f"{item.tau:.4f}", "sweep", f"{sample.s:.4f}",
                        _fmt4(recall), _fmt4(precision),
                        _fmt4(bd.total), _fmt4(bd.loc_component),
                        _fmt4(bd.fp_component), _fmt4(bd.fn_component),
                        str(item.evaluable and sample.s == item.s_star).lower(),
                    ])
            elif isinstance(item, RPCurve):
                for (recall, precision, score) in item.points:
                    writer.writerow([
                        item.class_id, f"{item.tau:.4f}", "rp", _fmt4(score),
                        _fmt4(recall), _fmt4(precision),
                        "", "", "", "", "",
                    ])
            else:
                raise TypeError(f"cannot export {type(item).__name__} as curve data")


@contextmanager
def _open_out(path):
    """Writable text handle for a path, with "-" meaning stdout."""
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _dump_json(obj, path) -> None:
    with _open_out(path) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
