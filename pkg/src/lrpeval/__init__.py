"""Object-detection evaluation with the LRP (localization-recall-precision)
error: per-class optimal thresholds, AP variants, set-distance property
machinery, and a frame-linking pipeline for detection streams."""

from .geometry import BoundingBox, area, iou, iou_distance
from .matching import (
    Detection,
    GroundTruth,
    MatchResult,
    hungarian,
    label_detections,
    match_greedy,
    match_optimal,
)
from .lrp import (
    DasaParams,
    LrpBreakdown,
    UndefinedLrp,
    dasa,
    lrp_components,
    lrp_total,
)
from .sweep import MoLrpReport, SweepResult, molrp, olrp_at_tau_sweep, sweep_class, threshold_grid
from .ap import RPCurve, ap, map_over_taus, rp_curve
from .video import (
    FrameDetections,
    StreamDetection,
    StreamResult,
    Tubelet,
    bayes_update,
    link_frames,
    run_stream,
    stream_to_detections,
)
from .dataio import (
    Dataset,
    EvalReport,
    SchemaError,
    build_report,
    export_curves,
    export_report,
    load_detections,
    load_ground_truth,
    load_stream,
    load_thresholds,
    save_detections,
    save_ground_truth,
    save_stream,
    save_thresholds,
    threshold_rows,
)

__all__ = [
    "BoundingBox", "area", "iou", "iou_distance",
    "Detection", "GroundTruth", "MatchResult",
    "hungarian", "label_detections", "match_greedy", "match_optimal",
    "DasaParams", "LrpBreakdown", "UndefinedLrp", "dasa", "lrp_components", "lrp_total",
    "MoLrpReport", "SweepResult", "molrp", "olrp_at_tau_sweep", "sweep_class", "threshold_grid",
    "RPCurve", "ap", "map_over_taus", "rp_curve",
    "FrameDetections", "StreamDetection", "StreamResult", "Tubelet",
    "bayes_update", "link_frames", "run_stream", "stream_to_detections",
    "Dataset", "EvalReport", "SchemaError",
    "build_report", "export_curves", "export_report",
    "load_detections", "load_ground_truth", "load_stream", "load_thresholds",
    "save_detections", "save_ground_truth", "save_stream", "save_thresholds",
    "threshold_rows",
]

__version__ = "0.1.0"
