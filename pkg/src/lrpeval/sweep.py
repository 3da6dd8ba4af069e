"""Score-threshold sweeps: optimal LRP per class and its mean over classes.

The score domain is discretized into a fixed grid (0.01 steps by default,
101 points) and the LRP error is evaluated at every grid threshold; the
optimal LRP is the minimum over the defined samples. Greedy matching
labels are prefix-stable, so one labeling pass at tau serves the whole
grid and thresholds sharing the same retained detection set produce
bitwise-identical breakdowns.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

from .lrp import LrpBreakdown, UndefinedLrp, breakdown_from_counts
from .matching import ClassId, Detection, GroundTruth, check_tau, count_real, label_detections

DEFAULT_GRID_STEP = 0.01


def threshold_grid(grid_step: float = DEFAULT_GRID_STEP) -> list[float]:
    """Evenly spaced score thresholds covering [0, 1], endpoints included."""
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"grid step must be in (0, 1], got {grid_step}")
    steps = round(1.0 / grid_step)
    if steps < 1 or abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid step {grid_step} does not evenly divide [0, 1]")
    return [i / steps for i in range(steps + 1)]


@dataclass(frozen=True)
class SweepSample:
    """One grid threshold and its breakdown; None where the error is
    undefined (nothing left to evaluate at that threshold)."""

    s: float
    breakdown: LrpBreakdown | None


@dataclass(frozen=True)
class SweepResult:
    """Per-class sweep over the score grid.

    olrp is the minimum total error over defined samples and s_star the
    grid point attaining it; ties resolve to the largest s so that the
    fewest detections are retained at equal error. A class with neither
    ground truths nor detections has nothing to evaluate and is marked
    evaluable=False with olrp and s_star unset.
    """

    class_id: ClassId
    tau: float
    samples: tuple[SweepSample, ...]
    evaluable: bool
    s_star: float | None
    olrp: float | None
    olrp_iou: float | None
    olrp_fp: float | None
    olrp_fn: float | None


def _class_subset(
    gts: Sequence[GroundTruth], dets: Sequence[Detection], class_id: ClassId
) -> tuple[list[GroundTruth], list[Detection]]:
    return (
        [g for g in gts if g.class_id == class_id],
        [d for d in dets if d.class_id == class_id],
    )


def sweep_class(
    gts: Sequence[GroundTruth],
    dets: Sequence[Detection],
    class_id: ClassId,
    tau: float,
    grid_step: float = DEFAULT_GRID_STEP,
) -> SweepResult:
    """Sweep the score-threshold grid for one class and pick its optimum."""
    check_tau(tau)
    grid = threshold_grid(grid_step)
    class_gts, class_dets = _class_subset(gts, dets, class_id)
    labels = label_detections(class_gts, class_dets, tau)
    n_real = count_real(class_gts)

    # Prefix accumulators over the descending-score label order. The
    # running loc-error sum is stored once per prefix so equal prefixes
    # reuse the identical float.
    scores_desc = [lab.score for lab in labels]
    scores_asc = scores_desc[::-1]
    n = len(labels)
    cum_tp = [0] * (n + 1)
    cum_ign = [0] * (n + 1)
    cum_loc = [0.0] * (n + 1)
    tp_pairs_full = []
    for i, lab in enumerate(labels):
        cum_tp[i + 1] = cum_tp[i] + (lab.kind == "tp")
        cum_ign[i + 1] = cum_ign[i] + (lab.kind == "ignored")
        cum_loc[i + 1] = cum_loc[i] + ((1.0 - lab.iou) if lab.kind == "tp" else 0.0)
        if lab.kind == "tp":
            tp_pairs_full.append((lab.det_index, lab.gt_index, lab.iou))

    samples = []
    for s in grid:
        k = n - bisect_left(scores_asc, s)
        n_tp = cum_tp[k]
        n_fp = k - cum_ign[k] - n_tp
        n_fn = n_real - n_tp
        if n_tp + n_fp + n_fn == 0:
            samples.append(SweepSample(s, None))
            continue
        samples.append(
            SweepSample(s, breakdown_from_counts(cum_loc[k], n_tp, n_fp, n_fn, tau))
        )

    best = None
    for sample in samples:
        if sample.breakdown is None:
            continue
        if best is None or sample.breakdown.total <= best.breakdown.total:
            best = sample
    if best is None:
        return SweepResult(class_id, tau, tuple(samples), False, None, None, None, None, None)
    bd = best.breakdown
    return SweepResult(
        class_id=class_id,
        tau=tau,
        samples=tuple(samples),
        evaluable=True,
        s_star=best.s,
        olrp=bd.total,
        olrp_iou=bd.loc_component,
        olrp_fp=bd.fp_component,
        olrp_fn=bd.fn_component,
    )


@dataclass(frozen=True)
class MoLrpReport:
    """Mean optimal LRP over classes, with component means and the range
    of class-specific optimal thresholds.

    Component means run over the classes where the component is defined;
    classes with nothing to evaluate are excluded and listed.
    """

    tau: float
    per_class: dict[ClassId, SweepResult]
    molrp: float
    molrp_iou: float | None
    molrp_fp: float | None
    molrp_fn: float | None
    s_star_min: float
    s_star_max: float
    not_evaluable: tuple[ClassId, ...]


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def molrp(
    gts: Sequence[GroundTruth],
    dets: Sequence[Detection],
    class_ids: Sequence[ClassId],
    tau: float,
    grid_step: float = DEFAULT_GRID_STEP,
) -> MoLrpReport:
    """Sweep every class and average the per-class optima."""
    per_class = {
        cid: sweep_class(gts, dets, cid, tau, grid_step) for cid in class_ids
    }
    return aggregate_molrp(per_class, tau)


def aggregate_molrp(per_class: dict[ClassId, SweepResult], tau: float) -> MoLrpReport:
    """Combine already-computed per-class sweeps into the mean report."""
    evaluable = [r for r in per_class.values() if r.evaluable]
    if not evaluable:
        raise UndefinedLrp("no class has anything to evaluate")
    return MoLrpReport(
        tau=tau,
        per_class=per_class,
        molrp=_mean([r.olrp for r in evaluable]),
        molrp_iou=_mean([r.olrp_iou for r in evaluable if r.olrp_iou is not None]),
        molrp_fp=_mean([r.olrp_fp for r in evaluable if r.olrp_fp is not None]),
        molrp_fn=_mean([r.olrp_fn for r in evaluable if r.olrp_fn is not None]),
        s_star_min=min(r.s_star for r in evaluable),
        s_star_max=max(r.s_star for r in evaluable),
        not_evaluable=tuple(cid for cid, r in per_class.items() if not r.evaluable),
    )


def olrp_at_tau_sweep(
    gts: Sequence[GroundTruth],
    dets: Sequence[Detection],
    class_id: ClassId,
    taus: Sequence[float],
    grid_step: float = DEFAULT_GRID_STEP,
) -> list[tuple[float, SweepResult]]:
    """Independent score sweep of one class at each requested tau."""
    return [(tau, sweep_class(gts, dets, class_id, tau, grid_step)) for tau in taus]
