"""Assignment of detections to ground truths.

Two protocols live here. Greedy score-ordered matching is the evaluation
convention: detections claim ground truths in descending confidence order,
exactly the way recall-precision curves are built. Optimal one-to-one
assignment (Hungarian) minimizes the total 1-IoU distance and backs the
set-distance machinery and its symmetry/optimality property tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BoundingBox, iou, iou_distance

ClassId = Hashable
ImageId = Hashable

# Evaluation paths reject tau this close to 1: the localization weight
# N_TP / (1 - tau) diverges and hardly any detection stays valid.
TAU_MAX = 0.999


def check_tau(tau: float) -> None:
    if not 0.0 <= tau <= TAU_MAX:
        raise ValueError(f"tau must be in [0, {TAU_MAX}], got {tau}")


@dataclass(frozen=True)
class Detection:
    """A scored, class-labeled box on one image."""

    image_id: ImageId
    class_id: ClassId
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruth:
    """An annotated box on one image.

    `ignore` marks crowd-style regions: they never count as false
    negatives and absorb detections that overlap them at IoU >= tau.
    """

    image_id: ImageId
    class_id: ClassId
    box: BoundingBox
    ignore: bool = False


@dataclass(frozen=True)
class MatchResult:
    """Outcome of assigning detections to ground truths.

    tp_pairs holds (detection index, ground-truth index, IoU) triples;
    indices refer to the argument lists of the call that produced the
    result. Detections absorbed by ignore regions appear in neither the
    TP nor the FP count.
    """

    tp_pairs: tuple[tuple[int, int, float], ...]
    n_tp: int
    n_fp: int
    n_fn: int


@dataclass(frozen=True)
class DetectionLabel:
    """Per-detection outcome of greedy matching, in descending score order.

    kind is "tp", "fp" or "ignored"; gt_index/iou are set for TPs only.
    """

    det_index: int
    score: float
    kind: str
    gt_index: int | None = None
    iou: float | None = None


def _single_class(gts: Sequence[GroundTruth], dets: Sequence[Detection]) -> None:
    classes = {g.class_id for g in gts} | {d.class_id for d in dets}
    if len(classes) > 1:
        raise ValueError(f"matching is per class; got mixed classes {sorted(map(str, classes))}")


def label_detections(
    gts: Sequence[GroundTruth], dets: Sequence[Detection], tau: float
) -> list[DetectionLabel]:
    """Greedy score-ordered matching outcome for every detection.

    Detections are processed in descending score order (ties broken by
    ascending input index) and matched strictly within their own image.
    Each claims the unmatched non-ignored ground truth with the highest
    IoU, provided that IoU reaches tau (equal-IoU candidates resolve to
    the lowest ground-truth index). A detection that fails but overlaps
    an ignore region at IoU >= tau is labeled "ignored" and dropped from
    all counting; the rest are false positives.

    Labels are prefix-stable: truncating the detection list at any score
    threshold leaves the surviving labels unchanged, which is what makes
    a single labeling pass serve every threshold of a sweep.
    """
    check_tau(tau)
    _single_class(gts, dets)

    real_by_image: dict[ImageId, list[int]] = {}
    ignore_by_image: dict[ImageId, list[int]] = {}
    for gi, gt in enumerate(gts):
        target = ignore_by_image if gt.ignore else real_by_image
        target.setdefault(gt.image_id, []).append(gi)

    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    claimed = [False] * len(gts)
    labels: list[DetectionLabel] = []
    for di in order:
        det = dets[di]
        best_iou = -1.0
        best_gt = -1
        for gi in real_by_image.get(det.image_id, ()):
            if claimed[gi]:
                continue
            overlap = iou(det.box, gts[gi].box)
            if overlap > best_iou:
                best_iou = overlap
                best_gt = gi
        if best_gt >= 0 and best_iou >= tau:
            claimed[best_gt] = True
            labels.append(DetectionLabel(di, det.score, "tp", best_gt, best_iou))
            continue
        absorbed = any(
            iou(det.box, gts[gi].box) >= tau for gi in ignore_by_image.get(det.image_id, ())
        )
        labels.append(DetectionLabel(di, det.score, "ignored" if absorbed else "fp"))
    return labels


def count_real(gts: Sequence[GroundTruth]) -> int:
    """Number of non-ignored ground truths."""
    return sum(1 for g in gts if not g.ignore)


def result_from_labels(labels: Sequence[DetectionLabel], n_real_gts: int) -> MatchResult:
    """Fold per-detection labels into a MatchResult."""
    tp_pairs = tuple(
        (lab.det_index, lab.gt_index, lab.iou) for lab in labels if lab.kind == "tp"
    )
    n_tp = len(tp_pairs)
    n_fp = sum(1 for lab in labels if lab.kind == "fp")
    return MatchResult(tp_pairs, n_tp, n_fp, n_real_gts - n_tp)


def match_greedy(
    gts: Sequence[GroundTruth], dets: Sequence[Detection], s: float, tau: float
) -> MatchResult:
    """Greedy matching of the detections with score >= s against gts.

    The score comparison is closed so the s = 0 endpoint of a sweep
    retains every detection. Indices in the result refer to the full
    `dets` argument, including detections filtered out by s.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"score threshold must be in [0, 1], got {s}")
    kept_indices = [i for i, d in enumerate(dets) if d.score >= s]
    kept = [dets[i] for i in kept_indices]
    labels = label_detections(gts, kept, tau)
    remapped = [
        DetectionLabel(kept_indices[lab.det_index], lab.score, lab.kind, lab.gt_index, lab.iou)
        for lab in labels
    ]
    return result_from_labels(remapped, count_real(gts))


def hungarian(cost) -> list[tuple[int, int]]:
    """Optimal row-to-column assignment minimizing total cost.

    Accepts any finite rectangular matrix and returns min(rows, cols)
    pairs sorted by row index. Solved in O(n^3) via scipy's augmenting
    path implementation.
    """
    arr = np.asarray(cost, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"cost must be a 2-d matrix, got shape {arr.shape}")
    if arr.size == 0:
        return []
    if not np.isfinite(arr).all():
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(arr)
    return sorted(zip(rows.tolist(), cols.tolist()))


def match_optimal(
    xs: Sequence[BoundingBox], ys: Sequence[BoundingBox], tau: float
) -> MatchResult:
    """One-to-one assignment of ys to xs minimizing total 1-IoU distance.

    Assigned pairs with distance above 1 - tau are severed: the x side
    becomes a false negative and the y side a false positive, matching
    the cutoff convention of truncated set-to-set distances. In the
    result, tp_pairs carry (y index, x index, IoU).

    The assignment is solved in a canonical orientation of the cost
    matrix so that swapping the arguments always yields the mirror image
    of the same pairing, even when several assignments tie on total cost.
    """
    check_tau(tau)
    n, m = len(xs), len(ys)
    if n == 0 or m == 0:
        return MatchResult((), 0, m, n)

    cost = np.array([[iou_distance(x, y) for y in ys] for x in xs])
    transposed = cost.T
    key = (n, m, tuple(cost.ravel().tolist()))
    key_t = (m, n, tuple(transposed.ravel().tolist()))
    if key <= key_t:
        canon_pairs = hungarian(cost)
        roles = lambda r, c: (r, c)  # noqa: E731 - canonical row is the x side
    else:
        canon_pairs = hungarian(np.ascontiguousarray(transposed))
        roles = lambda r, c: (c, r)  # noqa: E731 - canonical row is the y side

    # Pairs stay in canonical row order so both argument orders accumulate
    # localization errors in the identical float sequence.
    cutoff = 1.0 - tau
    tp_pairs = []
    for r, c in canon_pairs:
        xi, yj = roles(r, c)
        if cost[xi, yj] <= cutoff:
            tp_pairs.append((yj, xi, 1.0 - cost[xi, yj]))
    n_tp = len(tp_pairs)
    return MatchResult(tuple(tp_pairs), n_tp, m - n_tp, n - n_tp)
