"""Frame-to-frame box linking with Bayesian confidence updating.

A detection stream is processed online: each frame's boxes are associated
with the previous frame's boxes by optimal assignment over a blended
box-overlap / class-distribution cost, linked detections have their
confidence updated by a two-hypothesis Bayes rule (prior = running
tubelet score, likelihood = current detection score), and the emitted
stream is filtered by per-class score thresholds. Tubelet state always
evolves on the unfiltered detections, so runs with different thresholds
stay comparable; the thresholds shape only the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .geometry import BoundingBox, iou
from .matching import ClassId, Detection, hungarian

DEFAULT_ALPHA = 0.7
DEFAULT_COST_CUTOFF = 0.7
DOMINANCE_RISE = 0.2
_SCORE_EPS = 1e-6


@dataclass(frozen=True)
class StreamDetection:
    """A detection inside a video frame, carrying its full per-class
    confidence distribution. The scalar score is the largest entry."""

    class_id: ClassId
    box: BoundingBox
    class_scores: tuple[float, ...]

    def __post_init__(self):
        if not self.class_scores:
            raise ValueError("class_scores must not be empty")
        if any(not 0.0 <= v <= 1.0 for v in self.class_scores):
            raise ValueError(f"class_scores entries must be in [0, 1]: {self.class_scores}")
        if abs(sum(self.class_scores) - 1.0) > 1e-9:
            raise ValueError(f"class_scores must sum to 1, got {sum(self.class_scores)}")

    @property
    def score(self) -> float:
        return max(self.class_scores)


@dataclass(frozen=True)
class FrameDetections:
    """All detections of one frame."""

    frame_index: int
    detections: tuple[StreamDetection, ...]


@dataclass
class Tubelet:
    """A chain of linked detections with a running updated confidence.

    A tubelet becomes "dominant" once its updated score has risen by at
    least DOMINANCE_RISE over the minimum of its history; the flag is
    informational output metadata.
    """

    id: int
    class_id: ClassId
    boxes: list[tuple[int, BoundingBox]] = field(default_factory=list)
    score_history: list[float] = field(default_factory=list)
    updated_score: float = 0.0
    dominant: bool = False


def bayes_update(prior: float, likelihood: float) -> float:
    """Two-hypothesis Bayes posterior of "object present".

    Both inputs are clamped slightly inside (0, 1). The update is
    symmetric in its arguments, increasing in each, and leaves the
    likelihood untouched when the prior is uninformative (0.5).
    """
    p = min(max(prior, _SCORE_EPS), 1.0 - _SCORE_EPS)
    q = min(max(likelihood, _SCORE_EPS), 1.0 - _SCORE_EPS)
    joint = p * q
    return joint / (joint + (1.0 - p) * (1.0 - q))


def _l1(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    if len(a) != len(b):
        raise ValueError(f"class score vectors differ in length: {len(a)} vs {len(b)}")
    return sum(abs(x - y) for x, y in zip(a, b))


def link_cost(prev: StreamDetection, curr: StreamDetection, alpha: float) -> float:
    """Blend of box distance and class-distribution distance, in [0, 1]."""
    return alpha * (1.0 - iou(prev.box, curr.box)) + (1.0 - alpha) * 0.5 * _l1(
        prev.class_scores, curr.class_scores
    )


def link_frames(
    prev: FrameDetections,
    curr: FrameDetections,
    alpha: float = DEFAULT_ALPHA,
    cost_cutoff: float = DEFAULT_COST_CUTOFF,
) -> list[tuple[int, int]]:
    """Associate two frames' detections; returns (prev index, curr index)
    pairs. Assigned pairs costing more than cost_cutoff are severed."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not prev.detections or not curr.detections:
        return []
    cost = [
        [link_cost(p, c, alpha) for c in curr.detections] for p in prev.detections
    ]
    return [(i, j) for i, j in hungarian(cost) if cost[i][j] <= cost_cutoff]


def _rescored(det: StreamDetection, new_score: float) -> StreamDetection:
    """Rewrite the class distribution so its peak equals new_score.

    Non-peak mass is scaled proportionally (or spread uniformly when the
    original peak was exactly 1 with other bins present). A one-bin
    distribution cannot represent a score below 1 and is left unchanged.
    """
    scores = det.class_scores
    k = max(range(len(scores)), key=scores.__getitem__)
    rest = 1.0 - scores[k]
    if len(scores) == 1:
        return det
    if rest > 0.0:
        scale = (1.0 - new_score) / rest
        new = tuple(new_score if i == k else v * scale for i, v in enumerate(scores))
    else:
        fill = (1.0 - new_score) / (len(scores) - 1)
        new = tuple(new_score if i == k else fill for i in range(len(scores)))
    return StreamDetection(det.class_id, det.box, new)


@dataclass(frozen=True)
class StreamResult:
    """Filtered, rescored frames plus the tubelet bookkeeping behind them."""

    frames: tuple[FrameDetections, ...]
    tubelets: tuple[Tubelet, ...]


def run_stream(
    frames: Sequence[FrameDetections],
    thresholds: Mapping[ClassId, float],
    alpha: float = DEFAULT_ALPHA,
    cost_cutoff: float = DEFAULT_COST_CUTOFF,
    default_threshold: float = 0.5,
) -> StreamResult:
    """Link, rescore and threshold a detection stream.

    Each frame is associated with the previous raw frame; linked
    detections continue their tubelet with a Bayes-updated score, the
    rest start fresh tubelets at their raw score. The emitted frames keep
    the detections whose updated score reaches their class threshold
    (falling back to default_threshold for unlisted classes).
    """
    for prev_f, curr_f in zip(frames, frames[1:]):
        if curr_f.frame_index <= prev_f.frame_index:
            raise ValueError(
                f"frame indices must be strictly increasing: "
                f"{prev_f.frame_index} then {curr_f.frame_index}"
            )

    tubelets: list[Tubelet] = []
    prev_frame: FrameDetections | None = None
    prev_tubelets: dict[int, Tubelet] = {}
    out_frames = []
    for frame in frames:
        links: dict[int, int] = {}
        if prev_frame is not None:
            links = {c: p for p, c in link_frames(prev_frame, frame, alpha, cost_cutoff)}
        curr_tubelets: dict[int, Tubelet] = {}
        emitted = []
        for di, det in enumerate(frame.detections):
            parent = prev_tubelets.get(links.get(di, -1))
            if parent is not None:
                tub = parent
                new_score = bayes_update(tub.updated_score, det.score)
                tub.class_id = det.class_id
            else:
                tub = Tubelet(id=len(tubelets), class_id=det.class_id)
                tubelets.append(tub)
                new_score = det.score
            tub.boxes.append((frame.frame_index, det.box))
            tub.score_history.append(new_score)
            tub.updated_score = new_score
            if new_score - min(tub.score_history) >= DOMINANCE_RISE:
                tub.dominant = True
            curr_tubelets[di] = tub
            if new_score >= thresholds.get(det.class_id, default_threshold):
                emitted.append(_rescored(det, new_score) if parent is not None else det)
        out_frames.append(FrameDetections(frame.frame_index, tuple(emitted)))
        prev_frame = frame
        prev_tubelets = curr_tubelets
    return StreamResult(tuple(out_frames), tuple(tubelets))


def stream_to_detections(frames: Sequence[FrameDetections]) -> list[Detection]:
    """Flatten stream frames into detections (image id = frame index) so
    the standard evaluation machinery applies."""
    return [
        Detection(frame.frame_index, det.class_id, det.box, det.score)
        for frame in frames
        for det in frame.detections
    ]
