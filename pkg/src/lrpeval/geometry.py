"""Axis-aligned box geometry: areas, IoU, and the 1-IoU box distance."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates, stored in corner form.

    Degenerate (zero-area) boxes are rejected at construction: they are
    annotation errors and failing fast localizes the bug.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"box coordinate {name} must be finite, got {value!r}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(
                "degenerate box: need x_max > x_min and y_max > y_min, got "
                f"({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "BoundingBox":
        """Build a box from (x, y, width, height) as used by COCO files."""
        return cls(x, y, x + w, y + h)

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max - self.x_min, self.y_max - self.y_min)


def area(box: BoundingBox) -> float:
    """Area of a box; strictly positive by the box invariants."""
    return (box.x_max - box.x_min) * (box.y_max - box.y_min)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    0 for disjoint boxes, exactly 1 for identical boxes.
    """
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area(a) + area(b) - inter
    return inter / union


def iou_distance(a: BoundingBox, b: BoundingBox) -> float:
    """1 - IoU(a, b).

    Symmetric, zero exactly for identical boxes, and satisfies the
    triangle inequality, so it is usable as a metric between boxes.
    """
    return 1.0 - iou(a, b)
