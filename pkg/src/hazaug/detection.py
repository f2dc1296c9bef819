"""Vehicle detection ingestion: boxes, NMS, and front-vehicle selection.

Detections come from an external detector as JSON arrays of
``{"x1","y1","x2","y2","conf","cls"}`` objects. This module deduplicates
them and picks the box of the vehicle directly ahead of the ego camera:
a candidate either straddles the image's vertical center line or has its
center within a configurable tolerance of it, and the largest such box wins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedDetection, UnreadableFile

# YOLO/COCO vehicle class ids: car, bus, truck
VEHICLE_CLASSES = frozenset({2, 5, 7})


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned 2D detection box in pixel coordinates (sub-pixel allowed)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float = 1.0
    class_id: int = 2

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise MalformedDetection(
                f"inverted box: ({self.x_min},{self.y_min},{self.x_max},{self.y_max})"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise MalformedDetection(f"confidence {self.confidence} outside [0,1]")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center_x(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    def to_json(self) -> dict:
        return {
            "x1": self.x_min,
            "y1": self.y_min,
            "x2": self.x_max,
            "y2": self.y_max,
            "conf": self.confidence,
            "cls": self.class_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BoundingBox":
        try:
            return cls(
                x_min=float(obj["x1"]),
                y_min=float(obj["y1"]),
                x_max=float(obj["x2"]),
                y_max=float(obj["y2"]),
                confidence=float(obj["conf"]),
                class_id=int(obj["cls"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDetection(f"bad detection entry {obj!r}: {exc}") from exc


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def nms(boxes: list[BoundingBox], iou_threshold: float) -> list[BoundingBox]:
    """Greedy non-maximum suppression.

    Boxes are visited in confidence-descending order (ties broken by
    (x_min, y_min) ascending); a box is kept iff its IoU with every
    previously kept box is below ``iou_threshold``. The output preserves
    that visiting order.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0,1), got {iou_threshold}")
    ordered = sorted(boxes, key=lambda b: (-b.confidence, b.x_min, b.y_min))
    kept: list[BoundingBox] = []
    for box in ordered:
        if all(iou(box, k) < iou_threshold for k in kept):
            kept.append(box)
    return kept


def select_front_vehicle(
    boxes: list[BoundingBox],
    image_width: float,
    center_tolerance: float,
) -> BoundingBox | None:
    """Pick the box of the vehicle directly in front of the camera.

    A box qualifies if its horizontal span contains the image center line
    C = image_width / 2, or if its horizontal center lies within
    ``center_tolerance`` pixels of C. Among qualifiers the largest area
    wins; area ties fall back to higher confidence, then smaller |center - C|.
    Returns None when nothing qualifies.
    """
    if image_width <= 0:
        raise ValueError(f"image_width must be positive, got {image_width}")
    if center_tolerance < 0:
        raise ValueError(f"center_tolerance must be >= 0, got {center_tolerance}")
    c = image_width / 2.0
    front: BoundingBox | None = None
    for box in boxes:
        spans_center = box.x_min <= c <= box.x_max
        near_center = abs(box.center_x - c) <= center_tolerance
        if not (spans_center or near_center):
            continue
        if front is None:
            front = box
        elif box.area > front.area:
            front = box
        elif box.area == front.area:
            if (box.confidence, -abs(box.center_x - c)) > (
                front.confidence,
                -abs(front.center_x - c),
            ):
                front = box
    return front


def load_detections(
    path: str | Path,
    class_filter: frozenset[int] | set[int] = VEHICLE_CLASSES,
    conf_floor: float = 0.0,
    image_size: tuple[int, int] | None = None,
) -> list[BoundingBox]:
    """Read a detection JSON file and keep vehicle boxes above ``conf_floor``.

    When ``image_size`` = (width, height) is given, coordinates are clamped
    to the image bounds; boxes that collapse to zero extent after clamping
    (entirely outside the frame) are dropped.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableFile(f"cannot read detections {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedDetection(f"{path}: expected a JSON array of detections")

    boxes = []
    for obj in raw:
        box = BoundingBox.from_json(obj)
        if box.class_id not in class_filter or box.confidence < conf_floor:
            continue
        if image_size is not None:
            w, h = image_size
            x0 = min(max(box.x_min, 0.0), float(w))
            x1 = min(max(box.x_max, 0.0), float(w))
            y0 = min(max(box.y_min, 0.0), float(h))
            y1 = min(max(box.y_max, 0.0), float(h))
            if x0 >= x1 or y0 >= y1:
                continue
            box = BoundingBox(x0, y0, x1, y1, box.confidence, box.class_id)
        boxes.append(box)
    return boxes
