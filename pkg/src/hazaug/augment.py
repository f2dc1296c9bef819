"""Per-frame hazard augmentation: move the lead vehicle closer, rescale the label.

For each selected frame the pipeline is: unproject the depth map to a colored
cloud, segment the front vehicle's points through its detection box plus a
depth gate, translate them toward the camera by half a body length, and
z-buffer the edited cloud back onto the original image. The frame's forward
acceleration is multiplied by ``accel_scale`` (closer lead vehicle at the
same speed demands harder braking); speed is untouched.

Candidates are frames where the lead vehicle is already close (median depth
under ``candidate_max_distance``), capped at a fraction of the corpus so the
augmented set stays a minority of the data.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import detection, geometry, kitti
from .errors import DegenerateShift, DimensionMismatch, EmptySegment
from .geometry import MIN_Z
from .manifest import DatasetManifest, FrameRecord, Kinematics, Origin, with_records

log = logging.getLogger(__name__)

SKIP_NO_FRONT_VEHICLE = "NoFrontVehicle"
SKIP_NO_DEPTH = "NoDepth"


@dataclass(frozen=True)
class AugmentationConfig:
    """Parameters of the hazard-simulation edit."""

    accel_scale: float = 1.5
    body_length: float = 4.5           # meters, typical sedan
    shift_fraction: float = 0.5        # of body_length, toward the camera
    candidate_max_distance: float = 15.0
    candidate_fraction_cap: float = 0.10
    depth_band: float = 2.0            # vehicle segmentation gate, meters
    center_tolerance: float | None = None  # px; None = 0.15 * image width
    rng_seed: int = 0

    def __post_init__(self):
        if self.accel_scale <= 1:
            raise ValueError(f"accel_scale must exceed 1, got {self.accel_scale}")
        if not 0 < self.shift_fraction < 1:
            raise ValueError(f"shift_fraction must be in (0,1), got {self.shift_fraction}")
        if self.body_length <= 0:
            raise ValueError(f"body_length must be positive, got {self.body_length}")
        if not 0 < self.candidate_fraction_cap <= 1:
            raise ValueError(
                f"candidate_fraction_cap must be in (0,1], got {self.candidate_fraction_cap}"
            )
        if self.depth_band <= 0:
            raise ValueError(f"depth_band must be positive, got {self.depth_band}")

    def to_json(self) -> dict:
        return {
            "accel_scale": self.accel_scale,
            "body_length": self.body_length,
            "shift_fraction": self.shift_fraction,
            "candidate_max_distance": self.candidate_max_distance,
            "candidate_fraction_cap": self.candidate_fraction_cap,
            "depth_band": self.depth_band,
            "center_tolerance": self.center_tolerance,
            "rng_seed": self.rng_seed,
        }


def compute_shift(config: AugmentationConfig) -> float:
    """Distance the lead vehicle moves toward the camera, in meters."""
    return config.shift_fraction * config.body_length


def adjust_acceleration(accel: float, config: AugmentationConfig) -> float:
    """Rescale the forward-acceleration label for the closer lead vehicle."""
    if not math.isfinite(accel):
        raise ValueError(f"acceleration must be finite, got {accel}")
    return config.accel_scale * accel


def front_median_depth(depth: geometry.DepthMap, box: detection.BoundingBox) -> float | None:
    """Median valid depth over the pixels inside ``box``; None if there are none.

    Pixel membership matches :func:`geometry.box_point_indices`: integer
    coordinates within the closed box interval.
    """
    u0 = max(0, math.ceil(box.x_min))
    u1 = min(depth.width - 1, math.floor(box.x_max))
    v0 = max(0, math.ceil(box.y_min))
    v1 = min(depth.height - 1, math.floor(box.y_max))
    if u0 > u1 or v0 > v1:
        return None
    window = depth.depth[v0:v1 + 1, u0:u1 + 1]
    mask = depth.valid[v0:v1 + 1, u0:u1 + 1]
    if not mask.any():
        return None
    return float(np.median(window[mask]))


def select_candidates(
    manifest: DatasetManifest, config: AugmentationConfig
) -> list[str]:
    """Frame ids of originals whose lead vehicle is already close.

    Eligible frames (depth + detections + front box) are ranked by ascending
    median front-vehicle depth, filtered to < ``candidate_max_distance`` and
    truncated to ceil(cap * |originals|).
    """
    originals = manifest.originals()
    scale = float(manifest.meta.get("depth_scale", kitti.IngestConfig().depth_scale))
    mode = manifest.meta.get("depth_mode", "quantized16")

    scored: list[tuple[float, str]] = []
    for rec in originals:
        if not rec.augmentation_eligible:
            continue
        depth = kitti.load_depth_map(rec.depth_path, scale, mode)
        median = front_median_depth(depth, rec.front_box)
        if median is None or median >= config.candidate_max_distance:
            continue
        scored.append((median, rec.frame_id))
    scored.sort()
    cap = math.ceil(config.candidate_fraction_cap * len(originals))
    return [frame_id for _, frame_id in scored[:cap]]


def augment_frame(
    record: FrameRecord,
    manifest: DatasetManifest,
    config: AugmentationConfig,
    output_root: str | Path,
) -> FrameRecord:
    """Run the geometric edit on one frame and write the augmented image.

    Returns the new record (origin=augmented, parent_id set, accel rescaled).
    Raises EmptySegment / DegenerateShift / DimensionMismatch on frames the
    edit cannot handle; callers skip those frames rather than aborting.
    """
    if record.front_box is None:
        raise EmptySegment(SKIP_NO_FRONT_VEHICLE)
    if record.depth_path is None or record.image_path is None:
        raise EmptySegment(SKIP_NO_DEPTH)

    k = manifest.intrinsics
    scale = float(manifest.meta.get("depth_scale", kitti.IngestConfig().depth_scale))
    mode = manifest.meta.get("depth_mode", "quantized16")
    image = kitti.load_image(record.image_path)
    depth = kitti.load_depth_map(record.depth_path, scale, mode)
    if image.shape[:2] != (depth.height, depth.width):
        raise DimensionMismatch(
            f"{record.frame_id}: image {image.shape[:2]} vs depth "
            f"{(depth.height, depth.width)}"
        )

    shift = compute_shift(config)
    cloud = geometry.unproject(depth, image, k)
    indices = geometry.segment_vehicle_points(cloud, record.front_box, config.depth_band)
    edited = geometry.translate_points(cloud, indices, (0.0, 0.0, -shift), MIN_Z)
    result = geometry.render(edited, k, fallback=image)

    if record.kinematics.accel > 0:
        log.warning(
            "frame %s has positive acceleration %.3f; scaling it by %.2f anyway",
            record.frame_id, record.kinematics.accel, config.accel_scale,
        )

    out_path = Path(output_root) / "augmented" / f"{record.frame_id}.png"
    kitti.save_image(result.image, out_path)

    u, v, _ = geometry.project(edited.points[indices], k)
    new_box = detection.BoundingBox(
        x_min=float(max(0.0, u.min())),
        y_min=float(max(0.0, v.min())),
        x_max=float(min(k.width, u.max())),
        y_max=float(min(k.height, v.max())),
        confidence=record.front_box.confidence,
        class_id=record.front_box.class_id,
    )
    return replace(
        record,
        frame_id=f"{record.frame_id}_aug",
        image_path=str(out_path),
        depth_path=None,
        detections_path=None,
        kinematics=Kinematics(
            speed=record.kinematics.speed,
            accel=adjust_acceleration(record.kinematics.accel, config),
        ),
        front_box=new_box,
        origin=Origin.AUGMENTED,
        parent_id=record.frame_id,
    )


def ensure_front_boxes(
    manifest: DatasetManifest, config: AugmentationConfig
) -> DatasetManifest:
    """Fill missing front boxes for records that carry detections.

    Manifests built by :func:`hazaug.kitti.build_manifest` already have them;
    this covers manifests assembled by external tooling.
    """
    k = manifest.intrinsics
    tolerance = (
        config.center_tolerance
        if config.center_tolerance is not None
        else 0.15 * k.width
    )
    records = []
    changed = False
    for rec in manifest.records:
        if rec.front_box is None and rec.detections_path is not None:
            boxes = detection.nms(
                detection.load_detections(
                    rec.detections_path, image_size=(k.width, k.height)
                ),
                iou_threshold=0.5,
            )
            front = detection.select_front_vehicle(boxes, k.width, tolerance)
            if front is not None:
                rec = replace(rec, front_box=front)
                changed = True
        records.append(rec)
    return with_records(manifest, records) if changed else manifest


def augment_dataset(
    manifest: DatasetManifest,
    config: AugmentationConfig,
    output_root: str | Path,
    jobs: int = 1,
) -> DatasetManifest:
    """Append one augmented record per successful candidate frame.

    Original records pass through untouched. Per-frame failures are logged,
    recorded in the output manifest's meta, and never abort the batch. The
    result is deterministic for a fixed config and corpus regardless of
    ``jobs``: frames are processed independently and collected in candidate
    order.
    """
    manifest = ensure_front_boxes(manifest, config)
    candidates = select_candidates(manifest, config)
    if not candidates:
        log.warning("no augmentation candidates; manifest returned unchanged")
        return with_records(
            manifest, list(manifest.records),
            meta_update={"augmentation": {"candidates": 0, "succeeded": 0, "skipped": {}}},
        )

    by_id = {rec.frame_id: rec for rec in manifest.records}

    def _one(frame_id: str):
        return augment_frame(by_id[frame_id], manifest, config, output_root)

    augmented: list[FrameRecord] = []
    skipped: dict[str, str] = {}
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = [(fid, pool.submit(_one, fid)) for fid in candidates]
    else:
        outcomes = [(fid, None) for fid in candidates]

    for frame_id, fut in outcomes:
        try:
            record = fut.result() if fut is not None else _one(frame_id)
            augmented.append(record)
            log.info("augmented %s", frame_id)
        except (EmptySegment, DegenerateShift, DimensionMismatch) as exc:
            reason = str(exc)
            if reason not in (SKIP_NO_FRONT_VEHICLE, SKIP_NO_DEPTH):
                reason = type(exc).__name__
            skipped[frame_id] = reason
            log.warning("skipping %s: %s", frame_id, reason)

    report = {
        "candidates": len(candidates),
        "succeeded": len(augmented),
        "skipped": skipped,
        "config": config.to_json(),
    }
    return with_records(
        manifest, list(manifest.records) + augmented, meta_update={"augmentation": report}
    )
