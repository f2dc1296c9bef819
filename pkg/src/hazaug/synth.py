"""Synthetic KITTI-style corpus generator for pipeline validation.

Scenes are composed analytically (sky, ground plane, lateral distractor
plates, and a lead-vehicle plate on the camera's center line), so every
pixel has an exact depth and the lead vehicle's true distance is known.
Kinematics follow a breaking-distance rule

    accel = -coeff * speed / Z_front + noise

which makes close-vehicle frames the strong-deceleration (safety-critical)
ones, mirroring naturalistic car-following data. The generator writes a full
corpus tree (images, 16-bit depth PNGs, detection JSONs, OXTS records,
calibration) that the regular ingestion path consumes unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CameraIntrinsics
from .kitti import save_image

# KITTI cam-02 reference geometry (1242x375); scaled to the requested size
KITTI_FX = 721.5377
KITTI_CX = 609.5593
KITTI_CY = 172.854
KITTI_W = 1242
KITTI_H = 375

CAMERA_HEIGHT = 1.65   # meters above the ground plane
FAR_DEPTH = 120.0      # sky / clamp distance


@dataclass(frozen=True)
class CorpusSpec:
    """Shape and statistics of a generated corpus."""

    n_frames: int = 300
    width: int = 480
    seed: int = 0
    front_vehicle_prob: float = 0.9
    accel_coeff: float = 1.0
    accel_noise: float = 0.05
    min_depth: float = 8.0
    max_depth: float = 40.0
    depth_exponent: float = 0.6  # Z = min + range * u**e; e < 1 makes close frames rare
    vehicle_width: float = 2.2
    vehicle_height: float = 1.8
    depth_scale: float = 1.0 / 256.0

    @property
    def height(self) -> int:
        return round(KITTI_H * self.width / KITTI_W)

    def intrinsics(self) -> CameraIntrinsics:
        s = self.width / KITTI_W
        return CameraIntrinsics(
            fx=KITTI_FX * s, fy=KITTI_FX * s,
            cx=KITTI_CX * s, cy=KITTI_CY * s,
            width=self.width, height=self.height,
        )


@dataclass(frozen=True)
class FrameTruth:
    """Ground truth for one generated frame."""

    frame_id: str
    front_depth: float | None
    speed: float
    accel: float


def _ground_sky(k: CameraIntrinsics, rng: np.random.Generator):
    """Base scene: sky above the horizon, textured ground plane below."""
    h, w = k.height, k.width
    depth = np.full((h, w), FAR_DEPTH, dtype=np.float64)
    image = np.zeros((h, w, 3), dtype=np.uint8)

    vv = np.arange(h, dtype=np.float64)[:, None]
    uu = np.arange(w, dtype=np.float64)[None, :]

    # sky: gentle vertical gradient
    sky_base = rng.integers(140, 180)
    image[..., 0] = sky_base
    image[..., 1] = sky_base + 10
    image[..., 2] = np.clip(sky_base + 30 - vv * 0.1, 0, 255).astype(np.uint8)

    below = vv > k.cy + 0.5
    ground_z = np.where(below, CAMERA_HEIGHT * k.fy / np.maximum(vv - k.cy, 1e-6), FAR_DEPTH)
    ground_z = np.clip(ground_z, 0.0, FAR_DEPTH)
    ground_mask = below & (ground_z < FAR_DEPTH)
    depth[np.broadcast_to(ground_mask, depth.shape)] = np.broadcast_to(
        ground_z, depth.shape
    )[np.broadcast_to(ground_mask, depth.shape)]

    # asphalt with periodic lane stripes by world distance
    zgrid = np.broadcast_to(ground_z, (h, w))
    xgrid = (uu - k.cx) / k.fx * zgrid
    asphalt = 70 + 12 * np.sin(zgrid * 0.8)
    stripe = (np.mod(zgrid, 6.0) < 2.0) & (np.abs(xgrid) < 0.15)
    shade = np.where(stripe, 200, asphalt)
    gm = np.broadcast_to(ground_mask, (h, w))
    for c in range(3):
        chan = image[..., c].astype(np.float64)
        chan[gm] = shade[gm]
        image[..., c] = np.clip(chan, 0, 255).astype(np.uint8)
    return image, depth


def _paint_plate(image, depth, k: CameraIntrinsics, x_span, y_span, z, color,
                 texture: bool = False):
    """Z-tested fill of a fronto-parallel plate; returns its pixel bbox or None."""
    u0 = k.fx * x_span[0] / z + k.cx
    u1 = k.fx * x_span[1] / z + k.cx
    v0 = k.fy * y_span[0] / z + k.cy
    v1 = k.fy * y_span[1] / z + k.cy
    iu0, iu1 = max(0, int(np.ceil(u0))), min(k.width - 1, int(np.floor(u1)))
    iv0, iv1 = max(0, int(np.ceil(v0))), min(k.height - 1, int(np.floor(v1)))
    if iu0 > iu1 or iv0 > iv1:
        return None
    window = depth[iv0:iv1 + 1, iu0:iu1 + 1]
    mask = window > z
    if texture:
        hh = iv1 - iv0 + 1
        shades = np.ones((hh, 1)) * 1.0
        shades[: max(1, hh // 3)] = 0.55          # window band
        shades[hh - max(1, hh // 6):] = 0.35      # bumper shadow
        block = np.clip(np.asarray(color)[None, None, :] * shades[:, :, None], 0, 255)
        block = np.broadcast_to(block, (hh, iu1 - iu0 + 1, 3))
    else:
        block = np.broadcast_to(np.asarray(color), (iv1 - iv0 + 1, iu1 - iu0 + 1, 3))
    region = image[iv0:iv1 + 1, iu0:iu1 + 1]
    region[mask] = block[mask].astype(np.uint8)
    window[mask] = z
    return (float(max(0.0, u0)), float(max(0.0, v0)),
            float(min(k.width, u1)), float(min(k.height, v1)))


def generate_frame(spec: CorpusSpec, k: CameraIntrinsics, rng: np.random.Generator):
    """Compose one scene; returns (image, depth, detections, truth fields)."""
    image, depth = _ground_sky(k, rng)
    detections = []

    plates = []
    n_distract = int(rng.integers(2, 6))
    for _ in range(n_distract):
        # placement keeps distractors unambiguously off the center line:
        # span stays >= 1 m from x=0 and the projected center stays outside
        # the 0.15 * width selection tolerance for any principal-point offset
        xc = float(rng.uniform(4.0, 10.0)) * (1 if rng.uniform() < 0.5 else -1)
        z = float(rng.uniform(8.0, min(3.3 * abs(xc), 45.0)))
        width = float(rng.uniform(1.5, min(4.0, abs(xc) - 1.0)))
        height = float(rng.uniform(1.5, 4.0))
        color = rng.integers(60, 160, size=3)
        plates.append(("distractor", xc, z, width, height, color))

    has_vehicle = rng.uniform() < spec.front_vehicle_prob
    front_depth = None
    if has_vehicle:
        front_depth = spec.min_depth + (spec.max_depth - spec.min_depth) * float(
            rng.uniform()
        ) ** spec.depth_exponent
        xc = float(rng.uniform(-0.3, 0.3))
        shade = int(rng.integers(190, 250))
        color = np.array([shade, shade - int(rng.integers(0, 25)), shade - int(rng.integers(0, 25))])
        plates.append(("vehicle", xc, front_depth, spec.vehicle_width,
                       spec.vehicle_height, color))

    # painter's order far to near; the z-test resolves the rest
    for kind, xc, z, width, height, color in sorted(plates, key=lambda p: -p[2]):
        x_span = (xc - width / 2, xc + width / 2)
        y_span = (CAMERA_HEIGHT - height, CAMERA_HEIGHT)
        box = _paint_plate(image, depth, k, x_span, y_span, z, color,
                           texture=(kind == "vehicle"))
        if box is None:
            continue
        conf = float(rng.uniform(0.85, 0.97)) if kind == "vehicle" else float(
            rng.uniform(0.45, 0.85)
        )
        detections.append(
            {"x1": box[0], "y1": box[1], "x2": box[2], "y2": box[3],
             "conf": round(conf, 4), "cls": 2}
        )
    if rng.uniform() < 0.2:
        # an irrelevant pedestrian-class detection near the edge
        px = float(rng.uniform(0, k.width * 0.2))
        detections.append(
            {"x1": px, "y1": k.height * 0.4, "x2": px + 12.0,
             "y2": k.height * 0.8, "conf": 0.7, "cls": 0}
        )

    speed = float(rng.uniform(8.0, 20.0))
    if front_depth is not None:
        accel = -spec.accel_coeff * speed / front_depth + float(
            rng.normal(0.0, spec.accel_noise)
        )
    else:
        accel = float(rng.normal(-0.1, 0.2))
    return image, depth, detections, front_depth, speed, accel


def _oxts_line(speed: float, accel: float, rng: np.random.Generator) -> str:
    """A 30-field OXTS record with vf and af in their standard slots."""
    fields = [0.0] * 30
    fields[0] = 49.0 + float(rng.uniform(0, 0.01))   # lat
    fields[1] = 8.4 + float(rng.uniform(0, 0.01))    # lon
    fields[2] = 112.0                                 # alt
    fields[8] = speed
    fields[14] = accel
    fields[23] = 0.05
    return " ".join(f"{x:.9f}" for x in fields)


def _calibration_text(k: CameraIntrinsics) -> str:
    p = [k.fx, 0.0, k.cx, 0.0, 0.0, k.fy, k.cy, 0.0, 0.0, 0.0, 1.0, 0.0]
    return (
        f"S_rect_02: {k.width:.6e} {k.height:.6e}\n"
        "P_rect_02: " + " ".join(f"{x:.9e}" for x in p) + "\n"
    )


def generate_corpus(root: str | Path, spec: CorpusSpec) -> list[FrameTruth]:
    """Write a full synthetic corpus tree under ``root``; returns ground truth."""
    from .kitti import save_depth_map  # local import keeps module load light
    from .geometry import DepthMap

    root = Path(root)
    k = spec.intrinsics()
    rng = np.random.default_rng(spec.seed)
    seq = root / "drive_0000"
    (seq / "image_02" / "data").mkdir(parents=True, exist_ok=True)
    (seq / "oxts" / "data").mkdir(parents=True, exist_ok=True)
    (seq / "depth" / "data").mkdir(parents=True, exist_ok=True)
    (seq / "detections" / "data").mkdir(parents=True, exist_ok=True)
    (root / "calib_cam_to_cam.txt").write_text(_calibration_text(k))

    truths = []
    for i in range(spec.n_frames):
        stem = f"{i:010d}"
        image, depth, detections, front_depth, speed, accel = generate_frame(
            spec, k, rng
        )
        save_image(image, seq / "image_02" / "data" / f"{stem}.png")
        save_depth_map(
            DepthMap(depth=depth, valid=depth > 0),
            seq / "depth" / "data" / f"{stem}.png",
            spec.depth_scale,
        )
        (seq / "detections" / "data" / f"{stem}.json").write_text(
            json.dumps(detections)
        )
        (seq / "oxts" / "data" / f"{stem}.txt").write_text(
            _oxts_line(speed, accel, rng) + "\n"
        )
        truths.append(
            FrameTruth(
                frame_id=f"drive_0000/{stem}",
                front_depth=front_depth,
                speed=speed,
                accel=accel,
            )
        )

    (root / "ground_truth.json").write_text(
        json.dumps(
            [
                {"frame_id": t.frame_id, "front_depth": t.front_depth,
                 "speed": t.speed, "accel": t.accel}
                for t in truths
            ],
            indent=1,
        )
    )
    return truths
