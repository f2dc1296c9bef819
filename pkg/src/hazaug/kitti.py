"""KITTI-raw-style corpus ingestion.

Expected layout under the corpus root::

    calib_cam_to_cam.txt
    <seq>/image_02/data/*.png        rectified color frames
    <seq>/oxts/data/*.txt            one GPS/IMU record per frame
    <seq>/depth/data/*.png|*.raw     sidecar depth maps (optional per frame)
    <seq>/detections/data/*.json     sidecar detection exports (optional)

Calibration gives the pinhole intrinsics (fx, fy, cx, cy from the
``P_rect_0N`` projection matrix, image size from ``S_rect_0N``). OXTS records
are whitespace-separated decimals; forward velocity sits at index 8 and
forward acceleration at index 14 of the standard 30-field layout. Depth maps
arrive either as 16-bit PNGs (value 0 = invalid, metric depth = value *
scale, KITTI depth-benchmark convention) or as raw float32 grids behind an
8-byte width/height header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import detection
from .errors import (
    CountMismatch,
    EmptyCorpus,
    MalformedMatrix,
    MissingKey,
    NonNumericField,
    TooFewFields,
    UnreadableFile,
)
from .geometry import CameraIntrinsics, DepthMap
from .manifest import DatasetManifest, FrameRecord, Kinematics, Origin

OXTS_SPEED_INDEX = 8     # vf, forward velocity
OXTS_ACCEL_INDEX = 14    # af, forward acceleration
OXTS_MIN_FIELDS = 17

FLOAT_RAW_MAGIC = b"DPTH"


@dataclass(frozen=True)
class IngestConfig:
    """Knobs for corpus ingestion; defaults follow KITTI conventions."""

    camera_index: int = 2
    depth_scale: float = 1.0 / 256.0       # meters per stored unit
    depth_mode: str = "quantized16"        # or "float_raw"
    vehicle_classes: frozenset[int] = detection.VEHICLE_CLASSES
    conf_floor: float = 0.25
    nms_iou: float = 0.5
    center_tolerance_frac: float = 0.15    # of image width
    speed_index: int = OXTS_SPEED_INDEX
    accel_index: int = OXTS_ACCEL_INDEX

    def __post_init__(self):
        if self.depth_scale <= 0:
            raise ValueError(f"depth_scale must be positive, got {self.depth_scale}")
        if self.depth_mode not in ("quantized16", "float_raw"):
            raise ValueError(f"unknown depth_mode {self.depth_mode!r}")


def parse_calibration(text: str, camera_index: int = 2) -> CameraIntrinsics:
    """Extract pinhole intrinsics for one camera from ``calib_cam_to_cam.txt``.

    Reads the 3x4 rectified projection matrix line ``P_rect_0N`` (fx, cx, fy,
    cy at entries 0, 2, 5, 6) and the rectified size line ``S_rect_0N``.
    """
    values = {}
    for line in text.splitlines():
        if ":" not in line:
            continue
        key, _, rest = line.partition(":")
        values[key.strip()] = rest.split()

    p_key = f"P_rect_{camera_index:02d}"
    s_key = f"S_rect_{camera_index:02d}"
    if p_key not in values:
        raise MissingKey(f"calibration has no {p_key} line")
    if s_key not in values:
        raise MissingKey(f"calibration has no {s_key} line")

    raw = values[p_key]
    if len(raw) != 12:
        raise MalformedMatrix(f"{p_key}: expected 12 entries, got {len(raw)}")
    try:
        p = [float(tok) for tok in raw]
        size = [float(tok) for tok in values[s_key]]
    except ValueError as exc:
        raise MalformedMatrix(f"non-numeric calibration entry: {exc}") from exc
    if len(size) != 2:
        raise MalformedMatrix(f"{s_key}: expected 2 entries, got {len(size)}")

    return CameraIntrinsics(
        fx=p[0], cx=p[2], fy=p[5], cy=p[6],
        width=round(size[0]), height=round(size[1]),
    )


def parse_oxts_record(
    line: str,
    speed_index: int = OXTS_SPEED_INDEX,
    accel_index: int = OXTS_ACCEL_INDEX,
) -> Kinematics:
    """Pull forward velocity and forward acceleration out of one OXTS line."""
    tokens = line.split()
    if len(tokens) < OXTS_MIN_FIELDS:
        raise TooFewFields(
            f"OXTS record has {len(tokens)} fields, need >= {OXTS_MIN_FIELDS}"
        )
    try:
        speed = float(tokens[speed_index])
        accel = float(tokens[accel_index])
    except ValueError as exc:
        raise NonNumericField(f"bad OXTS token: {exc}") from exc
    return Kinematics(speed=speed, accel=accel)


def load_depth_map(path: str | Path, scale: float, mode: str = "quantized16") -> DepthMap:
    """Read a stored depth map and convert to metric meters.

    quantized16: 16-bit grayscale PNG, stored value 0 marks invalid pixels.
    float_raw: little-endian header ``DPTH`` + uint32 width + uint32 height,
    then float32 stored values row-major; non-positive or non-finite stored
    values are invalid. Either way depth = stored_value * scale.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    path = Path(path)
    if mode == "quantized16":
        try:
            with Image.open(path) as img:
                stored = np.asarray(img)
        except (OSError, SyntaxError) as exc:
            raise UnreadableFile(f"cannot read depth PNG {path}: {exc}") from exc
        if stored.ndim != 2:
            raise UnreadableFile(f"{path}: depth PNG must be single-channel")
        valid = stored > 0
        depth = stored.astype(np.float64) * scale
        depth[~valid] = 0.0
        return DepthMap(depth=depth, valid=valid)
    if mode == "float_raw":
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise UnreadableFile(f"cannot read depth file {path}: {exc}") from exc
        header = len(FLOAT_RAW_MAGIC) + 8
        if len(blob) < header or blob[: len(FLOAT_RAW_MAGIC)] != FLOAT_RAW_MAGIC:
            raise UnreadableFile(f"{path}: not a float_raw depth file")
        w, h = struct.unpack("<II", blob[len(FLOAT_RAW_MAGIC):header])
        if len(blob) != header + 4 * w * h:
            raise UnreadableFile(
                f"{path}: expected {header + 4 * w * h} bytes for {w}x{h}, "
                f"got {len(blob)}"
            )
        stored = np.frombuffer(blob, dtype="<f4", offset=header).reshape(h, w)
        valid = np.isfinite(stored) & (stored > 0)
        depth = stored.astype(np.float64) * scale
        depth[~valid] = 0.0
        return DepthMap(depth=depth, valid=valid)
    raise ValueError(f"unknown depth mode {mode!r}")


def save_depth_map(depth: DepthMap, path: str | Path, scale: float,
                   mode: str = "quantized16") -> None:
    """Inverse of :func:`load_depth_map`; invalid pixels store as 0."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stored = depth.depth / scale
    stored[~depth.valid] = 0.0
    if mode == "quantized16":
        q = np.rint(stored).astype(np.uint16)
        q[~depth.valid] = 0
        Image.fromarray(q).save(path)
    elif mode == "float_raw":
        h, w = depth.depth.shape
        with open(path, "wb") as fh:
            fh.write(FLOAT_RAW_MAGIC)
            fh.write(struct.pack("<II", w, h))
            fh.write(stored.astype("<f4").tobytes())
    else:
        raise ValueError(f"unknown depth mode {mode!r}")


def _sequence_dirs(root: Path) -> list[Path]:
    return sorted(
        d for d in root.iterdir()
        if d.is_dir() and (d / "image_02" / "data").is_dir()
    )


def _sidecar(seq: Path, tree: str, stem: str, suffixes: tuple[str, ...]) -> str | None:
    base = seq / tree / "data"
    for suffix in suffixes:
        candidate = base / (stem + suffix)
        if candidate.is_file():
            return str(candidate)
    return None


def build_manifest(root: str | Path, config: IngestConfig = IngestConfig()) -> DatasetManifest:
    """Walk a KITTI-raw-style tree into a typed manifest of original frames.

    Every image must have a matching OXTS line (CountMismatch otherwise);
    depth and detection sidecars may be missing per frame, in which case the
    record is kept but ineligible for augmentation. When detections exist the
    front vehicle is selected here (class/confidence filter, NMS, center-line
    rule) so downstream stages can consume ``front_box`` directly.

    Output is deterministic: records sorted by frame_id, no timestamps.
    """
    root = Path(root)
    calib_path = root / "calib_cam_to_cam.txt"
    sequences = _sequence_dirs(root) if root.is_dir() else []
    if not sequences or not calib_path.is_file():
        raise EmptyCorpus(f"no ingestible sequences under {root}")
    intrinsics = parse_calibration(calib_path.read_text(), config.camera_index)
    tolerance = config.center_tolerance_frac * intrinsics.width

    records: list[FrameRecord] = []
    for seq in sequences:
        images = sorted((seq / "image_02" / "data").glob("*.png"))
        oxts_files = sorted((seq / "oxts" / "data").glob("*.txt"))
        if len(images) != len(oxts_files):
            raise CountMismatch(
                f"{seq.name}: {len(images)} images vs {len(oxts_files)} OXTS records"
            )
        for image, oxts in zip(images, oxts_files):
            stem = image.stem
            kin = parse_oxts_record(
                oxts.read_text(), config.speed_index, config.accel_index
            )
            depth_path = _sidecar(seq, "depth", stem, (".png", ".raw"))
            det_path = _sidecar(seq, "detections", stem, (".json",))
            front = None
            if det_path is not None:
                boxes = detection.load_detections(
                    det_path,
                    class_filter=config.vehicle_classes,
                    conf_floor=config.conf_floor,
                    image_size=(intrinsics.width, intrinsics.height),
                )
                boxes = detection.nms(boxes, config.nms_iou)
                front = detection.select_front_vehicle(
                    boxes, intrinsics.width, tolerance
                )
            records.append(
                FrameRecord(
                    frame_id=f"{seq.name}/{stem}",
                    image_path=str(image),
                    depth_path=depth_path,
                    detections_path=det_path,
                    kinematics=kin,
                    front_box=front,
                    origin=Origin.ORIGINAL,
                )
            )

    records.sort(key=lambda r: r.frame_id)
    meta = {
        "source_root": str(root),
        "depth_scale": config.depth_scale,
        "depth_mode": config.depth_mode,
        "n_sequences": len(sequences),
    }
    return DatasetManifest(records=records, intrinsics=intrinsics, meta=meta)


def load_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit RGB PNG as (H, W, 3) uint8."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (OSError, SyntaxError) as exc:
        raise UnreadableFile(f"cannot read image {path}: {exc}") from exc


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Write (H, W, 3) uint8 as PNG, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)
