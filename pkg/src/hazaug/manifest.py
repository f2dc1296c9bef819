"""Dataset manifest: typed per-frame records with provenance, JSON Lines on disk.

A manifest is the pipeline's only dataset index. The first line of the file
carries intrinsics and free-form metadata; every following line is one frame
record. Records reference image/depth/detection files by path (stored
relative to the manifest file where possible) and carry the kinematics the
downstream car-following model trains on.

Provenance rules: ``original`` records have no parent; every other origin
must point at an existing original record via ``parent_id``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .detection import BoundingBox
from .errors import MalformedRecord, UnreadableFile
from .geometry import CameraIntrinsics


class Origin(str, Enum):
    ORIGINAL = "original"
    AUGMENTED = "augmented"
    SYNTHETIC_SMOGN = "synthetic_smogn"
    RESAMPLED = "resampled"


@dataclass(frozen=True)
class Kinematics:
    """Forward velocity (m/s) and forward acceleration (m/s^2) of the ego vehicle."""

    speed: float
    accel: float

    def __post_init__(self):
        if not (math.isfinite(self.speed) and math.isfinite(self.accel)):
            raise MalformedRecord(f"non-finite kinematics: {self.speed}, {self.accel}")
        if self.speed < 0:
            raise MalformedRecord(f"negative forward velocity {self.speed}")

    def to_json(self) -> dict:
        return {"speed": self.speed, "accel": self.accel}

    @classmethod
    def from_json(cls, obj: dict) -> "Kinematics":
        return cls(speed=float(obj["speed"]), accel=float(obj["accel"]))


@dataclass(frozen=True)
class FrameRecord:
    """One dataset frame with provenance.

    ``features`` is only populated for feature-space synthetic records
    (SMOGN output), which carry no image; real frames leave it None.
    """

    frame_id: str
    image_path: str | None
    depth_path: str | None
    detections_path: str | None
    kinematics: Kinematics
    front_box: BoundingBox | None = None
    origin: Origin = Origin.ORIGINAL
    parent_id: str | None = None
    features: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.origin is Origin.ORIGINAL and self.parent_id is not None:
            raise MalformedRecord(f"{self.frame_id}: original record with parent_id")
        if self.origin is not Origin.ORIGINAL and self.parent_id is None:
            raise MalformedRecord(f"{self.frame_id}: {self.origin.value} record without parent_id")

    @property
    def augmentation_eligible(self) -> bool:
        """Frames need depth, detections, and a selected front box to augment."""
        return (
            self.depth_path is not None
            and self.detections_path is not None
            and self.front_box is not None
        )

    def to_json(self) -> dict:
        obj = {
            "frame_id": self.frame_id,
            "image_path": self.image_path,
            "depth_path": self.depth_path,
            "detections_path": self.detections_path,
            "kinematics": self.kinematics.to_json(),
            "front_box": self.front_box.to_json() if self.front_box else None,
            "origin": self.origin.value,
            "parent_id": self.parent_id,
        }
        if self.features is not None:
            obj["features"] = list(self.features)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "FrameRecord":
        features = obj.get("features")
        return cls(
            frame_id=obj["frame_id"],
            image_path=obj["image_path"],
            depth_path=obj["depth_path"],
            detections_path=obj["detections_path"],
            kinematics=Kinematics.from_json(obj["kinematics"]),
            front_box=BoundingBox.from_json(obj["front_box"]) if obj.get("front_box") else None,
            origin=Origin(obj["origin"]),
            parent_id=obj.get("parent_id"),
            features=tuple(features) if features is not None else None,
        )


@dataclass
class DatasetManifest:
    """Ordered frame records plus the camera and provenance metadata."""

    records: list[FrameRecord]
    intrinsics: CameraIntrinsics
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen: set[str] = set()
        for rec in self.records:
            if rec.frame_id in seen:
                raise MalformedRecord(f"duplicate frame_id {rec.frame_id}")
            seen.add(rec.frame_id)
        originals = {r.frame_id for r in self.records if r.origin is Origin.ORIGINAL}
        for rec in self.records:
            if rec.parent_id is not None and rec.parent_id not in originals:
                raise MalformedRecord(
                    f"{rec.frame_id}: parent_id {rec.parent_id} is not an original record"
                )

    def __len__(self) -> int:
        return len(self.records)

    def originals(self) -> list[FrameRecord]:
        return [r for r in self.records if r.origin is Origin.ORIGINAL]

    def by_id(self, frame_id: str) -> FrameRecord:
        for rec in self.records:
            if rec.frame_id == frame_id:
                return rec
        raise KeyError(frame_id)


def _relativize(path: str | None, base: Path) -> str | None:
    if path is None:
        return None
    return os.path.relpath(path, base)


def _resolve(path: str | None, base: Path) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write manifest as JSON Lines: a header line, then one record per line.

    File paths are stored relative to the manifest's directory so the tree
    can be relocated as a unit. Output is byte-deterministic for identical
    inputs (no timestamps, fixed key order).
    """
    path = Path(path)
    base = path.parent.resolve()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        header = {
            "intrinsics": manifest.intrinsics.to_json(),
            "meta": manifest.meta,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in manifest.records:
            obj = rec.to_json()
            for key in ("image_path", "depth_path", "detections_path"):
                obj[key] = _relativize(obj[key], base)
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    os.replace(tmp, path)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a JSON Lines manifest, resolving record paths to absolute ones."""
    path = Path(path)
    base = path.parent.resolve()
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise UnreadableFile(f"cannot read manifest {path}: {exc}") from exc
    if not lines:
        raise UnreadableFile(f"manifest {path} is empty")
    try:
        header = json.loads(lines[0])
        intrinsics = CameraIntrinsics.from_json(header["intrinsics"])
        meta = header.get("meta", {})
        records = []
        for line in lines[1:]:
            if not line.strip():
                continue
            obj = json.loads(line)
            for key in ("image_path", "depth_path", "detections_path"):
                obj[key] = _resolve(obj.get(key), base)
            records.append(FrameRecord.from_json(obj))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UnreadableFile(f"malformed manifest {path}: {exc}") from exc
    return DatasetManifest(records=records, intrinsics=intrinsics, meta=meta)


def with_records(manifest: DatasetManifest, records: list[FrameRecord],
                 meta_update: dict | None = None) -> DatasetManifest:
    """New manifest with a different record list (and optional meta additions)."""
    meta = dict(manifest.meta)
    if meta_update:
        meta.update(meta_update)
    return DatasetManifest(records=records, intrinsics=manifest.intrinsics, meta=meta)


def child_record(parent: FrameRecord, **overrides) -> FrameRecord:
    """Derive a non-original record from an original parent."""
    return replace(parent, parent_id=parent.frame_id, **overrides)
