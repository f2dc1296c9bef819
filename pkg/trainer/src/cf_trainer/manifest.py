"""Reader for the augmentation pipeline's JSON-Lines manifest format.

The file contract: line 1 is a header ``{"intrinsics": ..., "meta": ...}``,
every further line is one frame record. Image paths are stored relative to
the manifest file and resolved here. Feature-space records (SMOGN output)
carry a ``features`` vector instead of an image.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

VARIANT_ORIGINS = {
    "original": {"original"},
    "ours": {"original", "augmented"},
    "smogn": {"original", "synthetic_smogn"},
    "importance": {"resampled"},
}


@dataclass(frozen=True)
class Record:
    frame_id: str
    image_path: str | None
    speed: float
    accel: float
    origin: str
    parent_id: str | None
    features: tuple[float, ...] | None
    has_front_box: bool

    @property
    def root_id(self) -> str:
        return self.parent_id if self.parent_id else self.frame_id


def read_manifest(path: str | Path) -> tuple[list[Record], dict]:
    path = Path(path)
    base = path.parent.resolve()
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    records = []
    for line in lines[1:]:
        if not line.strip():
            continue
        obj = json.loads(line)
        image = obj.get("image_path")
        if image is not None and not Path(image).is_absolute():
            image = str((base / image).resolve())
        features = obj.get("features")
        records.append(
            Record(
                frame_id=obj["frame_id"],
                image_path=image,
                speed=float(obj["kinematics"]["speed"]),
                accel=float(obj["kinematics"]["accel"]),
                origin=obj["origin"],
                parent_id=obj.get("parent_id"),
                features=tuple(features) if features is not None else None,
                has_front_box=obj.get("front_box") is not None,
            )
        )
    return records, header


def read_split(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def side_of(root_id: str, test_fraction: float = 0.2) -> str:
    """Shared train/test protocol: sha256 hash bucket of the root frame id.

    Matches the pipeline's evaluation split so parents and their derived
    records always land on the same side.
    """
    digest = hashlib.sha256(root_id.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:4], "big") / 2**32
    return "test" if bucket < test_fraction else "train"


def training_records(records: list[Record], variant: str,
                     test_fraction: float = 0.2) -> list[Record]:
    """Train-side records whose origin belongs to ``variant``."""
    from . import EmptyVariant

    if variant not in VARIANT_ORIGINS:
        raise ValueError(f"unknown variant {variant!r}")
    origins = VARIANT_ORIGINS[variant]
    chosen = [
        r for r in records
        if r.origin in origins and side_of(r.root_id, test_fraction) == "train"
    ]
    if variant != "original" and not any(r.origin != "original" for r in chosen):
        raise EmptyVariant(
            f"manifest has no train-side {variant!r} records; "
            "run the matching pipeline stage first"
        )
    if not chosen:
        raise EmptyVariant(f"no training records for variant {variant!r}")
    return chosen


def held_out_originals(records: list[Record], test_fraction: float = 0.2) -> list[Record]:
    """Held-out evaluation set: test-side original frames only."""
    return [
        r for r in records
        if r.origin == "original" and side_of(r.root_id, test_fraction) == "test"
    ]
