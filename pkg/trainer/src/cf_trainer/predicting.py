"""Checkpoint inference over manifest subsets, emitted as predictions CSV."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import torch

from . import ShapeMismatch
from .dataset import TensorDataset
from .manifest import read_manifest, side_of
from .model import CarFollowingNet


def load_checkpoint(path: str | Path) -> tuple[CarFollowingNet, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    model = CarFollowingNet(feature_dim=blob["feature_dim"])
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob


def predict(checkpoint: str | Path, manifest_path: str | Path,
            out_csv: str | Path, subset: str = "test") -> dict[str, float]:
    """Predict acceleration for the manifest's original frames.

    ``subset`` is "test" (held-out side of the shared hash split) or "all".
    Returns the frame_id -> prediction mapping and writes it as CSV.
    """
    model, blob = load_checkpoint(checkpoint)
    spec = blob["spec"]
    stats = blob["stats"]

    records, _ = read_manifest(manifest_path)
    chosen = [r for r in records if r.origin == "original"]
    if subset == "test":
        chosen = [
            r for r in chosen
            if side_of(r.root_id, spec["test_fraction"]) == "test"
        ]
    elif subset != "all":
        raise ValueError(f"subset must be 'test' or 'all', got {subset!r}")

    data = TensorDataset(chosen, tuple(spec["image_size"]))
    if data.feature_dim is not None and blob["feature_dim"] is None:
        raise ShapeMismatch("checkpoint has no feature branch for feature records")

    out: dict[str, float] = {}
    with torch.no_grad():
        speeds = (data.speeds - stats["speed_mean"]) / stats["speed_std"]
        for start in range(0, data.n_images, 64):
            stop = min(start + 64, data.n_images)
            pred = model(data.images[start:stop], speeds[start:stop])
            for rec, value in zip(data.image_records[start:stop], pred):
                out[rec.frame_id] = (
                    float(value) * stats["target_std"] + stats["target_mean"]
                )
    if not all(math.isfinite(v) for v in out.values()):
        raise ShapeMismatch("model produced non-finite predictions")

    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "prediction"])
        for frame_id in sorted(out):
            writer.writerow([frame_id, f"{out[frame_id]:.9f}"])
    return out
