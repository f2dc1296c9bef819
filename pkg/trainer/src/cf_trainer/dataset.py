"""In-memory tensor dataset over manifest records.

Images are loaded and resized once up front (corpora at this scale fit in
RAM comfortably); feature-space records keep their stored vectors. Speed and
target normalization statistics are computed on the training set and travel
with the checkpoint.
"""

from __future__ import annotations

import numpy as np
import torch
from PIL import Image

from . import ShapeMismatch
from .manifest import Record


class TensorDataset:
    def __init__(self, records: list[Record], image_size: tuple[int, int]):
        self.records = records
        self.image_size = image_size
        w, h = image_size

        image_recs = [r for r in records if r.image_path is not None]
        feature_recs = [r for r in records if r.image_path is None]
        for r in feature_recs:
            if r.features is None:
                raise ShapeMismatch(f"{r.frame_id}: record has neither image nor features")

        self.feature_dim = None
        if feature_recs:
            dims = {len(r.features) for r in feature_recs}
            if len(dims) > 1:
                raise ShapeMismatch(f"inconsistent feature lengths {sorted(dims)}")
            self.feature_dim = dims.pop()

        self.images = torch.empty((len(image_recs), 3, h, w), dtype=torch.float32)
        for i, rec in enumerate(image_recs):
            with Image.open(rec.image_path) as img:
                resized = img.convert("RGB").resize((w, h), Image.BILINEAR)
            self.images[i] = torch.from_numpy(
                np.asarray(resized, dtype=np.float32).transpose(2, 0, 1) / 255.0
            )
        self.image_records = image_recs
        self.feature_records = feature_recs
        self.features = (
            torch.tensor([r.features for r in feature_recs], dtype=torch.float32)
            if feature_recs else torch.empty((0, 0))
        )

        self.speeds = torch.tensor(
            [r.speed for r in image_recs + feature_recs], dtype=torch.float32
        )
        self.targets = torch.tensor(
            [r.accel for r in image_recs + feature_recs], dtype=torch.float32
        )
        self.n_images = len(image_recs)

    def __len__(self) -> int:
        return len(self.records)

    def stats(self) -> dict:
        def safe_std(t):
            s = float(t.std()) if len(t) > 1 else 0.0
            return s if s > 1e-8 else 1.0

        return {
            "speed_mean": float(self.speeds.mean()),
            "speed_std": safe_std(self.speeds),
            "target_mean": float(self.targets.mean()),
            "target_std": safe_std(self.targets),
        }
