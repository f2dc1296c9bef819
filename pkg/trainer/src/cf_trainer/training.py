"""Training loop: minimize MSE of predicted acceleration per dataset variant."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .dataset import TensorDataset
from .manifest import read_manifest, training_records
from .model import CarFollowingNet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainSpec:
    manifest_path: str
    variant: str = "original"          # original | smogn | importance | ours
    image_size: tuple[int, int] = (224, 74)   # (w, h) after resize
    epochs: int = 30
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    test_fraction: float = 0.2

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 1 or self.learning_rate <= 0:
            raise ValueError("hyperparameters must be positive")
        if min(self.image_size) < 8:
            raise ValueError(f"image_size too small: {self.image_size}")


def train(spec: TrainSpec, out_dir: str | Path) -> Path:
    """Train one variant; writes checkpoint.pt + training_log.json in out_dir.

    Deterministic per seed up to backend nondeterminism; the per-epoch loss
    curve and the seed are logged alongside the checkpoint.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(spec.seed)

    records, _ = read_manifest(spec.manifest_path)
    chosen = training_records(records, spec.variant, spec.test_fraction)
    data = TensorDataset(chosen, spec.image_size)
    stats = data.stats()

    model = CarFollowingNet(feature_dim=data.feature_dim)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.learning_rate)

    speeds = (data.speeds - stats["speed_mean"]) / stats["speed_std"]
    targets = (data.targets - stats["target_mean"]) / stats["target_std"]
    n = len(data)
    rng = np.random.default_rng(spec.seed)

    losses = []
    model.train()
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, spec.batch_size):
            batch = order[start:start + spec.batch_size]
            img_idx = batch[batch < data.n_images]
            feat_idx = batch[batch >= data.n_images] - data.n_images

            embeds, speed_parts, target_parts = [], [], []
            if len(img_idx):
                embeds.append(model.embed_images(data.images[img_idx]))
                speed_parts.append(speeds[img_idx])
                target_parts.append(targets[img_idx])
            if len(feat_idx):
                embeds.append(model.embed_features(data.features[feat_idx]))
                speed_parts.append(speeds[feat_idx + data.n_images])
                target_parts.append(targets[feat_idx + data.n_images])

            pred = model.regress(torch.cat(embeds), torch.cat(speed_parts))
            loss = torch.mean((pred - torch.cat(target_parts)) ** 2)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        losses.append(epoch_loss / n)
        log.info("variant=%s epoch=%d loss=%.5f", spec.variant, epoch, losses[-1])

    checkpoint_path = out_dir / "checkpoint.pt"
    torch.save(
        {
            "state_dict": model.state_dict(),
            "feature_dim": data.feature_dim,
            "stats": stats,
            "spec": asdict(spec),
        },
        checkpoint_path,
    )
    (out_dir / "training_log.json").write_text(
        json.dumps(
            {"seed": spec.seed, "variant": spec.variant, "n_train": n,
             "epoch_loss": losses},
            indent=1,
        )
    )
    return checkpoint_path
