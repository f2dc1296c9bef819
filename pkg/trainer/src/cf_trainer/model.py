"""The car-following network: (image, speed) -> acceleration.

Three stride-2 conv blocks pool the resized frame into an embedding that is
fused with the normalized ego speed by a two-layer head. Feature-space
records (SMOGN synthetics, which have no image) go through a parallel dense
encoder producing an embedding of the same width, so both kinds of sample
share the regression head.
"""

from __future__ import annotations

import torch
import torch.nn as nn

EMBED_DIM = 64


class CarFollowingNet(nn.Module):
    def __init__(self, feature_dim: int | None = None):
        super().__init__()
        self.conv = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(32, 64, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            nn.AdaptiveAvgPool2d((2, 6)),
        )
        self.image_proj = nn.Linear(64 * 2 * 6, EMBED_DIM)
        self.feature_proj = None
        if feature_dim is not None:
            self.feature_proj = nn.Sequential(
                nn.Linear(feature_dim, EMBED_DIM),
                nn.ReLU(),
                nn.Linear(EMBED_DIM, EMBED_DIM),
            )
        self.head = nn.Sequential(
            nn.Linear(EMBED_DIM + 1, 32),
            nn.ReLU(),
            nn.Linear(32, 1),
        )

    def embed_images(self, images: torch.Tensor) -> torch.Tensor:
        x = self.conv(images)
        return torch.relu(self.image_proj(x.flatten(1)))

    def embed_features(self, features: torch.Tensor) -> torch.Tensor:
        if self.feature_proj is None:
            raise RuntimeError("model was built without a feature branch")
        return torch.relu(self.feature_proj(features))

    def regress(self, embedding: torch.Tensor, speed: torch.Tensor) -> torch.Tensor:
        return self.head(torch.cat([embedding, speed.unsqueeze(1)], dim=1)).squeeze(1)

    def forward(self, images: torch.Tensor, speed: torch.Tensor) -> torch.Tensor:
        return self.regress(self.embed_images(images), speed)
