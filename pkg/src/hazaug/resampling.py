"""Imbalanced-regression baselines: SMOGN oversampling and importance resampling.

Both operate on pooled-feature regression records rather than raw pixels:
interpolating pooled features is well defined, whereas blending images would
produce ghost frames. SMOGN synthesizes new rare samples by interpolating
between a rare record and one of its nearest rare neighbors, then perturbing
with Gaussian noise scaled to the rare set's spread. Importance resampling
redraws the dataset with per-record weights inversely proportional to the
frequency of the record's target bin, over-representing rare decelerations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import evalkit, kitti
from .errors import DegenerateRange, InsufficientRare, TooFewRecords
from .manifest import (
    DatasetManifest,
    FrameRecord,
    Kinematics,
    Origin,
    with_records,
)

DEFAULT_K = 5
DEFAULT_PERT = 0.02
DEFAULT_RARE_QUANTILE = 0.10
DEFAULT_N_BINS = 20
FEATURE_GRID = (16, 8)  # matches the KITTI ~3.3:1 aspect ratio


@dataclass(frozen=True)
class RegressionRecord:
    """One (features, acceleration) sample tied back to its source frame."""

    features: tuple[float, ...]
    target: float
    source_id: str
    origin: Origin = Origin.ORIGINAL
    parent_id: str | None = None

    def __post_init__(self):
        if not all(math.isfinite(f) for f in self.features):
            raise ValueError(f"{self.source_id}: non-finite feature")
        if not math.isfinite(self.target):
            raise ValueError(f"{self.source_id}: non-finite target")


def _feature_matrix(records: list[RegressionRecord]) -> np.ndarray:
    lengths = {len(r.features) for r in records}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent feature lengths: {sorted(lengths)}")
    return np.array([r.features for r in records], dtype=np.float64)


def relevance_split(
    records: list[RegressionRecord], rare_quantile: float
) -> tuple[list[RegressionRecord], list[RegressionRecord]]:
    """Partition records into (rare, normal) by target quantile.

    Rare = the ceil(rare_quantile * N) records with the smallest targets,
    ties broken by source_id ascending.
    """
    if not 0 < rare_quantile < 1:
        raise ValueError(f"rare_quantile must be in (0,1), got {rare_quantile}")
    if len(records) < 2:
        raise TooFewRecords(f"need >= 2 records, got {len(records)}")
    ranked = sorted(records, key=lambda r: (r.target, r.source_id))
    n_rare = math.ceil(rare_quantile * len(records))
    rare = ranked[:n_rare]
    rare_ids = {id(r) for r in rare}
    normal = [r for r in records if id(r) not in rare_ids]
    return rare, normal


def interpolate_pair(
    seed_rec: RegressionRecord,
    neighbor: RegressionRecord,
    lam: float,
    feature_noise: np.ndarray,
    target_noise: float,
) -> tuple[np.ndarray, float]:
    """The SMOGN synthesis formula for one (seed, neighbor, lambda) triple."""
    f_seed = np.asarray(seed_rec.features, dtype=np.float64)
    f_nb = np.asarray(neighbor.features, dtype=np.float64)
    features = f_seed + lam * (f_nb - f_seed) + feature_noise
    target = seed_rec.target + lam * (neighbor.target - seed_rec.target) + target_noise
    return features, float(target)


def smogn_oversample(
    records: list[RegressionRecord],
    k: int = DEFAULT_K,
    pert: float = DEFAULT_PERT,
    rare_quantile: float = DEFAULT_RARE_QUANTILE,
    n_synth: int | None = None,
    seed: int = 0,
) -> list[RegressionRecord]:
    """Synthesize rare-target samples by neighbor interpolation plus noise.

    Per sample: a rare seed record and one of its k nearest rare neighbors
    (Euclidean over z-score-standardized features, standardization fitted on
    the full input) are interpolated at a uniform lambda, then perturbed by
    per-dimension Gaussian noise with std = pert * the rare set's range.
    Deterministic under ``seed``. Returns only the synthetic records.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if pert < 0:
        raise ValueError(f"pert must be >= 0, got {pert}")
    rare, _ = relevance_split(records, rare_quantile)
    if len(rare) < 2:
        raise InsufficientRare(f"rare set has {len(rare)} record(s), need >= 2")
    if n_synth is None:
        n_synth = len(records)

    full = _feature_matrix(records)
    mu = full.mean(axis=0)
    sigma = full.std(axis=0)
    sigma[sigma == 0] = 1.0

    rare_feats = _feature_matrix(rare)
    standardized = (rare_feats - mu) / sigma
    dists = np.linalg.norm(
        standardized[:, None, :] - standardized[None, :, :], axis=2
    )
    np.fill_diagonal(dists, np.inf)
    k_eff = min(k, len(rare) - 1)
    neighbor_idx = np.argsort(dists, axis=1, kind="stable")[:, :k_eff]

    feat_range = rare_feats.max(axis=0) - rare_feats.min(axis=0)
    targets = np.array([r.target for r in rare])
    target_range = float(targets.max() - targets.min())

    rng = np.random.default_rng(seed)
    out: list[RegressionRecord] = []
    for i in range(n_synth):
        si = int(rng.integers(len(rare)))
        ni = int(neighbor_idx[si][int(rng.integers(k_eff))])
        lam = float(rng.uniform())
        f_noise = rng.normal(0.0, pert * feat_range) if pert > 0 else np.zeros(len(feat_range))
        t_noise = float(rng.normal(0.0, pert * target_range)) if pert > 0 else 0.0
        features, target = interpolate_pair(rare[si], rare[ni], lam, f_noise, t_noise)
        seed_rec = rare[si]
        parent = seed_rec.parent_id if seed_rec.parent_id else seed_rec.source_id
        out.append(
            RegressionRecord(
                features=tuple(features),
                target=target,
                source_id=f"smogn/{i:05d}",
                origin=Origin.SYNTHETIC_SMOGN,
                parent_id=parent,
            )
        )
    return out


def importance_resample(
    records: list[RegressionRecord],
    n_bins: int = DEFAULT_N_BINS,
    out_size: int | None = None,
    seed: int = 0,
) -> list[RegressionRecord]:
    """Redraw the dataset with inverse-bin-frequency weights.

    Targets are binned into ``n_bins`` equal-width bins over [min, max]; each
    record's weight is 1 / count(its bin), normalized into probabilities, and
    ``out_size`` records are drawn with replacement. Deterministic under
    ``seed``. Every output record is a relabeled copy of an input record.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    targets = np.array([r.target for r in records], dtype=np.float64)
    if len(records) == 0 or targets.max() == targets.min():
        raise DegenerateRange("targets span zero range; weights undefined")
    if out_size is None:
        out_size = len(records)

    lo, hi = targets.min(), targets.max()
    bins = np.floor((targets - lo) / (hi - lo) * n_bins).astype(np.int64)
    bins = np.clip(bins, 0, n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    weights = 1.0 / counts[bins]
    probs = weights / weights.sum()

    rng = np.random.default_rng(seed)
    draws = rng.choice(len(records), size=out_size, replace=True, p=probs)
    out = []
    for j, idx in enumerate(draws):
        src = records[int(idx)]
        parent = src.parent_id if src.parent_id else src.source_id
        out.append(
            RegressionRecord(
                features=src.features,
                target=src.target,
                source_id=src.source_id,
                origin=Origin.RESAMPLED,
                parent_id=parent,
            )
        )
    return out


# --- manifest bridging -----------------------------------------------------

def manifest_to_records(
    manifest: DatasetManifest, grid: tuple[int, int] = FEATURE_GRID
) -> list[RegressionRecord]:
    """Extract pooled-feature regression records from manifest frames.

    Frames with images get features computed here; feature-space records
    (SMOGN synthetics) reuse their stored vectors.
    """
    out = []
    for rec in manifest.records:
        if rec.features is not None:
            features = tuple(rec.features)
        elif rec.image_path is not None:
            image = kitti.load_image(rec.image_path)
            features = tuple(
                evalkit.pooled_features(image, grid, rec.kinematics)
            )
        else:
            continue
        out.append(
            RegressionRecord(
                features=features,
                target=rec.kinematics.accel,
                source_id=rec.frame_id,
                origin=rec.origin,
                parent_id=rec.parent_id,
            )
        )
    return out


def append_baseline_records(
    manifest: DatasetManifest,
    synthetic: list[RegressionRecord],
    method: str,
) -> DatasetManifest:
    """Write baseline output back into the manifest as provenance-tagged records.

    SMOGN synthetics become feature-only records (no image); importance
    duplicates point at their source frame's files.
    """
    by_id = {r.frame_id: r for r in manifest.records}
    extra: list[FrameRecord] = []
    for j, rec in enumerate(synthetic):
        if rec.origin is Origin.SYNTHETIC_SMOGN:
            speed = max(0.0, float(rec.features[-1]))
            extra.append(
                FrameRecord(
                    frame_id=rec.source_id,
                    image_path=None,
                    depth_path=None,
                    detections_path=None,
                    kinematics=Kinematics(speed=speed, accel=rec.target),
                    front_box=None,
                    origin=Origin.SYNTHETIC_SMOGN,
                    parent_id=rec.parent_id,
                    features=rec.features,
                )
            )
        else:
            src = by_id[rec.source_id]
            extra.append(
                FrameRecord(
                    frame_id=f"{rec.source_id}_rs{j:05d}",
                    image_path=src.image_path,
                    depth_path=src.depth_path,
                    detections_path=src.detections_path,
                    kinematics=src.kinematics,
                    front_box=src.front_box,
                    origin=Origin.RESAMPLED,
                    parent_id=rec.parent_id,
                )
            )
    return with_records(
        manifest,
        list(manifest.records) + extra,
        meta_update={"baseline": {"method": method, "added": len(extra)}},
    )
