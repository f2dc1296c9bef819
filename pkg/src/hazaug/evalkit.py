"""Evaluation harness: safety-critical split, error metrics, features, ridge.

The safety-critical subset is the fraction of front-vehicle-bearing records
with the smallest (most negative) forward acceleration: the strong-braking
scenarios a car-following model must get right. Metrics are plain RMSE/MAE.
The pooled-feature extractor and the ridge regressor together form a
desk-scale stand-in for the downstream CNN, small enough that the full
train/evaluate loop runs in seconds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    NoFrontVehicleRecords,
    SingularSystem,
)
from .manifest import DatasetManifest, FrameRecord, Origin


@dataclass(frozen=True)
class SplitResult:
    """Frame ids split into safety-critical and general subsets."""

    critical: list[str]
    general: list[str]
    quantile: float

    def to_json(self) -> dict:
        return {
            "critical": self.critical,
            "general": self.general,
            "quantile": self.quantile,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitResult":
        return cls(
            critical=list(obj["critical"]),
            general=list(obj["general"]),
            quantile=float(obj["quantile"]),
        )


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    mae: float
    n: int
    subset: str  # "critical" or "complete"

    def __post_init__(self):
        if self.n < 1:
            raise EmptyInput("metric report over zero samples")

    def to_json(self) -> dict:
        return {"subset": self.subset, "rmse": self.rmse, "mae": self.mae, "n": self.n}


def split_safety_critical(manifest: DatasetManifest, quantile: float) -> SplitResult:
    """Bottom-``quantile`` of front-vehicle records by acceleration.

    Among records with a front box, the ceil(quantile * N_front) smallest
    accelerations (ties broken by frame_id) form the critical set; every
    other record, front vehicle or not, lands in the general set.
    """
    if not 0 < quantile < 1:
        raise ValueError(f"quantile must be in (0,1), got {quantile}")
    front = [r for r in manifest.records if r.front_box is not None]
    if not front:
        raise NoFrontVehicleRecords("manifest has no record with a front vehicle")
    ranked = sorted(front, key=lambda r: (r.kinematics.accel, r.frame_id))
    n_critical = int(np.ceil(quantile * len(front)))
    critical_ids = {r.frame_id for r in ranked[:n_critical]}
    critical = [r.frame_id for r in manifest.records if r.frame_id in critical_ids]
    general = [r.frame_id for r in manifest.records if r.frame_id not in critical_ids]
    return SplitResult(critical=critical, general=general, quantile=quantile)


def rmse(pred, truth) -> float:
    """Root mean squared error."""
    pred, truth = _paired(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def mae(pred, truth) -> float:
    """Mean absolute error."""
    pred, truth = _paired(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def _paired(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if len(pred) != len(truth):
        raise LengthMismatch(f"pred has {len(pred)} entries, truth {len(truth)}")
    if len(pred) == 0:
        raise EmptyInput("metrics need at least one sample")
    if not (np.isfinite(pred).all() and np.isfinite(truth).all()):
        raise ValueError("metrics require finite inputs")
    return pred, truth


def accel_histogram(
    manifest: DatasetManifest, n_bins: int, value_range: tuple[float, float]
) -> np.ndarray:
    """Counts of record accelerations over equal-width bins.

    Out-of-range values clamp into the end bins, so counts always sum to the
    record count.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"empty range {value_range}")
    counts = np.zeros(n_bins, dtype=np.int64)
    if not manifest.records:
        return counts
    accels = np.array([r.kinematics.accel for r in manifest.records])
    idx = np.floor((accels - lo) / (hi - lo) * n_bins).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    np.add.at(counts, idx, 1)
    return counts


def histogram_bin_centers(n_bins: int, value_range: tuple[float, float]) -> np.ndarray:
    lo, hi = value_range
    width = (hi - lo) / n_bins
    return lo + width * (np.arange(n_bins) + 0.5)


def pooled_features(
    image: np.ndarray, grid: tuple[int, int], kinematics
) -> np.ndarray:
    """Grid-pooled grayscale means plus speed: the regression feature vector.

    The image is divided into a gw x gh grid of cells; each cell contributes
    its mean grayscale value in [0, 1] (grayscale = channel mean), emitted
    row-major, with the forward speed appended last. Length = gw * gh + 1.
    """
    gw, gh = grid
    if gw < 1 or gh < 1:
        raise ValueError(f"grid must be >= 1x1, got {grid}")
    image = np.asarray(image)
    if image.ndim == 3:
        gray = image.astype(np.float64).mean(axis=2) / 255.0
    elif image.ndim == 2:
        gray = image.astype(np.float64) / 255.0
    else:
        raise DimensionMismatch(f"expected (H,W) or (H,W,3) image, got {image.shape}")
    h, w = gray.shape
    if h < gh or w < gw:
        raise DimensionMismatch(f"{w}x{h} image too small for {gw}x{gh} grid")

    row_edges = np.linspace(0, h, gh + 1).astype(int)
    col_edges = np.linspace(0, w, gw + 1).astype(int)
    cells = [
        gray[row_edges[r]:row_edges[r + 1], col_edges[c]:col_edges[c + 1]].mean()
        for r in range(gh)
        for c in range(gw)
    ]
    return np.array(cells + [float(kinematics.speed)], dtype=np.float64)


def ridge_fit(features: np.ndarray, targets: np.ndarray, lam: float,
              intercept: bool = True) -> np.ndarray:
    """Solve (X^T X + lam*I) w = X^T y; the intercept column is not penalized.

    Returns the weight vector with the intercept first when enabled. Raises
    SingularSystem when lam = 0 and the design matrix is rank-deficient.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.ndim != 2 or len(x) != len(y):
        raise DimensionMismatch(f"features {x.shape} vs targets {y.shape}")
    if intercept:
        x = np.hstack([np.ones((len(x), 1)), x])
    gram = x.T @ x
    penalty = np.eye(x.shape[1])
    if intercept:
        penalty[0, 0] = 0.0
    if lam == 0 and np.linalg.matrix_rank(gram) < x.shape[1]:
        raise SingularSystem(
            "normal equations are rank-deficient; use lam > 0 or drop columns"
        )
    try:
        return np.linalg.solve(gram + lam * penalty, x.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def ridge_predict(weights: np.ndarray, features: np.ndarray,
                  intercept: bool = True) -> np.ndarray:
    """Apply a fitted weight vector to new feature rows."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if intercept:
        x = np.hstack([np.ones((len(x), 1)), x])
    if x.shape[1] != len(weights):
        raise DimensionMismatch(f"{x.shape[1]} columns vs {len(weights)} weights")
    out = x @ np.asarray(weights, dtype=np.float64)
    return float(out[0]) if single else out


def train_test_side(frame_id: str, test_fraction: float = 0.2) -> str:
    """Deterministic train/test assignment by hashing the frame id.

    Derived (augmented/synthetic/resampled) records hash their parent's id so
    a child can never leak across the split from its parent.
    """
    digest = hashlib.sha256(frame_id.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:4], "big") / 2**32
    return "test" if bucket < test_fraction else "train"


def record_side(record: FrameRecord, test_fraction: float = 0.2) -> str:
    root = record.parent_id if record.parent_id is not None else record.frame_id
    return train_test_side(root, test_fraction)


def select_training_records(records, test_fraction: float = 0.2):
    """Training subset for a dataset variant, inferred from its origin mix.

    Accepts FrameRecords or RegressionRecords (anything with origin,
    parent_id, and an id). Train-side membership follows the parent's hash
    bucket. When the variant contains resampled records the redrawn multiset
    *replaces* the originals (importance sampling trains on the resampled
    dataset); augmented and synthetic records always add to the originals.
    """
    def side(rec) -> str:
        root = rec.parent_id if rec.parent_id else _record_id(rec)
        return train_test_side(root, test_fraction)

    train = [r for r in records if side(r) == "train"]
    if any(r.origin is Origin.RESAMPLED for r in train):
        return [r for r in train if r.origin is Origin.RESAMPLED]
    return train


def _record_id(rec) -> str:
    return rec.frame_id if hasattr(rec, "frame_id") else rec.source_id
