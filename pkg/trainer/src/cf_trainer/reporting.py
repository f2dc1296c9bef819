"""Method-by-subset comparison grid over prediction CSVs.

The evaluation frames are the test-side original records of the manifest;
the critical subset intersects them with the split file's critical ids.
Every variant CSV must cover every evaluated frame (MissingPrediction
otherwise). Metrics are computed locally and are required to agree with the
pipeline's own implementations on identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from . import MissingPrediction
from .manifest import read_manifest, read_split, held_out_originals

SUBSETS = ("critical", "complete")


def rmse(pred: list[float], truth: list[float]) -> float:
    assert len(pred) == len(truth) and pred
    return math.sqrt(sum((p - t) ** 2 for p, t in zip(pred, truth)) / len(pred))


def mae(pred: list[float], truth: list[float]) -> float:
    assert len(pred) == len(truth) and pred
    return sum(abs(p - t) for p, t in zip(pred, truth)) / len(pred)


def read_predictions(path: str | Path) -> dict[str, float]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["frame_id"]] = float(row["prediction"])
    return out


def report(
    manifest_path: str | Path,
    split_path: str | Path,
    prediction_csvs: dict[str, str | Path],
    out_dir: str | Path,
    test_fraction: float = 0.2,
) -> dict:
    """Build the comparison grid; writes comparison.csv and comparison.md."""
    records, _ = read_manifest(manifest_path)
    split = read_split(split_path)
    critical_ids = set(split["critical"])

    evaluation = held_out_originals(records, test_fraction)
    truth = {r.frame_id: r.accel for r in evaluation}
    subsets = {
        "complete": [r.frame_id for r in evaluation],
        "critical": [r.frame_id for r in evaluation if r.frame_id in critical_ids],
    }

    grid: dict[str, dict[str, dict]] = {}
    for method, csv_path in prediction_csvs.items():
        preds = read_predictions(csv_path)
        missing = [fid for fid in subsets["complete"] if fid not in preds]
        if missing:
            raise MissingPrediction(
                f"{method}: {len(missing)} evaluated frame(s) absent from "
                f"{csv_path}, first {missing[0]}"
            )
        grid[method] = {}
        for subset in SUBSETS:
            ids = subsets[subset]
            if not ids:
                continue
            p = [preds[i] for i in ids]
            t = [truth[i] for i in ids]
            grid[method][subset] = {
                "rmse": rmse(p, t), "mae": mae(p, t), "n": len(ids),
            }

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "subset", "rmse", "mae", "n"])
        for method, per_subset in grid.items():
            for subset, m in per_subset.items():
                writer.writerow(
                    [method, subset, f"{m['rmse']:.9f}", f"{m['mae']:.9f}", m["n"]]
                )

    lines = [
        "| Method | critical RMSE/MAE | complete RMSE/MAE |",
        "|---|---|---|",
    ]
    for method, per_subset in grid.items():
        def fmt(subset):
            if subset not in per_subset:
                return "-"
            m = per_subset[subset]
            return f"{m['rmse']:.4f} / {m['mae']:.4f}"
        lines.append(f"| {method} | {fmt('critical')} | {fmt('complete')} |")
    (out_dir / "comparison.md").write_text("\n".join(lines) + "\n")
    return grid
