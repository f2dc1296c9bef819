"""Command-line surface for the augmentation pipeline.

Subcommands mirror the pipeline stages::

    hazaug ingest ROOT -o OUT            corpus tree -> manifest.jsonl
    hazaug augment MANIFEST -o OUT       geometric hazard augmentation
    hazaug baseline-smogn MANIFEST -o OUT
    hazaug baseline-importance MANIFEST -o OUT
    hazaug split MANIFEST -o OUT         safety-critical frame-id split
    hazaug eval --manifest NAME=PATH ... ridge train/eval per variant
    hazaug stats MANIFEST -o OUT         histogram CSV + figure
    hazaug synth ROOT                    synthetic corpus for trials

Configuration comes from a flat dotted-key file (``--config`` or the
HAZAUG_CONFIG environment variable), overridable per-key with ``--set``.
Exit codes: 0 success, 2 validation/corpus failure, 3 partial batch failure
(some frames skipped; a JSON report says which).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import augment as augment_mod
from . import evalkit, kitti, resampling, synth
from .config import ENV_CONFIG_VAR, RunConfig, load_config
from .errors import HazaugError
from .manifest import DatasetManifest, Origin, load_manifest, save_manifest

log = logging.getLogger("hazaug")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _write_json_atomic(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _resolve_config(args) -> RunConfig:
    config_path = args.config or os.environ.get(ENV_CONFIG_VAR)
    cfg = load_config(config_path)
    for pair in args.set or []:
        if "=" not in pair:
            raise HazaugError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        cfg.set(key.strip(), value.strip())
    return cfg


def cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    manifest = kitti.build_manifest(args.root, cfg.ingest_config())
    out = Path(args.output)
    save_manifest(manifest, out)
    eligible = sum(r.augmentation_eligible for r in manifest.records)
    log.info("ingested %d frames (%d augmentation-eligible) -> %s",
             len(manifest), eligible, out)
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = _resolve_config(args)
    manifest = load_manifest(args.manifest)
    out_root = Path(args.output)
    augmented = augment_mod.augment_dataset(
        manifest, cfg.augment_config(), out_root, jobs=args.jobs or cfg["jobs"]
    )
    save_manifest(augmented, out_root / "manifest.jsonl")
    report = augmented.meta.get("augmentation", {})
    _write_json_atomic(report, out_root / "augment_report.json")
    n_new = len(augmented) - len(manifest)
    log.info("augmented %d/%d candidate frames", n_new, report.get("candidates", 0))
    return EXIT_PARTIAL if report.get("skipped") else EXIT_OK


def _run_baseline(args, method: str) -> int:
    cfg = _resolve_config(args)
    manifest = load_manifest(args.manifest)
    grid = (cfg["eval.grid_w"], cfg["eval.grid_h"])
    records = resampling.manifest_to_records(manifest, grid)
    if method == "smogn":
        synthetic = resampling.smogn_oversample(
            records,
            k=cfg["resample.k"],
            pert=cfg["resample.pert"],
            rare_quantile=cfg["resample.rare_quantile"],
            n_synth=args.count,
            seed=cfg["seed"],
        )
    else:
        synthetic = resampling.importance_resample(
            records,
            n_bins=cfg["resample.n_bins"],
            out_size=args.count,
            seed=cfg["seed"],
        )
    out_root = Path(args.output)
    result = resampling.append_baseline_records(manifest, synthetic, method)
    save_manifest(result, out_root / "manifest.jsonl")
    log.info("%s added %d records", method, len(synthetic))
    return EXIT_OK


def cmd_baseline_smogn(args) -> int:
    return _run_baseline(args, "smogn")


def cmd_baseline_importance(args) -> int:
    return _run_baseline(args, "importance")


def cmd_split(args) -> int:
    cfg = _resolve_config(args)
    manifest = load_manifest(args.manifest)
    quantile = args.quantile if args.quantile is not None else cfg["eval.quantile"]
    result = evalkit.split_safety_critical(manifest, quantile)
    _write_json_atomic(result.to_json(), Path(args.output))
    log.info("split: %d critical / %d general", len(result.critical),
             len(result.general))
    return EXIT_OK


def _variant_metrics(manifest: DatasetManifest, split_ids: set[str],
                     cfg: RunConfig) -> dict:
    """Train ridge on the manifest's training records, evaluate on test originals."""
    grid = (cfg["eval.grid_w"], cfg["eval.grid_h"])
    test_fraction = cfg["eval.test_fraction"]
    records = resampling.manifest_to_records(manifest, grid)
    by_id = {r.source_id: r for r in records}

    train = evalkit.select_training_records(records, test_fraction)
    if not train:
        raise HazaugError("variant has no training records")
    x = np.array([r.features for r in train])
    y = np.array([r.target for r in train])
    weights = evalkit.ridge_fit(x, y, cfg["eval.ridge_lambda"])

    test = [
        r for r in manifest.records
        if r.origin is Origin.ORIGINAL
        and evalkit.record_side(r, test_fraction) == "test"
    ]
    if not test:
        raise HazaugError("no test-side original records")
    preds = {
        r.frame_id: evalkit.ridge_predict(weights, np.array(by_id[r.frame_id].features))
        for r in test
    }
    truths = {r.frame_id: r.kinematics.accel for r in test}

    out = {}
    for subset, ids in (
        ("critical", [r.frame_id for r in test if r.frame_id in split_ids]),
        ("complete", [r.frame_id for r in test]),
    ):
        if not ids:
            continue
        p = [preds[i] for i in ids]
        t = [truths[i] for i in ids]
        out[subset] = evalkit.MetricReport(
            rmse=evalkit.rmse(p, t), mae=evalkit.mae(p, t), n=len(ids), subset=subset
        ).to_json()
    return out


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    split = evalkit.SplitResult.from_json(json.loads(Path(args.split).read_text()))
    critical_ids = set(split.critical)

    reports = {}
    for spec in args.manifest:
        if "=" not in spec:
            raise HazaugError(f"--manifest expects NAME=PATH, got {spec!r}")
        name, _, path = spec.partition("=")
        reports[name] = _variant_metrics(load_manifest(path), critical_ids, cfg)

    out_root = Path(args.output)
    _write_json_atomic(reports, out_root / "eval_report.json")
    if not args.no_figure:
        from . import report as report_mod
        critical = {
            name: rep["critical"] for name, rep in reports.items()
            if "critical" in rep
        }
        if critical:
            report_mod.render_metric_figure(
                critical, out_root / "eval_critical.png"
            )
    for name, rep in reports.items():
        for subset, metrics in rep.items():
            log.info("%s %s: rmse=%.4f mae=%.4f n=%d", name, subset,
                     metrics["rmse"], metrics["mae"], metrics["n"])
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = _resolve_config(args)
    manifest = load_manifest(args.manifest)
    n_bins = args.bins or cfg["stats.bins"]
    value_range = (cfg["stats.range_min"], cfg["stats.range_max"])
    counts = evalkit.accel_histogram(manifest, n_bins, value_range)
    centers = evalkit.histogram_bin_centers(n_bins, value_range)

    out_root = Path(args.output)
    out_root.mkdir(parents=True, exist_ok=True)
    csv_path = out_root / "accel_histogram.csv"
    tmp = csv_path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_center", "count"])
        for center, count in zip(centers, counts):
            writer.writerow([f"{center:.6f}", int(count)])
    os.replace(tmp, csv_path)

    if cfg["stats.figure"] and not args.no_figure:
        from . import report as report_mod
        report_mod.render_histogram_figure(
            centers, counts, out_root / "accel_histogram.png"
        )
    log.info("histogram over %d records -> %s", int(counts.sum()), csv_path)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synth.CorpusSpec(
        n_frames=args.frames, width=args.width, seed=args.seed
    )
    synth.generate_corpus(args.root, spec)
    log.info("wrote %d synthetic frames under %s", args.frames, args.root)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hazaug",
        description="Safety-critical driving data augmentation pipeline",
    )
    parser.add_argument("--config", help=f"config file (default ${ENV_CONFIG_VAR})")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a KITTI-raw-style corpus into a manifest")
    p.add_argument("root")
    p.add_argument("-o", "--output", required=True, help="manifest output path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("augment", help="geometric hazard augmentation")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--jobs", type=int, help="parallel frame workers")
    p.set_defaults(func=cmd_augment)

    for name, fn in (("baseline-smogn", cmd_baseline_smogn),
                     ("baseline-importance", cmd_baseline_importance)):
        p = sub.add_parser(name, help=f"{name.split('-')[1]} resampling baseline")
        p.add_argument("manifest")
        p.add_argument("-o", "--output", required=True, help="output directory")
        p.add_argument("--count", type=int, help="records to synthesize/draw")
        p.set_defaults(func=fn)

    p = sub.add_parser("split", help="safety-critical / general frame split")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="split JSON path")
    p.add_argument("--quantile", type=float)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", help="train+evaluate the ridge stand-in per variant")
    p.add_argument("--manifest", action="append", required=True,
                   metavar="NAME=PATH")
    p.add_argument("--split", required=True, help="split JSON from `hazaug split`")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="acceleration histogram CSV + figure")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--bins", type=int)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic validation corpus")
    p.add_argument("root")
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--width", type=int, default=480)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
    )
    try:
        return args.func(args)
    except (HazaugError, ValueError) as exc:
        # ValueError covers module-config invariant violations raised at
        # dataclass construction (e.g. accel_scale <= 1)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
