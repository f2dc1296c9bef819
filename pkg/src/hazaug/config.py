"""Flat dotted-key run configuration.

Config files are plain text, one ``section.key = value`` per line, ``#``
comments allowed. Every key has a typed default so an empty file is a valid
config; unknown keys are rejected rather than silently ignored. Parsing and
serialization round-trip: ``serialize(parse(text))`` is the canonical form.
"""

from __future__ import annotations

from pathlib import Path

from .augment import AugmentationConfig
from .errors import ConfigError
from .kitti import IngestConfig

ENV_CONFIG_VAR = "HAZAUG_CONFIG"


def _parse_classes(text: str) -> frozenset[int]:
    return frozenset(int(tok) for tok in str(text).replace(",", " ").split())


def _fmt_classes(value) -> str:
    return ",".join(str(v) for v in sorted(value))


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (caster from string, formatter to string, default)
SCHEMA = {
    "seed": (int, str, 0),
    "jobs": (int, str, 1),
    "ingest.camera_index": (int, str, 2),
    "ingest.depth_scale": (float, repr, 1.0 / 256.0),
    "ingest.depth_mode": (str, str, "quantized16"),
    "ingest.conf_floor": (float, repr, 0.25),
    "ingest.nms_iou": (float, repr, 0.5),
    "ingest.center_tolerance_frac": (float, repr, 0.15),
    "ingest.vehicle_classes": (_parse_classes, _fmt_classes, frozenset({2, 5, 7})),
    "augment.accel_scale": (float, repr, 1.5),
    "augment.body_length": (float, repr, 4.5),
    "augment.shift_fraction": (float, repr, 0.5),
    "augment.candidate_max_distance": (float, repr, 15.0),
    "augment.candidate_fraction_cap": (float, repr, 0.10),
    "augment.depth_band": (float, repr, 2.0),
    "resample.k": (int, str, 5),
    "resample.pert": (float, repr, 0.02),
    "resample.rare_quantile": (float, repr, 0.10),
    "resample.n_bins": (int, str, 20),
    "eval.quantile": (float, repr, 0.10),
    "eval.grid_w": (int, str, 16),
    "eval.grid_h": (int, str, 8),
    "eval.ridge_lambda": (float, repr, 5.0),
    "eval.test_fraction": (float, repr, 0.2),
    "stats.bins": (int, str, 40),
    "stats.range_min": (float, repr, -6.0),
    "stats.range_max": (float, repr, 3.0),
    "stats.figure": (_parse_bool, lambda b: "true" if b else "false", True),
}


class RunConfig:
    """Resolved configuration: schema defaults overlaid with file/flag values."""

    def __init__(self, values: dict | None = None):
        self.values = {key: default for key, (_, _, default) in SCHEMA.items()}
        for key, val in (values or {}).items():
            self.set(key, val)

    def set(self, key: str, raw) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        caster = SCHEMA[key][0]
        try:
            self.values[key] = caster(raw) if isinstance(raw, str) else caster(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc

    def __getitem__(self, key: str):
        return self.values[key]

    def ingest_config(self) -> IngestConfig:
        return IngestConfig(
            camera_index=self["ingest.camera_index"],
            depth_scale=self["ingest.depth_scale"],
            depth_mode=self["ingest.depth_mode"],
            vehicle_classes=self["ingest.vehicle_classes"],
            conf_floor=self["ingest.conf_floor"],
            nms_iou=self["ingest.nms_iou"],
            center_tolerance_frac=self["ingest.center_tolerance_frac"],
        )

    def augment_config(self) -> AugmentationConfig:
        return AugmentationConfig(
            accel_scale=self["augment.accel_scale"],
            body_length=self["augment.body_length"],
            shift_fraction=self["augment.shift_fraction"],
            candidate_max_distance=self["augment.candidate_max_distance"],
            candidate_fraction_cap=self["augment.candidate_fraction_cap"],
            depth_band=self["augment.depth_band"],
            rng_seed=self["seed"],
        )

    def serialize(self) -> str:
        lines = []
        for key in sorted(self.values):
            fmt = SCHEMA[key][1]
            lines.append(f"{key} = {fmt(self.values[key])}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse dotted-key config text, validating every key and value."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        cfg.set(key.strip(), value.strip())
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text())
