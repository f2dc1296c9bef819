import hashlib
import math

import numpy as np
import pytest

from hazaug import augment, kitti
from hazaug.augment import AugmentationConfig
from hazaug.errors import EmptySegment
from hazaug.manifest import Origin, save_manifest

from conftest import write_plate_corpus


def dilate(mask, radius):
    out = np.zeros_like(mask)
    h, w = mask.shape
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            src = mask[
                max(0, -dy):h - max(0, dy),
                max(0, -dx):w - max(0, dx),
            ]
            out[
                max(0, dy):h - max(0, -dy),
                max(0, dx):w - max(0, -dx),
            ] |= src
    return out


def file_hash(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


class TestConfigArithmetic:
    def test_shift_defaults(self):
        assert augment.compute_shift(AugmentationConfig()) == 2.25

    def test_shift_other_body(self):
        cfg = AugmentationConfig(body_length=4.0)
        assert augment.compute_shift(cfg) == 2.0

    def test_zero_fraction_rejected(self):
        with pytest.raises(ValueError):
            AugmentationConfig(shift_fraction=0.0)

    def test_scale_must_exceed_one(self):
        with pytest.raises(ValueError):
            AugmentationConfig(accel_scale=1.0)

    @pytest.mark.parametrize("a,expected", [(-2.0, -3.0), (0.0, 0.0), (-1.2, -1.8)])
    def test_accel_scaling(self, a, expected):
        assert augment.adjust_acceleration(a, AugmentationConfig()) == pytest.approx(
            expected
        )

    def test_non_finite_accel_rejected(self):
        with pytest.raises(ValueError):
            augment.adjust_acceleration(math.nan, AugmentationConfig())


class TestSelectCandidates:
    def test_filter_sort_truncate(self, tmp_path):
        # brute-force expectation: of front depths {8, 9, 12, 18, 25} only
        # those < 15 pass, sorted ascending, truncated to ceil(0.1 * 20) = 2
        frames = {}
        depths = [8.0, 9.0, 12.0, 18.0, 25.0]
        for i in range(20):
            if i < 5:
                frames[f"{i:010d}"] = {"plate_depth": depths[i]}
            else:
                frames[f"{i:010d}"] = {"plate_depth": 28.0, "detect": False}
        write_plate_corpus(tmp_path, frames)
        manifest = kitti.build_manifest(tmp_path)
        chosen = augment.select_candidates(manifest, AugmentationConfig())
        assert chosen == ["drive_plate/0000000000", "drive_plate/0000000001"]

    def test_no_front_vehicles(self, tmp_path):
        write_plate_corpus(
            tmp_path, {f"{i:010d}": {"plate_depth": 10.0, "detect": False}
                       for i in range(4)}
        )
        manifest = kitti.build_manifest(tmp_path)
        assert augment.select_candidates(manifest, AugmentationConfig()) == []

    def test_degenerate_config_takes_all(self, tmp_path):
        frames = {f"{i:010d}": {"plate_depth": 5.0 + 7 * i} for i in range(4)}
        write_plate_corpus(tmp_path, frames)
        manifest = kitti.build_manifest(tmp_path)
        cfg = AugmentationConfig(
            candidate_max_distance=math.inf, candidate_fraction_cap=1.0
        )
        assert len(augment.select_candidates(manifest, cfg)) == 4


class TestAugmentFrame:
    def test_composition_of_geometry_and_label(self, tmp_path):
        # plate at 10 m, shift 2.25 -> plate renders at 7.75 m, i.e. width
        # grows by 10/7.75 (analytic pinhole oracle); label -2.0 -> -3.0
        k = write_plate_corpus(tmp_path, {"0000000000": {
            "plate_depth": 10.0, "accel": -2.0, "speed": 12.0}})
        manifest = kitti.build_manifest(tmp_path)
        record = manifest.records[0]
        out = augment.augment_frame(record, manifest, AugmentationConfig(),
                                    tmp_path / "out")
        assert out.origin is Origin.AUGMENTED
        assert out.parent_id == record.frame_id
        assert out.kinematics.accel == pytest.approx(-3.0)
        assert out.kinematics.speed == 12.0

        image = kitti.load_image(out.image_path)
        plate_color = np.array([220, 40, 40], dtype=np.uint8)
        cols = np.nonzero((image == plate_color).all(axis=2).any(axis=0))[0]
        width_after = cols.max() - cols.min() + 1
        cols0 = np.nonzero(
            (kitti.load_image(record.image_path) == plate_color)
            .all(axis=2).any(axis=0)
        )[0]
        width_before = cols0.max() - cols0.min() + 1
        assert width_after / width_before == pytest.approx(10 / 7.75, rel=0.02)

    def test_no_front_box_raises_named_reason(self, tmp_path):
        write_plate_corpus(tmp_path, {"0000000000": {
            "plate_depth": 10.0, "detect": False}})
        manifest = kitti.build_manifest(tmp_path)
        with pytest.raises(EmptySegment, match="NoFrontVehicle"):
            augment.augment_frame(manifest.records[0], manifest,
                                  AugmentationConfig(), tmp_path / "out")


class TestAugmentDataset:
    def _corpus(self, tmp_path, n=10, close=3):
        frames = {}
        for i in range(n):
            z = 9.0 + i if i < close else 30.0
            frames[f"{i:010d}"] = {"plate_depth": float(z), "accel": -1.0 - 0.1 * i}
        write_plate_corpus(tmp_path, frames)
        return kitti.build_manifest(tmp_path)

    def test_label_contract_and_cap(self, tmp_path):
        manifest = self._corpus(tmp_path, n=10, close=3)
        out = augment.augment_dataset(manifest, AugmentationConfig(),
                                      tmp_path / "out")
        originals = {r.frame_id: r for r in out.records
                     if r.origin is Origin.ORIGINAL}
        augmented = [r for r in out.records if r.origin is Origin.AUGMENTED]
        assert augmented
        cap = math.ceil(0.10 * len(originals))
        assert len(augmented) <= cap
        for rec in augmented:
            parent = originals[rec.parent_id]
            assert rec.kinematics.accel == 1.5 * parent.kinematics.accel
            assert rec.kinematics.speed == parent.kinematics.speed

    def test_originals_untouched(self, tmp_path):
        manifest = self._corpus(tmp_path)
        before = {r.frame_id: (file_hash(r.image_path), r)
                  for r in manifest.records}
        out = augment.augment_dataset(manifest, AugmentationConfig(),
                                      tmp_path / "out")
        for rec in out.records:
            if rec.origin is Origin.ORIGINAL:
                h, original = before[rec.frame_id]
                assert file_hash(rec.image_path) == h
                assert rec == original

    def test_edit_is_local_to_vehicle_footprint(self, tmp_path):
        from hazaug import geometry

        manifest = self._corpus(tmp_path)
        cfg = AugmentationConfig()
        out = augment.augment_dataset(manifest, cfg, tmp_path / "out")
        augmented = [r for r in out.records if r.origin is Origin.AUGMENTED]
        k = manifest.intrinsics
        for rec in augmented:
            parent = out.by_id(rec.parent_id)
            before = kitti.load_image(parent.image_path)
            after = kitti.load_image(rec.image_path)
            depth = kitti.load_depth_map(parent.depth_path, 1 / 256)
            cloud = geometry.unproject(depth, before, k)
            indices = geometry.segment_vehicle_points(
                cloud, parent.front_box, cfg.depth_band
            )
            moved = geometry.translate_points(
                cloud, indices, (0.0, 0.0, -augment.compute_shift(cfg))
            )
            footprint = np.zeros((k.height, k.width), dtype=bool)
            src = cloud.source_pixel[indices]
            footprint[src[:, 1], src[:, 0]] = True
            u, v, _ = geometry.project(moved.points[indices], k)
            px = np.clip(np.rint(u).astype(int), 0, k.width - 1)
            py = np.clip(np.rint(v).astype(int), 0, k.height - 1)
            footprint[py, px] = True
            outside = ~dilate(footprint, 2)
            assert (before[outside] == after[outside]).all()

    def test_no_candidates_returns_manifest_unchanged(self, tmp_path):
        frames = {f"{i:010d}": {"plate_depth": 30.0} for i in range(5)}
        write_plate_corpus(tmp_path, frames)
        manifest = kitti.build_manifest(tmp_path)
        out = augment.augment_dataset(manifest, AugmentationConfig(),
                                      tmp_path / "out")
        assert out.records == manifest.records
        assert out.meta["augmentation"]["succeeded"] == 0

    def test_degenerate_shift_skipped_not_fatal(self, tmp_path):
        frames = {
            "0000000000": {"plate_depth": 2.5},   # 2.5 - 2.25 < min_z
            "0000000001": {"plate_depth": 10.0},
        }
        write_plate_corpus(tmp_path, frames)
        manifest = kitti.build_manifest(tmp_path)
        cfg = AugmentationConfig(candidate_fraction_cap=1.0)
        out = augment.augment_dataset(manifest, cfg, tmp_path / "out")
        report = out.meta["augmentation"]
        assert report["skipped"] == {"drive_plate/0000000000": "DegenerateShift"}
        assert report["succeeded"] == 1

    def test_depth_size_mismatch_skipped(self, tmp_path):
        from hazaug.geometry import DepthMap

        frames = {"0000000000": {"plate_depth": 10.0}}
        write_plate_corpus(tmp_path, frames)
        # overwrite the depth sidecar with a grid narrower than the image
        wrong = np.full((125, 300), 10.0)
        kitti.save_depth_map(
            DepthMap(wrong, np.ones_like(wrong, dtype=bool)),
            tmp_path / "drive_plate" / "depth" / "data" / "0000000000.png",
            1 / 256,
        )
        manifest = kitti.build_manifest(tmp_path)
        cfg = AugmentationConfig(candidate_fraction_cap=1.0)
        out = augment.augment_dataset(manifest, cfg, tmp_path / "out")
        assert out.meta["augmentation"]["skipped"] == {
            "drive_plate/0000000000": "DimensionMismatch"
        }

    def test_deterministic_across_runs(self, tmp_path):
        manifest = self._corpus(tmp_path)
        cfg = AugmentationConfig()
        out1 = augment.augment_dataset(manifest, cfg, tmp_path / "o1")
        out2 = augment.augment_dataset(manifest, cfg, tmp_path / "o2")
        save_manifest(out1, tmp_path / "o1" / "m.jsonl")
        save_manifest(out2, tmp_path / "o2" / "m.jsonl")
        assert (tmp_path / "o1" / "m.jsonl").read_bytes() == (
            tmp_path / "o2" / "m.jsonl"
        ).read_bytes()
        for rec in out1.records:
            if rec.origin is Origin.AUGMENTED:
                twin = rec.image_path.replace("/o1/", "/o2/")
                assert file_hash(rec.image_path) == file_hash(twin)

    def test_parallel_matches_serial(self, tmp_path):
        manifest = self._corpus(tmp_path)
        cfg = AugmentationConfig()
        serial = augment.augment_dataset(manifest, cfg, tmp_path / "s")
        parallel = augment.augment_dataset(manifest, cfg, tmp_path / "p", jobs=4)
        assert [r.frame_id for r in serial.records] == [
            r.frame_id for r in parallel.records
        ]
        for a, b in zip(serial.records, parallel.records):
            if a.origin is Origin.AUGMENTED:
                assert file_hash(a.image_path) == file_hash(b.image_path)
