import pytest

from cf_trainer import EmptyVariant, ShapeMismatch
from cf_trainer.dataset import TensorDataset
from cf_trainer.manifest import (
    Record,
    read_manifest,
    side_of,
    held_out_originals,
    training_records,
)


def rec(frame_id, origin="original", parent_id=None, image=None, features=None,
        accel=-1.0):
    return Record(
        frame_id=frame_id, image_path=image, speed=10.0, accel=accel,
        origin=origin, parent_id=parent_id, features=features,
        has_front_box=True,
    )


class TestManifestReading:
    def test_reads_pipeline_output(self, pipeline):
        records, header = read_manifest(pipeline["original"])
        assert len(records) == 240
        assert "intrinsics" in header
        assert all(r.origin == "original" for r in records)
        assert all(r.image_path and r.image_path.endswith(".png") for r in records)

    def test_augmented_manifest_has_children(self, pipeline):
        records, _ = read_manifest(pipeline["ours"])
        children = [r for r in records if r.origin == "augmented"]
        assert children
        originals = {r.frame_id for r in records if r.origin == "original"}
        assert all(r.parent_id in originals for r in children)

    def test_smogn_records_are_feature_space(self, pipeline):
        records, _ = read_manifest(pipeline["smogn"])
        synth = [r for r in records if r.origin == "synthetic_smogn"]
        assert synth
        assert all(r.image_path is None and r.features for r in synth)


class TestSplitProtocol:
    def test_children_follow_parent(self):
        parent = rec("frame_a")
        child = rec("frame_a_aug", origin="augmented", parent_id="frame_a")
        assert side_of(parent.root_id) == side_of(child.root_id)

    def test_held_out_originals_excludes_derived(self):
        records = [
            rec("a"), rec("b"),
            rec("a_aug", origin="augmented", parent_id="a"),
        ]
        assert all(r.origin == "original" for r in held_out_originals(records, 0.99))


class TestVariantSelection:
    def test_original_excludes_derived(self, pipeline):
        records, _ = read_manifest(pipeline["ours"])
        train = training_records(records, "original")
        assert all(r.origin == "original" for r in train)

    def test_ours_includes_augmented(self, pipeline):
        records, _ = read_manifest(pipeline["ours"])
        train = training_records(records, "ours")
        assert any(r.origin == "augmented" for r in train)

    def test_importance_trains_on_redrawn_only(self, pipeline):
        records, _ = read_manifest(pipeline["importance"])
        train = training_records(records, "importance")
        assert train
        assert all(r.origin == "resampled" for r in train)

    def test_empty_variant(self, pipeline):
        records, _ = read_manifest(pipeline["original"])
        with pytest.raises(EmptyVariant):
            training_records(records, "smogn")

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            training_records([rec("a")], "bogus")


class TestTensorDataset:
    def test_inconsistent_feature_lengths(self):
        records = [
            rec("a", origin="synthetic_smogn", parent_id="p",
                features=(1.0, 2.0)),
            rec("b", origin="synthetic_smogn", parent_id="p",
                features=(1.0, 2.0, 3.0)),
        ]
        with pytest.raises(ShapeMismatch):
            TensorDataset(records, (32, 16))

    def test_record_without_image_or_features(self):
        with pytest.raises(ShapeMismatch):
            TensorDataset([rec("a")], (32, 16))

    def test_loads_pipeline_images(self, pipeline):
        records, _ = read_manifest(pipeline["original"])
        data = TensorDataset(records[:8], (64, 20))
        assert data.images.shape == (8, 3, 20, 64)
        assert data.feature_dim is None
        assert float(data.images.max()) <= 1.0
