import numpy as np
import pytest

from hazaug.detection import BoundingBox
from hazaug.errors import (
    DegenerateShift,
    DimensionMismatch,
    EmptySegment,
    NonPositiveDepth,
)
from hazaug.geometry import (
    CameraIntrinsics,
    DepthMap,
    PointCloud,
    dump_cloud_ascii,
    project,
    render,
    segment_vehicle_points,
    translate_points,
    unproject,
)

from conftest import make_plate_scene


def small_k(width=40, height=30, fx=50.0, fy=60.0, cx=20.0, cy=15.0):
    return CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height)


class TestUnproject:
    def test_principal_point_ray(self):
        k = small_k()
        depth = np.zeros((30, 40))
        valid = np.zeros((30, 40), dtype=bool)
        depth[15, 20] = 5.0
        valid[15, 20] = True
        image = np.zeros((30, 40, 3), dtype=np.uint8)
        cloud = unproject(DepthMap(depth, valid), image, k)
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.points[0], [0.0, 0.0, 5.0])

    def test_hand_evaluated_pixel(self):
        # (u - cx)/fx * Z = (1300-600)/700 * 7 = 7; (v - cy)/fy * Z = 0
        k = CameraIntrinsics(fx=700, fy=700, cx=600, cy=180, width=1400, height=400)
        depth = np.zeros((400, 1400))
        valid = np.zeros((400, 1400), dtype=bool)
        depth[180, 1300] = 7.0
        valid[180, 1300] = True
        image = np.zeros((400, 1400, 3), dtype=np.uint8)
        cloud = unproject(DepthMap(depth, valid), image, k)
        np.testing.assert_allclose(cloud.points[0], [7.0, 0.0, 7.0])

    def test_all_invalid_gives_empty_cloud(self):
        k = small_k()
        d = DepthMap(np.zeros((30, 40)), np.zeros((30, 40), dtype=bool))
        cloud = unproject(d, np.zeros((30, 40, 3), dtype=np.uint8), k)
        assert len(cloud) == 0

    def test_dimension_mismatch(self):
        k = small_k()
        d = DepthMap(np.ones((30, 40)), np.ones((30, 40), dtype=bool))
        with pytest.raises(DimensionMismatch):
            unproject(d, np.zeros((31, 40, 3), dtype=np.uint8), k)

    def test_colors_copied(self):
        k = small_k()
        image = np.arange(30 * 40 * 3, dtype=np.uint8).reshape(30, 40, 3)
        d = DepthMap(np.full((30, 40), 3.0), np.ones((30, 40), dtype=bool))
        cloud = unproject(d, image, k)
        u, v = cloud.source_pixel[:, 0], cloud.source_pixel[:, 1]
        assert (cloud.colors == image[v, u]).all()


class TestProject:
    def test_principal_axis(self):
        k = small_k()
        assert project((0.0, 0.0, 5.0), k) == (k.cx, k.cy, 5.0)

    def test_round_trip_single_pixel(self):
        k = CameraIntrinsics(fx=700, fy=700, cx=600, cy=180, width=1400, height=400)
        x = (1300 - k.cx) / k.fx * 7.0
        u, v, z = project((x, 0.0, 7.0), k)
        assert abs(u - 1300) <= 1e-6
        assert abs(v - 180) <= 1e-6

    def test_non_positive_depth(self):
        with pytest.raises(NonPositiveDepth):
            project((1.0, 1.0, 0.0), small_k())

    def test_full_frame_round_trip(self, kitti_intrinsics):
        k = kitti_intrinsics
        depth = np.linspace(1, 80, k.width * k.height).reshape(k.height, k.width)
        d = DepthMap(depth, np.ones_like(depth, dtype=bool))
        cloud = unproject(d, np.zeros((k.height, k.width, 3), dtype=np.uint8), k)
        u, v, _ = project(cloud.points, k)
        err_u = np.abs(u - cloud.source_pixel[:, 0])
        err_v = np.abs(v - cloud.source_pixel[:, 1])
        assert err_u.max() <= 1e-6
        assert err_v.max() <= 1e-6


class TestSegmentVehiclePoints:
    def _cloud_with_box_depths(self, depths, outside_depth=50.0):
        """4 points inside the box [0,0,3,3] at given depths, 1 outside."""
        pts, pix = [], []
        for i, z in enumerate(depths):
            pts.append((0.0, 0.0, z))
            pix.append((i % 4, i // 4))
        pts.append((0.0, 0.0, outside_depth))
        pix.append((10, 10))
        cloud = PointCloud(
            points=np.array(pts),
            colors=np.zeros((len(pts), 3), dtype=np.uint8),
            source_pixel=np.array(pix),
        )
        return cloud

    def test_depth_gate_excludes_background(self):
        # brute-force oracle: median of {7.0, 7.1, 6.9, 30.0} is 7.05; the
        # band +/-2.0 keeps exactly the three points near 7 m
        depths = [7.0, 7.1, 6.9, 30.0]
        med = sorted(depths)[1:3]
        median = sum(med) / 2
        expected = {i for i, z in enumerate(depths) if abs(z - median) <= 2.0}
        cloud = self._cloud_with_box_depths(depths)
        idx = segment_vehicle_points(cloud, BoundingBox(0, 0, 3, 3), 2.0)
        assert set(idx.tolist()) == expected == {0, 1, 2}

    def test_empty_segment(self):
        cloud = self._cloud_with_box_depths([7.0])
        with pytest.raises(EmptySegment):
            segment_vehicle_points(cloud, BoundingBox(20, 20, 25, 25), 2.0)

    def test_infinite_band_keeps_all_in_box(self):
        depths = [7.0, 7.1, 6.9, 30.0]
        cloud = self._cloud_with_box_depths(depths)
        idx = segment_vehicle_points(cloud, BoundingBox(0, 0, 3, 3), np.inf)
        assert set(idx.tolist()) == {0, 1, 2, 3}


class TestTranslatePoints:
    def _cloud(self, pts):
        n = len(pts)
        return PointCloud(
            points=np.array(pts, dtype=np.float64),
            colors=np.arange(n * 3, dtype=np.uint8).reshape(n, 3),
            source_pixel=np.arange(n * 2, dtype=np.int32).reshape(n, 2),
        )

    def test_vector_addition(self):
        cloud = self._cloud([(1.0, 1.0, 7.0)])
        out = translate_points(cloud, np.array([0]), (0.0, 0.0, -2.25))
        np.testing.assert_allclose(out.points[0], [1.0, 1.0, 4.75])

    def test_empty_index_set_is_identity(self):
        cloud = self._cloud([(1.0, 2.0, 3.0), (4.0, 5.0, 6.0)])
        out = translate_points(cloud, np.array([], dtype=int), (1.0, 1.0, 1.0))
        assert (out.points == cloud.points).all()
        assert (out.colors == cloud.colors).all()
        assert (out.source_pixel == cloud.source_pixel).all()

    def test_degenerate_shift(self):
        cloud = self._cloud([(0.0, 0.0, 2.0)])
        with pytest.raises(DegenerateShift):
            translate_points(cloud, np.array([0]), (0.0, 0.0, -2.25))

    def test_only_selected_points_change(self):
        rng = np.random.default_rng(3)
        pts = np.column_stack([
            rng.normal(size=20), rng.normal(size=20), rng.uniform(5, 20, 20)
        ])
        cloud = self._cloud(pts)
        indices = np.array([2, 5, 11])
        out = translate_points(cloud, indices, (0.5, -0.5, -1.0))
        complement = np.setdiff1d(np.arange(20), indices)
        assert (out.points[complement] == cloud.points[complement]).all()
        assert (out.colors == cloud.colors).all()
        assert (out.source_pixel == cloud.source_pixel).all()
        assert (out.points[indices] != cloud.points[indices]).all()


class TestRender:
    def test_zero_edit_reproduces_source(self, kitti_intrinsics):
        k = kitti_intrinsics
        image, depth, valid, _ = make_plate_scene(k, plate_depth=10.0)
        cloud = unproject(DepthMap(depth, valid), image, k)
        result = render(cloud, k, fallback=image)
        assert (result.image[valid] == image[valid]).all()
        assert result.covered[valid].all()

    def test_z_buffer_keeps_nearest(self):
        k = small_k()
        pts = np.array([[0.0, 0.0, 9.0], [0.0, 0.0, 4.0]])
        colors = np.array([[10, 10, 10], [200, 200, 200]], dtype=np.uint8)
        cloud = PointCloud(pts, colors, np.array([[0, 0], [1, 0]]))
        result = render(cloud, k, fallback=np.zeros((30, 40, 3), dtype=np.uint8))
        assert (result.image[15, 20] == [200, 200, 200]).all()

    def test_equal_depth_tie_break_lower_index(self):
        k = small_k()
        pts = np.array([[0.0, 0.0, 5.0], [0.0, 0.0, 5.0]])
        colors = np.array([[7, 7, 7], [250, 250, 250]], dtype=np.uint8)
        cloud = PointCloud(pts, colors, np.array([[0, 0], [1, 0]]))
        result = render(cloud, k, fallback=np.zeros((30, 40, 3), dtype=np.uint8))
        assert (result.image[15, 20] == [7, 7, 7]).all()

    def test_hole_mask_consistency(self, kitti_intrinsics):
        k = kitti_intrinsics
        image, depth, valid, _ = make_plate_scene(k, plate_depth=10.0)
        valid[::2] = False  # knock out half the rows
        cloud = unproject(DepthMap(depth * valid, valid), image, k)
        result = render(cloud, k, fallback=image)
        assert not (result.hole_filled & result.covered).any()
        assert (result.hole_filled == ~result.covered).all()
        # uncovered pixels took the fallback
        assert (result.image[result.hole_filled] == image[result.hole_filled]).all()

    def test_determinism(self, kitti_intrinsics):
        k = kitti_intrinsics
        image, depth, valid, _ = make_plate_scene(k, plate_depth=8.0)
        cloud = unproject(DepthMap(depth, valid), image, k)
        r1 = render(cloud, k, fallback=image)
        r2 = render(cloud, k, fallback=image)
        assert (r1.image == r2.image).all()
        assert (r1.covered == r2.covered).all()
        assert (r1.hole_filled == r2.hole_filled).all()

    @pytest.mark.parametrize("d", [1.0, 2.0, 3.0])
    def test_plate_scaling_law(self, kitti_intrinsics, d):
        # analytic pinhole oracle: moving a plate at Z toward the camera by d
        # scales its projected width by Z / (Z - d)
        k = kitti_intrinsics
        z = 10.0
        image, depth, valid, on_plate = make_plate_scene(k, plate_depth=z)
        cloud = unproject(DepthMap(depth, valid), image, k)
        plate_color = np.array([220, 40, 40], dtype=np.uint8)

        is_plate = (cloud.colors == plate_color).all(axis=1)
        indices = np.nonzero(is_plate)[0]
        moved = translate_points(cloud, indices, (0.0, 0.0, -d))
        result = render(moved, k, fallback=image)

        def plate_width(img):
            cols = np.nonzero((img == plate_color).all(axis=2).any(axis=0))[0]
            return cols.max() - cols.min() + 1

        before = plate_width(image)
        after = plate_width(result.image)
        expected = z / (z - d)
        assert after / before == pytest.approx(expected, rel=0.02)


def test_cloud_ascii_dump(tmp_path):
    cloud = PointCloud(
        points=np.array([[1.0, 2.0, 3.0]]),
        colors=np.array([[10, 20, 30]], dtype=np.uint8),
        source_pixel=np.array([[4, 5]]),
    )
    path = tmp_path / "cloud.txt"
    dump_cloud_ascii(cloud, path)
    assert path.read_text() == "1.000000 2.000000 3.000000 10 20 30\n"
