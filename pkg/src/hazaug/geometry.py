"""Projective core: depth unprojection, point-cloud editing, z-buffer rendering.

The camera frame is +x right, +y down, +z forward. A valid depth pixel
(u, v) with metric depth Z unprojects to

    x = (u - cx) / fx * Z,   y = (v - cy) / fy * Z,   z = Z

and projects back with u = fx*x/z + cx, v = fy*y/z + cy. Rendering splats
every point to its nearest integer pixel and resolves collisions with a
z-buffer (nearest point wins, equal depth -> lower point index). Colors are
always copied from the source image, never interpolated, so an unedited
cloud renders back to the original image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import BoundingBox
from .errors import (
    DegenerateShift,
    DimensionMismatch,
    EmptySegment,
    NonPositiveDepth,
)

# points moved closer than this to the camera plane are rejected
MIN_Z = 0.5


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters, all in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive: fx={self.fx}, fy={self.fy}")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx},{self.cy}) outside "
                f"{self.width}x{self.height} image"
            )

    def to_json(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CameraIntrinsics":
        return cls(
            fx=float(obj["fx"]), fy=float(obj["fy"]),
            cx=float(obj["cx"]), cy=float(obj["cy"]),
            width=int(obj["width"]), height=int(obj["height"]),
        )


@dataclass
class DepthMap:
    """Per-pixel metric depth with a validity mask.

    ``depth`` is (H, W) float64 meters; ``valid`` marks pixels whose depth
    is trustworthy. Invalid pixels produce no 3D points.
    """

    depth: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.depth.shape != self.valid.shape or self.depth.ndim != 2:
            raise DimensionMismatch(
                f"depth {self.depth.shape} vs valid {self.valid.shape}"
            )
        bad = self.valid & ~(np.isfinite(self.depth) & (self.depth > 0))
        if bad.any():
            raise ValueError(f"{int(bad.sum())} valid pixels have non-positive depth")

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass
class PointCloud:
    """Colored points in the camera frame with source-pixel bookkeeping.

    points: (N, 3) float64 meters; colors: (N, 3) uint8;
    source_pixel: (N, 2) int32 as (u, v) of the originating pixel.
    """

    points: np.ndarray
    colors: np.ndarray
    source_pixel: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        self.source_pixel = np.asarray(self.source_pixel, dtype=np.int32).reshape(-1, 2)
        n = len(self.points)
        if len(self.colors) != n or len(self.source_pixel) != n:
            raise DimensionMismatch(
                f"points={n}, colors={len(self.colors)}, "
                f"source_pixel={len(self.source_pixel)}"
            )
        if n and not (self.points[:, 2] > 0).all():
            raise ValueError("point cloud contains points with z <= 0")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class RenderResult:
    """Output of z-buffer splatting: image plus coverage bookkeeping."""

    image: np.ndarray          # (H, W, 3) uint8, defined everywhere
    covered: np.ndarray        # (H, W) bool, pixel received >= 1 point
    hole_filled: np.ndarray    # (H, W) bool, pixel taken from the fallback
    depth: np.ndarray = field(repr=False, default=None)  # (H, W) float64, inf where uncovered


def unproject(depth: DepthMap, image: np.ndarray, k: CameraIntrinsics) -> PointCloud:
    """Lift every valid depth pixel to a colored 3D point (one point per pixel).

    Points are ordered row-major by source pixel, which downstream code relies
    on for deterministic tie-breaks.
    """
    image = np.asarray(image)
    if image.shape[:2] != (depth.height, depth.width):
        raise DimensionMismatch(
            f"image {image.shape[:2]} vs depth {(depth.height, depth.width)}"
        )
    if (depth.width, depth.height) != (k.width, k.height):
        raise DimensionMismatch(
            f"depth {(depth.width, depth.height)} vs intrinsics "
            f"{(k.width, k.height)}"
        )
    vv, uu = np.nonzero(depth.valid)
    z = depth.depth[vv, uu]
    x = (uu - k.cx) / k.fx * z
    y = (vv - k.cy) / k.fy * z
    return PointCloud(
        points=np.stack([x, y, z], axis=1),
        colors=image[vv, uu],
        source_pixel=np.stack([uu, vv], axis=1),
    )


def project(point, k: CameraIntrinsics):
    """Project camera-frame point(s) to pixel coordinates (u, v, z).

    Accepts a single (x, y, z) triple or an (N, 3) array; z is passed
    through for depth ordering. Raises NonPositiveDepth if any z <= 0.
    """
    pts = np.asarray(point, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    z = pts[:, 2]
    if (z <= 0).any():
        raise NonPositiveDepth("cannot project points with z <= 0")
    u = k.fx * pts[:, 0] / z + k.cx
    v = k.fy * pts[:, 1] / z + k.cy
    if single:
        return float(u[0]), float(v[0]), float(z[0])
    return u, v, z


def box_point_indices(cloud: PointCloud, box: BoundingBox) -> np.ndarray:
    """Indices of points whose source pixel lies inside ``box`` (inclusive)."""
    u = cloud.source_pixel[:, 0]
    v = cloud.source_pixel[:, 1]
    inside = (
        (u >= box.x_min) & (u <= box.x_max) & (v >= box.y_min) & (v <= box.y_max)
    )
    return np.nonzero(inside)[0]


def median_box_depth(cloud: PointCloud, box: BoundingBox) -> float:
    """Median z of the points inside ``box``; raises EmptySegment if none."""
    idx = box_point_indices(cloud, box)
    if len(idx) == 0:
        raise EmptySegment(f"no valid-depth points inside {box}")
    return float(np.median(cloud.points[idx, 2]))


def segment_vehicle_points(
    cloud: PointCloud, box: BoundingBox, depth_band: float
) -> np.ndarray:
    """Select the vehicle's points: inside the box and near its median depth.

    The depth gate keeps points whose z lies within +/- ``depth_band`` of the
    median z of all in-box points, excluding background visible through
    windows or around the box edges.
    """
    if depth_band <= 0:
        raise ValueError(f"depth_band must be positive, got {depth_band}")
    idx = box_point_indices(cloud, box)
    if len(idx) == 0:
        raise EmptySegment(f"no valid-depth points inside {box}")
    z = cloud.points[idx, 2]
    median = np.median(z)
    return idx[np.abs(z - median) <= depth_band]


def translate_points(
    cloud: PointCloud,
    indices: np.ndarray,
    shift: tuple[float, float, float],
    min_z: float = MIN_Z,
) -> PointCloud:
    """Return a copy of the cloud with the selected points translated by ``shift``.

    Colors and source pixels are untouched. Raises DegenerateShift if any
    moved point would end up with z <= min_z (crossing the camera plane).
    """
    indices = np.asarray(indices, dtype=np.intp)
    if len(indices) and (indices.min() < 0 or indices.max() >= len(cloud)):
        raise IndexError("translate_points: index out of range")
    points = cloud.points.copy()
    moved = points[indices] + np.asarray(shift, dtype=np.float64)
    if len(indices) and (moved[:, 2] <= min_z).any():
        worst = float(moved[:, 2].min())
        raise DegenerateShift(
            f"shift {shift} would move a point to z={worst:.3f} <= min_z={min_z}"
        )
    points[indices] = moved
    return PointCloud(
        points=points,
        colors=cloud.colors.copy(),
        source_pixel=cloud.source_pixel.copy(),
    )


def render(
    cloud: PointCloud,
    k: CameraIntrinsics,
    fallback: np.ndarray,
    median_fill: bool = False,
) -> RenderResult:
    """Splat the cloud back to an image with nearest-depth-wins resolution.

    Each point lands on the nearest integer pixel of its projection; the
    z-buffer keeps the closest point per pixel (equal z: lower point index
    wins). Pixels that receive no point are copied from ``fallback`` and
    flagged hole_filled. ``median_fill`` optionally smooths hole pixels with
    a 3x3 median of the rendered image (off by default: it blends colors).
    """
    fallback = np.asarray(fallback)
    if fallback.shape[:2] != (k.height, k.width):
        raise DimensionMismatch(
            f"fallback {fallback.shape[:2]} vs intrinsics {(k.height, k.width)}"
        )
    h, w = k.height, k.width
    image = np.ascontiguousarray(fallback, dtype=np.uint8).copy()
    covered = np.zeros((h, w), dtype=bool)
    zbuf = np.full((h, w), np.inf, dtype=np.float64)

    if len(cloud):
        u, v, z = project(cloud.points, k)
        px = np.rint(u).astype(np.int64)
        py = np.rint(v).astype(np.int64)
        ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        px, py, z = px[ok], py[ok], z[ok]
        colors = cloud.colors[ok]
        idx = np.nonzero(ok)[0]

        flat = py * w + px
        # lexsort: primary key flat pixel, then depth, then original index
        order = np.lexsort((idx, z, flat))
        flat_sorted = flat[order]
        first = np.unique(flat_sorted, return_index=True)[1]
        winners = order[first]

        wy, wx = flat[winners] // w, flat[winners] % w
        image[wy, wx] = colors[winners]
        covered[wy, wx] = True
        zbuf[wy, wx] = z[winners]

    hole_filled = ~covered
    if median_fill and hole_filled.any():
        image = _median_fill_holes(image, hole_filled)
    return RenderResult(image=image, covered=covered, hole_filled=hole_filled, depth=zbuf)


def _median_fill_holes(image: np.ndarray, holes: np.ndarray) -> np.ndarray:
    """Replace hole pixels with the 3x3 median of the rendered image."""
    padded = np.pad(image, ((1, 1), (1, 1), (0, 0)), mode="edge")
    stack = [
        padded[dy:dy + image.shape[0], dx:dx + image.shape[1]]
        for dy in range(3)
        for dx in range(3)
    ]
    med = np.median(np.stack(stack, axis=0), axis=0).astype(np.uint8)
    out = image.copy()
    out[holes] = med[holes]
    return out


def dump_cloud_ascii(cloud: PointCloud, path: str | Path) -> None:
    """Debug export: one ``x y z r g b`` line per point."""
    with open(path, "w") as fh:
        for (x, y, z), (r, g, b) in zip(cloud.points, cloud.colors):
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}\n")
