import numpy as np
import pytest

from hazaug.geometry import CameraIntrinsics

# KITTI 2011_09_26 camera 02 rectified calibration (public devkit values)
KITTI_CALIB_TEXT = """\
calib_time: 09-Jan-2012 13:57:47
corner_dist: 9.950000e-02
S_rect_02: 1.242000e+03 3.750000e+02
R_rect_02: 9.998817e-01 1.511453e-02 -2.841595e-03 -1.511724e-02 9.998853e-01 -9.338510e-04 2.827154e-03 9.766976e-04 9.999955e-01
P_rect_02: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
S_rect_03: 1.242000e+03 3.750000e+02
P_rect_03: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 1.728540e+02 2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03
"""


@pytest.fixture(scope="session")
def kitti_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=721.5377, fy=721.5377, cx=609.5593, cy=172.854, width=1242, height=375
    )


def make_plate_scene(
    k: CameraIntrinsics,
    plate_depth: float,
    plate_half_width: float = 1.0,
    plate_half_height: float = 0.75,
    background_depth: float = 30.0,
    plate_color=(220, 40, 40),
    background_color=(90, 90, 90),
):
    """Fronto-parallel plate centered on the principal axis over a flat backdrop.

    Returns (image, depth_grid, valid, plate_pixel_mask). Analytic: the plate
    covers pixels whose ray hits |x| <= half_width, |y| <= half_height at the
    plate depth.
    """
    h, w = k.height, k.width
    uu = np.arange(w, dtype=np.float64)[None, :]
    vv = np.arange(h, dtype=np.float64)[:, None]
    x = (uu - k.cx) / k.fx * plate_depth
    y = (vv - k.cy) / k.fy * plate_depth
    on_plate = (np.abs(x) <= plate_half_width) & (np.abs(y) <= plate_half_height)

    depth = np.full((h, w), background_depth, dtype=np.float64)
    depth[on_plate] = plate_depth
    image = np.zeros((h, w, 3), dtype=np.uint8)
    image[:] = background_color
    image[on_plate] = plate_color
    valid = np.ones((h, w), dtype=bool)
    return image, depth, valid, on_plate


def write_plate_corpus(root, frames, k=None):
    """KITTI-layout corpus of plate scenes; ``frames`` maps stem -> scene args.

    Each value is a dict with plate_depth, speed, accel, and optional
    plate_half_width. Detection boxes are the analytic plate extents.
    """
    import json

    from hazaug.geometry import CameraIntrinsics, DepthMap
    from hazaug.kitti import save_depth_map, save_image

    if k is None:
        k = CameraIntrinsics(fx=240.0, fy=240.0, cx=203.0, cy=57.6,
                             width=414, height=125)
    root.mkdir(parents=True, exist_ok=True)
    p = [k.fx, 0.0, k.cx, 0.0, 0.0, k.fy, k.cy, 0.0, 0.0, 0.0, 1.0, 0.0]
    (root / "calib_cam_to_cam.txt").write_text(
        f"S_rect_02: {k.width} {k.height}\n"
        "P_rect_02: " + " ".join(str(x) for x in p) + "\n"
    )
    seq = root / "drive_plate"
    for tree in ("image_02", "oxts", "depth", "detections"):
        (seq / tree / "data").mkdir(parents=True, exist_ok=True)

    for stem, args in frames.items():
        z = args["plate_depth"]
        hw = args.get("plate_half_width", 1.0)
        hh = args.get("plate_half_height", 0.75)
        image, depth, valid, _ = make_plate_scene(
            k, z, plate_half_width=hw, plate_half_height=hh
        )
        save_image(image, seq / "image_02" / "data" / f"{stem}.png")
        save_depth_map(DepthMap(depth, valid),
                       seq / "depth" / "data" / f"{stem}.png", 1 / 256)
        box = {
            "x1": k.cx - k.fx * hw / z, "y1": k.cy - k.fy * hh / z,
            "x2": k.cx + k.fx * hw / z, "y2": k.cy + k.fy * hh / z,
            "conf": 0.9, "cls": 2,
        }
        (seq / "detections" / "data" / f"{stem}.json").write_text(
            json.dumps([box] if args.get("detect", True) else [])
        )
        tokens = ["0"] * 30
        tokens[8] = str(args.get("speed", 10.0))
        tokens[14] = str(args.get("accel", -2.0))
        (seq / "oxts" / "data" / f"{stem}.txt").write_text(" ".join(tokens))
    return k
