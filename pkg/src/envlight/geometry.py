"""Camera and sphere geometry: intrinsics, rotations, pinhole projection,
and the equirectangular parameterization.

Conventions (used by every module in this package):
  - World frame: right-handed, +y up, camera forward = -z, +x right.
  - Camera-local frame: same axes; the optical axis is -z.
  - Equirectangular map: u = atan2(x, -z) / 2pi + 0.5, v = acos(y) / pi,
    so (u, v) = (0.5, 0.5) is the forward direction (0, 0, -1) and v = 0
    is the +y pole (top row of the map).
  - Pixel coordinates are continuous, x in [0, width] left->right and
    y in [0, height] top->bottom; the pixel grid center (width/2, height/2)
    lies on the optical axis.
  - A phone carries its back cameras looking along local -z and the front
    (selfie) camera looking along local +z; `camera_pose` resolves a device
    pose plus camera id into the camera pose the projection math expects.

All operations are pure functions over immutable values; direction and
pixel arguments may be single vectors or arrays with a trailing axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FRONT = "front"
BACK_WIDE = "back_wide"
BACK_ULTRAWIDE = "back_ultrawide"
CAMERA_IDS = (FRONT, BACK_WIDE, BACK_ULTRAWIDE)

_UNIT_TOL = 1e-9
_ROT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------

def rot_x(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_ypr(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Yaw about +y, then pitch about +x, then roll about +z (intrinsic order)."""
    return rot_y(yaw_deg) @ rot_x(pitch_deg) @ rot_z(roll_deg)


def rotation_from_axis_angle(axis, angle_deg: float) -> np.ndarray:
    """Rodrigues rotation about `axis` (need not be unit) by `angle_deg`."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    x, y, z = axis / n
    a = np.radians(angle_deg)
    c, s = np.cos(a), np.sin(a)
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def rotation_angle_deg(ra: np.ndarray, rb: np.ndarray | None = None) -> float:
    """Geodesic angle of `ra` (or between `ra` and `rb`) in degrees."""
    r = ra if rb is None else ra.T @ rb
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def is_rotation(r: np.ndarray, tol: float = 1e-8) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    return (np.allclose(r.T @ r, np.eye(3), atol=tol)
            and abs(np.linalg.det(r) - 1.0) <= tol)


def unit(v) -> np.ndarray:
    """Normalize the trailing axis; raises on zero vectors."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics expressed as horizontal/vertical FoV plus pixel grid."""

    h_fov_deg: float
    v_fov_deg: float
    width_px: int
    height_px: int

    def __post_init__(self):
        if not (0.0 < self.h_fov_deg < 180.0 and 0.0 < self.v_fov_deg < 180.0):
            raise ValueError(f"FoV out of range (0, 180): "
                             f"{self.h_fov_deg} x {self.v_fov_deg}")
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("image dimensions must be >= 1 pixel")

    @property
    def tan_half_h(self) -> float:
        return np.tan(np.radians(self.h_fov_deg) / 2.0)

    @property
    def tan_half_v(self) -> float:
        return np.tan(np.radians(self.v_fov_deg) / 2.0)


def intrinsics_from_fov(h_fov_deg: float, width_px: int, height_px: int) -> CameraIntrinsics:
    """Intrinsics from a horizontal FoV, with the vertical FoV implied by the
    aspect ratio: v = 2*atan((height/width) * tan(h/2))."""
    if not 0.0 < h_fov_deg < 180.0:
        raise ValueError(f"horizontal FoV must be in (0, 180), got {h_fov_deg}")
    if width_px < 1 or height_px < 1:
        raise ValueError("image dimensions must be >= 1 pixel")
    v = 2.0 * np.arctan((height_px / width_px) * np.tan(np.radians(h_fov_deg) / 2.0))
    return CameraIntrinsics(h_fov_deg=float(h_fov_deg), v_fov_deg=float(np.degrees(v)),
                            width_px=int(width_px), height_px=int(height_px))


@dataclass(frozen=True, eq=False)
class DevicePose:
    """Orientation plus a bookkeeping position.

    Projection reads only `rotation`: every camera is treated as rotating
    about a single shared origin, so `position` exists purely for trajectory
    bookkeeping (arm sweeps, IMU plots).
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        p = np.asarray(self.position, dtype=float).reshape(3)
        if not is_rotation(r, tol=1e-7):
            raise ValueError("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "position", p)


IDENTITY_POSE = DevicePose()

# Front camera looks out the screen side; a 180 deg yaw maps local -z to +z.
_FRONT_FLIP = rot_y(180.0)


def camera_pose(pose: DevicePose, camera_id: str) -> DevicePose:
    """Camera pose (forward = -z) for one of the device's cameras."""
    if camera_id not in CAMERA_IDS:
        raise ValueError(f"unknown camera id {camera_id!r}")
    if camera_id == FRONT:
        return DevicePose(pose.rotation @ _FRONT_FLIP, pose.position)
    return pose


# ---------------------------------------------------------------------------
# Pinhole projection
# ---------------------------------------------------------------------------

def pixel_to_direction(intr: CameraIntrinsics, pose: DevicePose, px) -> np.ndarray:
    """World-space unit direction through continuous pixel coords `px`.

    `px` is (..., 2); the result is (..., 3). Coordinates outside
    [0, width] x [0, height] raise ValueError.
    """
    px = np.asarray(px, dtype=float)
    x, y = px[..., 0], px[..., 1]
    if np.any(x < 0) or np.any(x > intr.width_px) or np.any(y < 0) or np.any(y > intr.height_px):
        raise ValueError("pixel coordinates outside the image")
    xn = (2.0 * x / intr.width_px - 1.0) * intr.tan_half_h
    yn = (1.0 - 2.0 * y / intr.height_px) * intr.tan_half_v
    d = np.stack([xn, yn, -np.ones_like(xn)], axis=-1)
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return d @ pose.rotation.T


def project_directions(intr: CameraIntrinsics, pose: DevicePose, dirs):
    """Vectorized pinhole projection.

    Returns `(px, visible)`: pixel coords (..., 2) and a boolean mask; pixel
    values where `visible` is False are meaningless.
    """
    dirs = np.asarray(dirs, dtype=float)
    cam = dirs @ pose.rotation  # R^T applied to each row
    z = cam[..., 2]
    front = z < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        xn = np.where(front, cam[..., 0] / -z, 0.0)
        yn = np.where(front, cam[..., 1] / -z, 0.0)
    px = np.stack([(xn / intr.tan_half_h + 1.0) * (intr.width_px / 2.0),
                   (1.0 - yn / intr.tan_half_v) * (intr.height_px / 2.0)], axis=-1)
    visible = (front
               & (px[..., 0] >= 0.0) & (px[..., 0] <= intr.width_px)
               & (px[..., 1] >= 0.0) & (px[..., 1] <= intr.height_px))
    return px, visible


def direction_to_pixel(intr: CameraIntrinsics, pose: DevicePose, d):
    """Pixel coords for one unit direction, or None when outside the frustum."""
    d = np.asarray(d, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-6:
        raise ValueError("direction must be unit-norm")
    px, vis = project_directions(intr, pose, d[None, :])
    return px[0] if bool(vis[0]) else None


# ---------------------------------------------------------------------------
# Equirectangular mapping
# ---------------------------------------------------------------------------

def dir_to_equirect(d):
    """(u, v) in [0,1) x [0,1] for unit directions; forward maps to (0.5, 0.5)."""
    d = np.asarray(d, dtype=float)
    # +0.0 squashes IEEE negative zeros so the poles land at u = 0.5
    phi = np.arctan2(d[..., 0] + 0.0, -d[..., 2] + 0.0)
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    u = phi / (2.0 * np.pi) + 0.5
    u = np.where(u >= 1.0, u - 1.0, u)  # atan2 returns +pi occasionally
    return u, theta / np.pi


def equirect_to_dir(u, v) -> np.ndarray:
    """Inverse of dir_to_equirect; u in [0,1), v in [0,1]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u < 0.0) or np.any(u >= 1.0) or np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError("equirect coords must satisfy u in [0,1), v in [0,1]")
    phi = (u - 0.5) * 2.0 * np.pi
    theta = v * np.pi
    st = np.sin(theta)
    return np.stack([st * np.sin(phi), np.cos(theta), -st * np.cos(phi)], axis=-1)


# ---------------------------------------------------------------------------
# Guided-movement trajectory pose
# ---------------------------------------------------------------------------

def great_circle_pose(t: float, arm_length_m: float, sweep_deg: float) -> DevicePose:
    """Device pose on a horizontal arm-length arc, front camera aimed at the head.

    `t` in [0, 1] sweeps the azimuth linearly over [-sweep/2, +sweep/2];
    t = 0.5 puts the device straight ahead with an identity rotation.
    """
    if arm_length_m <= 0.0:
        raise ValueError("arm length must be positive")
    if not 0.0 < sweep_deg <= 180.0:
        raise ValueError("sweep must be in (0, 180] degrees")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must be in [0, 1]")
    az = (t - 0.5) * sweep_deg
    a = np.radians(az)
    position = arm_length_m * np.array([np.sin(a), 0.0, -np.cos(a)])
    return DevicePose(rot_y(-az), position)
