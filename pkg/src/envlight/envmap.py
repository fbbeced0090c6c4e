"""LDR equirectangular environment maps: gathering camera frames into them,
merging multi-frame observations, and sampling them for rendering.

Texels store gamma-encoded LDR values in [0,1] (the same encoding camera
frames carry); unobserved texels hold the black fill until the lighting
module completes them. Projection is gather-based: we iterate env texels,
project each texel's center direction into the frame, and bilinearly sample
the frame there, which is hole-free by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import geometry
from .geometry import CameraIntrinsics, DevicePose

NEWEST_WINS = "newest_wins"
CURRENT_ONLY = "current_only"

# per-texel provenance codes
CAM_NONE = 0
CAMERA_CODE = {geometry.FRONT: 1, geometry.BACK_WIDE: 2, geometry.BACK_ULTRAWIDE: 3}


class InsufficientOverlapError(ValueError):
    """Raised when pose refinement has too little observed map to match against."""


@dataclass(eq=False)
class Frame:
    """One camera image: pixels are gamma-encoded LDR RGB in [0,1].

    `pose` is the device pose; the camera mounting (front looks along local
    +z, back cameras along local -z) is resolved from `camera_id`.
    """

    pixels: np.ndarray
    intrinsics: CameraIntrinsics
    pose: DevicePose
    camera_id: str
    timestamp_ms: int

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if (h, w) != (self.intrinsics.height_px, self.intrinsics.width_px):
            raise ValueError(f"pixel buffer {w}x{h} does not match intrinsics "
                             f"{self.intrinsics.width_px}x{self.intrinsics.height_px}")
        if self.camera_id not in geometry.CAMERA_IDS:
            raise ValueError(f"unknown camera id {self.camera_id!r}")

    @property
    def camera_pose(self) -> DevicePose:
        return geometry.camera_pose(self.pose, self.camera_id)


@dataclass(eq=False)
class EnvironmentMap:
    """Equirectangular LDR map with per-texel observation state."""

    texels: np.ndarray        # (H, 2H, 3) float32, gamma-encoded LDR
    observed: np.ndarray      # (H, 2H) bool
    updated_at: np.ndarray    # (H, 2H) int64 ms, 0 = never
    written_by: np.ndarray    # (H, 2H) uint8 camera code

    def __post_init__(self):
        h, w = self.texels.shape[:2]
        if w != 2 * h:
            raise ValueError(f"environment map must be 2:1, got {w}x{h}")

    @classmethod
    def empty(cls, height_px: int = 256) -> "EnvironmentMap":
        h, w = int(height_px), 2 * int(height_px)
        return cls(texels=np.zeros((h, w, 3), dtype=np.float32),
                   observed=np.zeros((h, w), dtype=bool),
                   updated_at=np.zeros((h, w), dtype=np.int64),
                   written_by=np.zeros((h, w), dtype=np.uint8))

    @property
    def height_px(self) -> int:
        return self.texels.shape[0]

    @property
    def width_px(self) -> int:
        return self.texels.shape[1]

    def copy(self) -> "EnvironmentMap":
        return EnvironmentMap(self.texels.copy(), self.observed.copy(),
                              self.updated_at.copy(), self.written_by.copy())


@lru_cache(maxsize=8)
def _texel_grid(height: int, width: int):
    """Cached (H, W, 3) unit directions of texel centers plus solid angles."""
    i = np.arange(height)
    j = np.arange(width)
    u = (j + 0.5) / width
    v = (i + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    dirs = geometry.equirect_to_dir(uu, vv)
    # solid angle of an equirect texel: dphi * (cos(theta0) - cos(theta1))
    theta0 = i / height * np.pi
    theta1 = (i + 1) / height * np.pi
    band = (np.cos(theta0) - np.cos(theta1)) * (2.0 * np.pi / width)
    omega = np.broadcast_to(band[:, None], (height, width)).copy()
    dirs.setflags(write=False)
    omega.setflags(write=False)
    return dirs, omega


def texel_directions(env: EnvironmentMap) -> np.ndarray:
    return _texel_grid(env.height_px, env.width_px)[0]


def texel_solid_angles(env: EnvironmentMap) -> np.ndarray:
    return _texel_grid(env.height_px, env.width_px)[1]


def observed_fraction(env: EnvironmentMap) -> float:
    """Solid-angle-weighted fraction of the sphere marked observed."""
    omega = texel_solid_angles(env)
    return float(omega[env.observed].sum() / (4.0 * np.pi))


# ---------------------------------------------------------------------------
# Bilinear samplers
# ---------------------------------------------------------------------------

def _sample_image(img: np.ndarray, x, y) -> np.ndarray:
    """Bilinear sample of an (H, W, C) image at continuous pixel-edge coords
    (x in [0, W], y in [0, H]); borders clamp."""
    h, w = img.shape[:2]
    fx = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1.0)
    fy = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = (fx - x0)[..., None]
    ay = (fy - y0)[..., None]
    top = img[y0, x0] * (1.0 - ax) + img[y0, x1] * ax
    bot = img[y1, x0] * (1.0 - ax) + img[y1, x1] * ax
    return top * (1.0 - ay) + bot * ay


def sample_equirect(img: np.ndarray, dirs) -> np.ndarray:
    """Bilinear sample of any equirect image along unit directions, with
    horizontal wrap-around and vertical clamp."""
    h, w = img.shape[:2]
    u, v = geometry.dir_to_equirect(dirs)
    fx = u * w - 0.5
    fy = np.clip(v * h - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    ax = (fx - x0)[..., None] if img.ndim == 3 else (fx - x0)
    ay = (fy - y0)[..., None] if img.ndim == 3 else (fy - y0)
    x0 %= w
    x1 = (x0 + 1) % w
    y1 = np.minimum(y0 + 1, h - 1)
    top = img[y0, x0] * (1.0 - ax) + img[y0, x1] * ax
    bot = img[y1, x0] * (1.0 - ax) + img[y1, x1] * ax
    return top * (1.0 - ay) + bot * ay


def sample_envmap(env: EnvironmentMap, dirs) -> np.ndarray:
    """RGB at unit direction(s); unobserved texels contribute their stored
    (fill or completed) values."""
    return sample_equirect(env.texels, dirs)


# ---------------------------------------------------------------------------
# Projection and merging
# ---------------------------------------------------------------------------

def _project_into(env: EnvironmentMap, frame: Frame, writable: np.ndarray | None = None) -> None:
    """Gather the frame into `env` in place, restricted to `writable` texels."""
    dirs = texel_directions(env)
    px, vis = geometry.project_directions(frame.intrinsics, frame.camera_pose, dirs)
    if writable is not None:
        vis = vis & writable
    if not vis.any():
        return
    values = _sample_image(frame.pixels, px[vis, 0], px[vis, 1])
    env.texels[vis] = values.astype(env.texels.dtype)
    env.observed[vis] = True
    env.updated_at[vis] = frame.timestamp_ms
    env.written_by[vis] = CAMERA_CODE[frame.camera_id]


def _overwrite_mask(env: EnvironmentMap, frame: Frame) -> np.ndarray:
    ts = frame.timestamp_ms
    newer = env.updated_at < ts
    same = env.updated_at == ts
    if frame.camera_id == geometry.FRONT:
        # at equal timestamps the back cameras win (they carry the environment)
        same &= env.written_by <= CAMERA_CODE[geometry.FRONT]
    return ~env.observed | newer | same


def project_frame(env: EnvironmentMap, frame: Frame) -> EnvironmentMap:
    """New map with every texel visible in the frame set from it.

    Visibility is the texel center passing `direction_to_pixel`; values come
    from bilinear samples of the frame. Texels outside the frustum are
    untouched.
    """
    out = env.copy()
    _project_into(out, frame, _overwrite_mask(out, frame))
    return out


def merge_frame(env: EnvironmentMap, frame: Frame, mode: str = NEWEST_WINS) -> EnvironmentMap:
    """Merge one frame under the given policy.

    newest_wins: plain projection, newer data overwriting older texels
    (used for back-camera frames).

    current_only: texels written by an older front frame are cleared first,
    so only the current front frame ever contributes (head pose and facial
    expression changes make stale front data unreliable).
    """
    if mode not in (NEWEST_WINS, CURRENT_ONLY):
        raise ValueError(f"unknown merge mode {mode!r}")
    out = env.copy()
    if mode == CURRENT_ONLY:
        stale = ((out.written_by == CAMERA_CODE[geometry.FRONT])
                 & (out.updated_at < frame.timestamp_ms))
        out.texels[stale] = 0.0
        out.observed[stale] = False
        out.updated_at[stale] = 0
        out.written_by[stale] = CAM_NONE
    _project_into(out, frame, _overwrite_mask(out, frame))
    return out


# ---------------------------------------------------------------------------
# Pose refinement
# ---------------------------------------------------------------------------

_LUMA = np.array([0.299, 0.587, 0.114])


def _frame_sample_grid(frame: Frame, target_points: int = 1500):
    """Coarse grid of pixel centers plus camera-local rays and luma values."""
    h, w = frame.intrinsics.height_px, frame.intrinsics.width_px
    step = max(1, int(round(np.sqrt(w * h / target_points))))
    xs = np.arange(step // 2, w, step) + 0.5
    ys = np.arange(step // 2, h, step) + 0.5
    gx, gy = np.meshgrid(np.minimum(xs, w - 0.5), np.minimum(ys, h - 0.5))
    px = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    xn = (2.0 * px[:, 0] / w - 1.0) * frame.intrinsics.tan_half_h
    yn = (1.0 - 2.0 * px[:, 1] / h) * frame.intrinsics.tan_half_v
    rays = np.stack([xn, yn, -np.ones_like(xn)], axis=-1)
    rays /= np.linalg.norm(rays, axis=-1, keepdims=True)
    luma = _sample_image(frame.pixels, px[:, 0], px[:, 1]) @ _LUMA
    return rays, luma


def refine_pose(env: EnvironmentMap, frame: Frame,
                search_deg: float, grid_step_deg: float) -> DevicePose:
    """Best pose over a yaw/pitch/roll offset grid applied to frame.pose.

    Scores zero-mean normalized cross-correlation between the frame and the
    already-observed map; ties break toward the smallest offset magnitude,
    then lexicographic (yaw, pitch, roll). Degenerate texture (NCC undefined
    everywhere) returns the nominal pose.
    """
    if search_deg <= 0 or grid_step_deg <= 0:
        raise ValueError("search_deg and grid_step_deg must be positive")
    rays, frame_luma = _frame_sample_grid(frame)
    env_luma = env.texels.astype(np.float64) @ _LUMA
    base = frame.pose.rotation
    mount = geometry.camera_pose(DevicePose(), frame.camera_id).rotation

    # overlap precondition under the nominal pose
    world = rays @ (base @ mount).T
    u, v = geometry.dir_to_equirect(world)
    jj = np.minimum((u * env.width_px).astype(np.int64), env.width_px - 1)
    ii = np.minimum((v * env.height_px).astype(np.int64), env.height_px - 1)
    if env.observed[ii, jj].mean() < 0.01:
        raise InsufficientOverlapError(
            "less than 1% of the frame frustum overlaps observed texels")

    n = int(np.floor(search_deg / grid_step_deg + 1e-9))
    offsets_1d = np.concatenate([[0.0], np.arange(1, n + 1) * grid_step_deg])
    offsets_1d = np.concatenate([offsets_1d, -offsets_1d[1:]])
    grid = np.array([(y, p, r)
                     for y in offsets_1d for p in offsets_1d for r in offsets_1d])
    order = np.lexsort((grid[:, 2], grid[:, 1], grid[:, 0],
                        (grid ** 2).sum(axis=1)))
    grid = grid[order]

    best_score = -np.inf
    best = None
    for yaw, pitch, roll in grid:
        rot = base @ geometry.rotation_from_ypr(yaw, pitch, roll) @ mount
        world = rays @ rot.T
        u, v = geometry.dir_to_equirect(world)
        jj = np.minimum((u * env.width_px).astype(np.int64), env.width_px - 1)
        ii = np.minimum((v * env.height_px).astype(np.int64), env.height_px - 1)
        ok = env.observed[ii, jj]
        if ok.sum() < 16:
            continue
        a = frame_luma[ok]
        b = env_luma[ii[ok], jj[ok]]
        sa, sb = a.std(), b.std()
        if sa < 1e-9 or sb < 1e-9:
            continue
        score = float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))
        if score > best_score:
            best_score = score
            best = (yaw, pitch, roll)

    if best is None:
        return frame.pose
    offset = geometry.rotation_from_ypr(*best)
    return DevicePose(frame.pose.rotation @ offset, frame.pose.position)
