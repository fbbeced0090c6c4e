"""Observation coverage over uniformly sampled sphere directions, PSNR/SSIM
image quality, and light-probe rendering for cross-setup comparisons.

Coverage uses a deterministic Fibonacci-sphere lattice, so reports are
bit-stable for a given sample count. SSIM is computed on Rec.601 luma with
uniform 8x8 windows at stride 4 and constants K1=0.01, K2=0.03 over a unit
dynamic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .envmap import EnvironmentMap, sample_envmap
from .geometry import CameraIntrinsics, DevicePose

MIRROR = "mirror"
DIFFUSE = "diffuse"

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class CoverageReport:
    fraction: float
    n_samples: int
    dilation_deg: float = 0.0
    per_camera: dict[str, float] = field(default_factory=dict)


@dataclass
class QualityReport:
    psnr_db: float
    ssim: float


# ---------------------------------------------------------------------------
# Direction sampling and coverage
# ---------------------------------------------------------------------------

def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, near-uniform lattice of n unit directions."""
    if n < 1:
        raise ValueError("need at least one sample")
    i = np.arange(n, dtype=np.float64)
    y = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(1.0 - y * y, 0.0))
    phi = i * (np.pi * (3.0 - np.sqrt(5.0)))
    return np.stack([np.cos(phi) * r, y, np.sin(phi) * r], axis=-1)


def coverage(frusta, n: int = 100_000, dilation_deg: float = 0.0,
             labels=None) -> CoverageReport:
    """Fraction of n lattice directions inside any of the given frusta.

    `frusta` is a list of (CameraIntrinsics, DevicePose) with the pose being
    the camera pose (forward -z). With dilation_deg > 0 a direction also
    counts when it lies within that angle of a covered direction.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    dirs = fibonacci_sphere(n)
    frusta = list(frusta)
    if labels is None:
        labels = [f"cam{i}" for i in range(len(frusta))]
    covered = np.zeros(n, dtype=bool)
    per_label: dict[str, np.ndarray] = {}
    for label, (intr, pose) in zip(labels, frusta):
        _, vis = geometry.project_directions(intr, pose, dirs)
        covered |= vis
        per_label[label] = per_label.get(label, False) | vis
    per_camera = {label: float(mask.mean()) for label, mask in per_label.items()}
    if dilation_deg > 0.0 and covered.any() and not covered.all():
        from scipy.spatial import cKDTree
        chord = 2.0 * math.sin(math.radians(dilation_deg) / 2.0)
        tree = cKDTree(dirs[covered])
        dist, _ = tree.query(dirs[~covered], k=1, distance_upper_bound=chord * 1.0000001)
        grown = covered.copy()
        grown[np.flatnonzero(~covered)[np.isfinite(dist)]] = True
        covered = grown
    return CoverageReport(fraction=float(covered.mean()), n_samples=n,
                          dilation_deg=dilation_deg, per_camera=per_camera)


def coverage_of_envmap(env: EnvironmentMap, n: int = 100_000) -> CoverageReport:
    """Coverage metric applied to a reconstructed map: a direction counts as
    observed iff its nearest texel is observed."""
    dirs = fibonacci_sphere(n)
    u, v = geometry.dir_to_equirect(dirs)
    jj = np.minimum((u * env.width_px).astype(np.int64), env.width_px - 1)
    ii = np.minimum((v * env.height_px).astype(np.int64), env.height_px - 1)
    hit = env.observed[ii, jj]
    per_camera = {}
    codes = env.written_by[ii, jj]
    for cam_id, code in (("front", 1), ("back_wide", 2), ("back_ultrawide", 3)):
        frac = float((codes == code).mean())
        if frac > 0.0:
            per_camera[cam_id] = frac
    return CoverageReport(fraction=float(hit.mean()), n_samples=n,
                          per_camera=per_camera)


# ---------------------------------------------------------------------------
# Image quality
# ---------------------------------------------------------------------------

def psnr(a, b, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over all channels; inf when equal."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(max_val * max_val / mse))


def _to_luma(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return img @ _LUMA if img.ndim == 3 else img


def ssim(a, b, window: int = 8, stride: int = 4,
         k1: float = 0.01, k2: float = 0.03, dynamic_range: float = 1.0) -> float:
    """Mean local SSIM on luma with uniform square windows."""
    la, lb = _to_luma(a), _to_luma(b)
    if la.shape != lb.shape:
        raise ValueError(f"shape mismatch: {la.shape} vs {lb.shape}")
    h, w = la.shape
    if min(h, w) < window:
        raise ValueError(f"image {w}x{h} smaller than the {window}px window")
    va = np.lib.stride_tricks.sliding_window_view(la, (window, window))[::stride, ::stride]
    vb = np.lib.stride_tricks.sliding_window_view(lb, (window, window))[::stride, ::stride]
    mu_a = va.mean(axis=(-2, -1))
    mu_b = vb.mean(axis=(-2, -1))
    var_a = (va * va).mean(axis=(-2, -1)) - mu_a * mu_a
    var_b = (vb * vb).mean(axis=(-2, -1)) - mu_b * mu_b
    cov = (va * vb).mean(axis=(-2, -1)) - mu_a * mu_b
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
         / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(s.mean())


# ---------------------------------------------------------------------------
# Probe rendering
# ---------------------------------------------------------------------------

def _probe_normals(res_px: int, view_dir):
    """Unit normals of an orthographically viewed sphere plus the disc mask."""
    if res_px < 16:
        raise ValueError("probe resolution must be >= 16")
    view = geometry.unit(np.asarray(view_dir, dtype=float))
    toward_eye = -view
    up_hint = np.array([0.0, 1.0, 0.0])
    if abs(toward_eye @ up_hint) > 0.999:
        up_hint = np.array([0.0, 0.0, 1.0])
    right = geometry.unit(np.cross(up_hint, toward_eye))
    up = np.cross(toward_eye, right)
    t = (np.arange(res_px) + 0.5) / res_px * 2.0 - 1.0
    gx, gy = np.meshgrid(t, t)
    gy = -gy  # +y up in the image
    rr = gx * gx + gy * gy
    inside = rr <= 1.0
    gz = np.sqrt(np.maximum(1.0 - rr, 0.0))
    normals = (gx[..., None] * right + gy[..., None] * up
               + gz[..., None] * toward_eye)
    return normals, inside, view


def render_probe(env: EnvironmentMap, material: str = MIRROR,
                 res_px: int = 128, view_dir=(0.0, 0.0, -1.0)) -> np.ndarray:
    """Orthographic probe-sphere render under the environment map.

    mirror: env sampled along the view ray reflected at the sphere normal
    (values in the map's own encoded space). diffuse: Lambertian radiance
    from the band-2 SH irradiance of the map, albedo 1, re-encoded to match.
    Pixels outside the disc are black.
    """
    normals, inside, view = _probe_normals(res_px, view_dir)
    out = np.zeros((res_px, res_px, 3), dtype=np.float64)
    if material == MIRROR:
        refl = view - 2.0 * (normals @ view)[..., None] * normals
        refl /= np.linalg.norm(refl, axis=-1, keepdims=True)
        out[inside] = sample_envmap(env, refl[inside])
    elif material == DIFFUSE:
        from . import lighting
        coeffs = lighting.fit_sh(env)
        irr = lighting.sh_irradiance(coeffs, normals[inside]) / np.pi
        from .image_io import encode_gamma
        out[inside] = encode_gamma(irr)
    else:
        raise ValueError(f"unknown probe material {material!r}")
    return out
