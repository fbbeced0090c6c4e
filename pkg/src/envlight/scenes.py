"""Synthetic HDR ground-truth scenes for simulation and testing.

All generators return (H, 2H, 3) float32 linear-radiance equirect maps.
Seeded generators are deterministic for a given (seed, height) pair.
"""

from __future__ import annotations

import numpy as np

from . import geometry


def _grid_dirs(height: int) -> np.ndarray:
    width = 2 * height
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    return geometry.equirect_to_dir(uu, vv)


def constant_scene(height: int, rgb=(0.25, 0.25, 0.25)) -> np.ndarray:
    out = np.empty((height, 2 * height, 3), dtype=np.float32)
    out[:] = np.asarray(rgb, dtype=np.float32)
    return out


def gradient_scene(height: int, low=0.05, high=0.9) -> np.ndarray:
    """Vertical luminance gradient with a horizontal hue ramp; straddles the
    u = 0/1 seam smoothly."""
    width = 2 * height
    v = (np.arange(height) + 0.5) / height
    u = (np.arange(width) + 0.5) / width
    lum = (low + (high - low) * (1.0 - v))[:, None]
    hue = 0.5 + 0.5 * np.sin(2.0 * np.pi * u)[None, :]
    out = np.empty((height, width, 3), dtype=np.float32)
    out[..., 0] = lum * (0.4 + 0.6 * hue)
    out[..., 1] = lum
    out[..., 2] = lum * (1.0 - 0.5 * hue)
    return out


def blob_scene(height: int, seed: int = 0, n_blobs: int = 14,
               base: float = 0.18, amplitude: float = 0.65,
               sharpness=(6.0, 28.0), n_detail: int = 40,
               detail_amplitude: float = 0.5,
               detail_sharpness=(300.0, 2000.0)) -> np.ndarray:
    """Textured scene: a dim base, smooth random spherical gaussians for the
    large-scale lighting, and a sharper detail octave that gives frames real
    structure (pose refinement and SSIM change detection need it)."""
    rng = np.random.default_rng([seed, height, 101])
    dirs = _grid_dirs(height)
    out = np.full((height, 2 * height, 3), base, dtype=np.float64)
    for _ in range(n_blobs):
        c = rng.normal(size=3)
        c /= np.linalg.norm(c)
        k = rng.uniform(*sharpness)
        color = rng.uniform(0.15, 1.0, size=3)
        w = np.exp(k * (dirs @ c - 1.0))
        out += amplitude / n_blobs * 4.0 * w[..., None] * color
    for _ in range(n_detail):
        c = rng.normal(size=3)
        c /= np.linalg.norm(c)
        k = rng.uniform(*detail_sharpness)
        color = rng.uniform(0.2, 1.0, size=3)
        w = np.exp(k * (dirs @ c - 1.0))
        out += detail_amplitude * w[..., None] * color
    return out.astype(np.float32)


def room_scene(height: int, seed: int = 0, source_cone_deg: float = 22.0,
               source_value: float = 2.5) -> np.ndarray:
    """Blob scene plus one strong light source placed within a cone around
    the back-camera forward axis (0, 0, -1), roughly an indoor lamp or window
    the front camera never sees."""
    rng = np.random.default_rng([seed, height, 545])
    out = blob_scene(height, seed=seed).astype(np.float64)
    az = rng.uniform(0.0, 2.0 * np.pi)
    tilt = np.radians(rng.uniform(3.0, source_cone_deg))
    c = np.array([np.sin(tilt) * np.cos(az), np.sin(tilt) * np.sin(az),
                  -np.cos(tilt)])
    k = rng.uniform(40.0, 120.0)
    dirs = _grid_dirs(height)
    out += source_value * np.exp(k * (dirs @ c - 1.0))[..., None]
    return out.astype(np.float32)


def disc_scene(height: int, center_dir, radius_deg: float,
               value=(1.0, 1.0, 1.0), background=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Uniform disc light of the given angular radius on a flat background."""
    dirs = _grid_dirs(height)
    c = geometry.unit(np.asarray(center_dir, dtype=float))
    inside = dirs @ c >= np.cos(np.radians(radius_deg))
    out = np.empty((height, 2 * height, 3), dtype=np.float32)
    out[:] = np.asarray(background, dtype=np.float32)
    out[inside] = np.asarray(value, dtype=np.float32)
    return out


def checkerboard_scene(height: int, squares: int = 12,
                       low: float = 0.05, high: float = 0.95) -> np.ndarray:
    """High-contrast checkerboard in (u, v); useful for SSIM/NCC stress tests."""
    width = 2 * height
    u = np.floor((np.arange(width) + 0.5) / width * 2 * squares).astype(int)
    v = np.floor((np.arange(height) + 0.5) / height * squares).astype(int)
    cell = (u[None, :] + v[:, None]) % 2
    out = np.where(cell[..., None] == 0, low, high).astype(np.float32)
    return np.ascontiguousarray(out)


def sh_scene(height: int, coeffs: np.ndarray) -> np.ndarray:
    """Scene whose radiance is exactly a band-2 spherical-harmonic expansion.

    `coeffs` is (9, 3); negative reconstruction values are clipped at zero,
    so choose coefficients that keep the expansion positive if exactness
    matters.
    """
    from .lighting import evaluate_sh  # local import to avoid a cycle
    dirs = _grid_dirs(height)
    vals = evaluate_sh(np.asarray(coeffs, dtype=float), dirs)
    return np.clip(vals, 0.0, None).astype(np.float32)
