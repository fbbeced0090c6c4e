"""Parametric lighting from partial LDR environment maps: a dominant
directional light, an ambient color, an order-2 spherical-harmonic expansion,
and SH-based completion of unseen map regions.

All lighting math runs in linear radiance: texels are decoded from their
gamma-2.2 encoding first, and the JSON-serialized colors below are linear.

The SH basis is the real orthonormal one, bands l = 0..2, ordered
(l, m) = (0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0), (2,1), (2,2).
Fitting is a solid-angle-weighted least squares over the observed texels,
which degrades gracefully under partial coverage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import image_io
from .envmap import EnvironmentMap, texel_directions, texel_solid_angles

_LUMA = np.array([0.299, 0.587, 0.114])

# band-2 irradiance convolution weights per coefficient
_IRRADIANCE_A = np.array([np.pi,
                          2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0,
                          np.pi / 4.0, np.pi / 4.0, np.pi / 4.0, np.pi / 4.0,
                          np.pi / 4.0])


class InsufficientObservationError(ValueError):
    """Raised when too little of the map has been observed to estimate from."""


def sh_basis(dirs) -> np.ndarray:
    """Evaluate the 9 basis functions at unit direction(s): (..., 9)."""
    d = np.asarray(dirs, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    return np.stack([
        np.full_like(x, 0.28209479177387814),        # 1/(2 sqrt(pi))
        0.4886025119029199 * y,
        0.4886025119029199 * z,
        0.4886025119029199 * x,
        1.0925484305920792 * x * y,
        1.0925484305920792 * y * z,
        0.31539156525252005 * (3.0 * z * z - 1.0),
        1.0925484305920792 * x * z,
        0.5462742152960396 * (x * x - y * y),
    ], axis=-1)


def evaluate_sh(coeffs: np.ndarray, dirs) -> np.ndarray:
    """Reconstruct the expansion at unit direction(s): coeffs (9, C) -> (..., C)."""
    return sh_basis(dirs) @ np.asarray(coeffs, dtype=np.float64)


def sh_irradiance(coeffs: np.ndarray, normals) -> np.ndarray:
    """Irradiance (cosine-convolved radiance) at surface normal(s)."""
    scaled = _IRRADIANCE_A[:, None] * np.asarray(coeffs, dtype=np.float64)
    return sh_basis(normals) @ scaled


def _observed_linear(env: EnvironmentMap, min_fraction: float = 0.01):
    obs = env.observed
    if obs.mean() < min_fraction:
        raise InsufficientObservationError(
            f"only {obs.mean():.2%} of texels observed, need >= {min_fraction:.0%}")
    dirs = texel_directions(env)[obs]
    omega = texel_solid_angles(env)[obs]
    linear = image_io.decode_gamma(env.texels[obs].astype(np.float64))
    return dirs, omega, linear


def fit_sh(env: EnvironmentMap) -> np.ndarray:
    """Solid-angle-weighted least-squares SH fit to the observed texels.

    Returns (9, 3) coefficients in linear radiance.
    """
    dirs, omega, linear = _observed_linear(env)
    basis = sh_basis(dirs)
    sw = np.sqrt(omega)[:, None]
    coeffs, *_ = np.linalg.lstsq(basis * sw, linear * sw, rcond=None)
    return coeffs


@dataclass
class LightEstimate:
    dominant_dir: np.ndarray   # unit vector toward the brightest source
    dominant_rgb: np.ndarray   # linear RGB of that source region
    ambient_rgb: np.ndarray    # solid-angle mean of everything observed
    sh_coeffs: np.ndarray      # (9, 3) linear-radiance SH expansion

    def to_dict(self) -> dict:
        return {"dominant_dir": [float(x) for x in self.dominant_dir],
                "dominant_rgb": [float(x) for x in self.dominant_rgb],
                "ambient_rgb": [float(x) for x in self.ambient_rgb],
                "sh": [float(x) for x in np.asarray(self.sh_coeffs).ravel()]}

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "LightEstimate":
        return cls(dominant_dir=np.array(doc["dominant_dir"], dtype=float),
                   dominant_rgb=np.array(doc["dominant_rgb"], dtype=float),
                   ambient_rgb=np.array(doc["ambient_rgb"], dtype=float),
                   sh_coeffs=np.array(doc["sh"], dtype=float).reshape(9, 3))


_TIE_BREAK_DIR = np.array([0.0, 1.0, 0.0])


def estimate_lights(env: EnvironmentMap, top_fraction: float = 0.05,
                    lum_power: float = 4.0) -> LightEstimate:
    """Analytic parametric-light estimate from the observed map region.

    The dominant direction is the normalized solid-angle-weighted sum of
    texel directions weighted by luminance**lum_power over the brightest
    `top_fraction` of observed texels; fully symmetric inputs fall back to
    +y for determinism.
    """
    dirs, omega, linear = _observed_linear(env)
    lum = linear @ _LUMA
    threshold = np.quantile(lum, 1.0 - top_fraction)
    bright = lum >= threshold
    if threshold <= 0.0:
        bright = lum > 0.0
    if not bright.any():
        bright = np.ones_like(lum, dtype=bool)

    w = omega[bright] * lum[bright] ** lum_power
    vec = (w[:, None] * dirs[bright]).sum(axis=0)
    norm = np.linalg.norm(vec)
    dominant_dir = vec / norm if norm > 1e-12 else _TIE_BREAK_DIR.copy()

    w_sa = omega[bright]
    dominant_rgb = (w_sa[:, None] * linear[bright]).sum(axis=0) / w_sa.sum()
    ambient_rgb = (omega[:, None] * linear).sum(axis=0) / omega.sum()
    return LightEstimate(dominant_dir=dominant_dir,
                         dominant_rgb=np.clip(dominant_rgb, 0.0, None),
                         ambient_rgb=np.clip(ambient_rgb, 0.0, None),
                         sh_coeffs=fit_sh(env))


def complete_envmap(env: EnvironmentMap, est: LightEstimate,
                    blend_band_deg: float = 5.0) -> EnvironmentMap:
    """Fill unobserved texels from the SH reconstruction.

    Observed texels are untouched (bit-exact) and the observed mask is left
    unchanged - the fill is synthetic, not an observation. Unobserved texels
    within `blend_band_deg` of the observed region blend linearly from the
    nearest observed color into the SH fill to hide the seam.
    """
    out = env.copy()
    holes = ~env.observed
    if not holes.any():
        return out
    dirs = texel_directions(env)
    fill_linear = np.clip(evaluate_sh(est.sh_coeffs, dirs[holes]), 0.0, 1.0)

    if blend_band_deg > 0.0 and env.observed.any():
        from scipy import ndimage
        h, w = env.observed.shape
        # angular texel pitch; horizontal distances stretch toward the poles,
        # which only widens the seam band there
        sampling = (180.0 / h, 360.0 / w)
        tiled = np.tile(holes, (1, 3))
        dist, (src_i, src_j) = ndimage.distance_transform_edt(
            tiled, sampling=sampling, return_indices=True)
        sl = slice(w, 2 * w)
        dist = dist[:, sl]
        near_i, near_j = src_i[:, sl], src_j[:, sl] % w
        alpha = np.clip(dist[holes] / blend_band_deg, 0.0, 1.0)[:, None]
        seam_linear = image_io.decode_gamma(
            env.texels[near_i[holes], near_j[holes]].astype(np.float64))
        fill_linear = (1.0 - alpha) * seam_linear + alpha * fill_linear

    out.texels[holes] = image_io.encode_gamma(fill_linear).astype(out.texels.dtype)
    return out
