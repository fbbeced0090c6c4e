"""Shared helpers for the test suite."""

import numpy as np

from envlight import envmap as em
from envlight import geometry, image_io


def constant_frame(color, intr, pose, camera_id=geometry.BACK_WIDE, t_ms=1):
    pixels = np.empty((intr.height_px, intr.width_px, 3), dtype=np.float32)
    pixels[:] = np.asarray(color, dtype=np.float32)
    return em.Frame(pixels=pixels, intrinsics=intr, pose=pose,
                    camera_id=camera_id, timestamp_ms=t_ms)


def env_from_truth(truth, height, exposure=1.0):
    """Fully observed environment map holding the LDR-encoded ground truth."""
    env = em.EnvironmentMap.empty(height)
    radiance = em.sample_equirect(truth, em.texel_directions(env))
    env.texels = image_io.encode_gamma(radiance * exposure).astype(np.float32)
    env.observed[:] = True
    env.updated_at[:] = 1
    env.written_by[:] = 2
    return env


def encoded_truth_at_texels(truth, env, exposure=1.0):
    """Ground truth pushed through the LDR pipeline, sampled at texel centers."""
    radiance = em.sample_equirect(truth, em.texel_directions(env))
    return image_io.encode_gamma(radiance * exposure)


def masked_psnr(a, b, mask):
    err = (np.asarray(a, dtype=np.float64)[mask]
           - np.asarray(b, dtype=np.float64)[mask]) ** 2
    mse = err.mean()
    return float("inf") if mse == 0 else float(10.0 * np.log10(1.0 / mse))


def rectangular_solid_angle(h_fov_deg, v_fov_deg):
    """Analytic solid angle of a rectangular frustum (independent oracle)."""
    a = np.radians(h_fov_deg) / 2.0
    b = np.radians(v_fov_deg) / 2.0
    return 4.0 * np.arcsin(np.sin(a) * np.sin(b))
