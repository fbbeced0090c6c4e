"""From a partial LDR map to parametric lights and a completed panorama.

Builds a half-observed environment map, estimates the dominant directional
light / ambient color / order-2 SH, fills the unseen half from the SH
expansion, and compares mirror-probe renders of the black-filled and
completed maps against the ground-truth probe.

Writes probe and panorama PPMs into demos/out/.
"""

# %%
import os

import numpy as np

from envlight import envmap as em, geometry, image_io, lighting, metrics, scenes
from envlight.envmap import EnvironmentMap

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)

truth = scenes.room_scene(256, seed=12)
full = EnvironmentMap.empty(256)
full.texels = image_io.encode_gamma(
    em.sample_equirect(np.clip(truth, 0, 1), em.texel_directions(full))
).astype(np.float32)
full.observed[:] = True

# observe only the backward-facing half (what a short capture might give)
partial = full.copy()
partial.observed[:] = False
partial.observed[:, 128:384] = True
partial.texels[~partial.observed] = 0.0

# %% parametric light estimate from the observed half
est = lighting.estimate_lights(partial)
u, v = geometry.dir_to_equirect(est.dominant_dir)
print(f"dominant light: direction ({est.dominant_dir[0]:+.2f}, "
      f"{est.dominant_dir[1]:+.2f}, {est.dominant_dir[2]:+.2f})"
      f"  [map u={u:.2f}, v={v:.2f}]")
print(f"dominant rgb (linear): {np.round(est.dominant_rgb, 3)}")
print(f"ambient  rgb (linear): {np.round(est.ambient_rgb, 3)}")
est.to_json(os.path.join(OUT, "light.json"))

# at full coverage the SH l=0 term and the ambient mean agree (both are
# solid-angle means up to the basis constant); under partial coverage the
# fit extrapolates and they legitimately drift apart
est_full = lighting.estimate_lights(full)
print(f"full-coverage consistency: ambient {np.round(est_full.ambient_rgb, 3)}"
      f" vs SH l=0 {np.round(est_full.sh_coeffs[0] * 0.28209479, 3)}")

# %% complete the unseen half from the SH expansion
completed = lighting.complete_envmap(partial, est, blend_band_deg=5.0)
image_io.write_ppm(os.path.join(OUT, "partial.ppm"), partial.texels)
image_io.write_ppm(os.path.join(OUT, "completed.ppm"), completed.texels)

ref = metrics.render_probe(full, metrics.MIRROR, 128)
for name, env in (("black-filled", partial), ("sh-completed", completed)):
    probe = metrics.render_probe(env, metrics.MIRROR, 128)
    image_io.write_ppm(os.path.join(OUT, f"probe_{name}.ppm"), probe)
    print(f"mirror probe vs truth, {name:13s}: "
          f"{metrics.psnr(ref, probe, 1.0):5.2f} dB")

diffuse = metrics.render_probe(completed, metrics.DIFFUSE, 128)
image_io.write_ppm(os.path.join(OUT, "probe_diffuse.ppm"), diffuse)
print(f"wrote panoramas and probes to {OUT}/")
