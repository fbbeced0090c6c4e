"""How much of the sphere do phone cameras actually see?

Walks through the observation-coverage metric: single frusta against the
analytic solid angle, dual-camera setups against front-only, and a guided
+-30 degree sweep of back-camera frames.
"""

# %%
import numpy as np

from envlight import geometry, metrics
from envlight.geometry import DevicePose, camera_pose, intrinsics_from_fov

N = 200_000


def analytic_fraction(intr):
    a = np.radians(intr.h_fov_deg) / 2
    b = np.radians(intr.v_fov_deg) / 2
    return 4 * np.arcsin(np.sin(a) * np.sin(b)) / (4 * np.pi)


# %% single frusta vs the closed-form solid angle
print("single-frustum coverage (Monte Carlo vs analytic):")
for h_fov in (70.0, 75.0, 120.0):
    intr = intrinsics_from_fov(h_fov, 640, 480)
    mc = metrics.coverage([(intr, DevicePose())], n=N).fraction
    print(f"  {h_fov:5.0f} deg x {intr.v_fov_deg:6.2f} deg: "
          f"MC {mc * 100:5.2f}%  analytic {analytic_fraction(intr) * 100:5.2f}%")

# %% dual-camera setups: the back camera multiplies what the front sees
front = intrinsics_from_fov(70.0, 640, 480)
front_pose = camera_pose(DevicePose(), geometry.FRONT)
setups = {
    "front70 only": [(front, front_pose)],
    "front70 + back75": [(front, front_pose),
                         (intrinsics_from_fov(75.0, 640, 480), DevicePose())],
    "front70 + back120": [(front, front_pose),
                          (intrinsics_from_fov(120.0, 640, 480), DevicePose())],
}
base = None
print("\ndual-camera setups:")
for name, frusta in setups.items():
    frac = metrics.coverage(frusta, n=N).fraction
    base = base or frac
    print(f"  {name:18s}: {frac * 100:5.2f}%   ({frac / base:.2f}x front-only)")

# %% sweeping the back camera: three ultrawide frames along a +-30 deg arc
sweep = [(intrinsics_from_fov(120.0, 640, 480), DevicePose(geometry.rot_y(a)))
         for a in (-30.0, 0.0, 30.0)]
one = metrics.coverage(sweep[1:2], n=N).fraction
three = metrics.coverage(sweep, n=N).fraction
print(f"\nback120 sweep: one frame {one * 100:.2f}%, "
      f"three frames {three * 100:.2f}% ({three / one:.2f}x)")

# %% an angular tolerance (dilation) grows every region before counting
for d in (0.0, 5.0, 10.0):
    frac = metrics.coverage(sweep, n=N, dilation_deg=d).fraction
    print(f"  dilation {d:4.1f} deg -> {frac * 100:5.2f}%")
