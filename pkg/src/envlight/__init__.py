"""envlight: reconstruct LDR equirectangular environment maps from simulated
dual-camera phone streams, estimate parametric/SH lighting, score coverage
and rendering quality, and evaluate adaptive capture policies under a
measured battery model.
"""

from .geometry import (BACK_ULTRAWIDE, BACK_WIDE, FRONT, CameraIntrinsics,
                       DevicePose, camera_pose, dir_to_equirect,
                       direction_to_pixel, equirect_to_dir, great_circle_pose,
                       intrinsics_from_fov, pixel_to_direction)
from .envmap import (CURRENT_ONLY, NEWEST_WINS, EnvironmentMap, Frame,
                     merge_frame, project_frame, refine_pose, sample_envmap)
from .capture import (ChangeEvent, Scene, ScenarioConfig, Trajectory,
                      apply_change_events, imu_signal, pose_at, render_frame)
from .policy import (EnergyLedger, EnergyModel, PolicyParams, PolicyState,
                     change_score, charge, fit_energy_model, policy_step)
from .metrics import (CoverageReport, QualityReport, coverage,
                      coverage_of_envmap, fibonacci_sphere, psnr, render_probe,
                      ssim)
from .lighting import (LightEstimate, complete_envmap, estimate_lights, fit_sh)
from .simulate import RunReport, run_scenario

__version__ = "0.1.0"
