"""Capture simulation: ground-truth scenes with timed changes, device
trajectories with seeded pose noise, camera frame rendering, and IMU-style
angular-speed signals.

Everything here is a pure function of (inputs, t, seed): the same scenario
config always produces bit-identical frame streams. No battery accounting
happens here; the policy module owns the energy ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import geometry, image_io
from .envmap import Frame, sample_equirect
from .geometry import CameraIntrinsics, DevicePose
from .policy import EnergyModel, PolicyParams

STATIC = "static"
GREAT_CIRCLE = "great_circle"
RANDOM_WALK = "random_walk"
TRAJECTORY_KINDS = (STATIC, GREAT_CIRCLE, RANDOM_WALK)


# ---------------------------------------------------------------------------
# Scenes and timed changes
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ChangeEvent:
    """Scene change at `time_ms`: either a full replacement map or an
    intensity scale applied to a (u, v) rectangle of the current map."""

    time_ms: int
    truth: np.ndarray | None = None
    region_uv: tuple[float, float, float, float] | None = None  # u0, v0, u1, v1
    scale: float = 1.0

    def __post_init__(self):
        if (self.truth is None) == (self.region_uv is None):
            raise ValueError("a change event needs exactly one of truth / region_uv")


@dataclass(eq=False)
class Scene:
    truth: np.ndarray                      # (H, 2H, 3) linear radiance >= 0
    change_events: list[ChangeEvent] = field(default_factory=list)

    def __post_init__(self):
        h, w = self.truth.shape[:2]
        if w != 2 * h:
            raise ValueError("scene truth must be a 2:1 equirect map")
        if np.any(self.truth < 0):
            raise ValueError("radiance must be non-negative")
        times = [e.time_ms for e in self.change_events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("change events must be sorted, strictly increasing")


def apply_change_events(scene: Scene, t_ms: float) -> np.ndarray:
    """Truth map in effect at `t_ms` (all events with time <= t applied)."""
    truth = scene.truth
    dirty = False
    for ev in scene.change_events:
        if ev.time_ms > t_ms:
            break
        if ev.truth is not None:
            truth = ev.truth
            dirty = False
        else:
            if not dirty:
                truth = truth.copy()
                dirty = True
            h, w = truth.shape[:2]
            u0, v0, u1, v1 = ev.region_uv
            j0, j1 = int(u0 * w), max(int(u0 * w) + 1, int(np.ceil(u1 * w)))
            i0, i1 = int(v0 * h), max(int(v0 * h) + 1, int(np.ceil(v1 * h)))
            truth[i0:i1, j0:j1] *= ev.scale
    return truth


# ---------------------------------------------------------------------------
# Trajectories and pose noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    kind: str = STATIC
    arm_length_m: float = 0.5
    sweep_deg: float = 60.0
    duration_ms: int = 10_000
    noise_sigma_deg: float = 0.0
    seed: int = 0
    step_ms: int = 500            # random_walk dwell per pose
    walk_yaw_deg: float = 60.0    # random_walk yaw range (+-)
    walk_pitch_deg: float = 20.0  # random_walk pitch range (+-)

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.duration_ms < 0 or self.arm_length_m <= 0:
            raise ValueError("duration must be >= 0 and arm length positive")


def _noise_rotation(sigma_deg: float, seed: int, t_ms: float) -> np.ndarray:
    """Isotropic small rotation: axis uniform on the sphere, angle |N(0, sigma)|."""
    rng = np.random.default_rng([int(seed) & 0x7FFFFFFF, int(round(t_ms)), 17])
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.normal(size=3)
    angle = abs(rng.normal(0.0, sigma_deg))
    return geometry.rotation_from_axis_angle(axis, angle)


def _nominal_pose(traj: Trajectory, t_ms: float, seed: int) -> DevicePose:
    t = min(max(t_ms, 0.0), traj.duration_ms)
    if traj.kind == STATIC:
        return DevicePose(np.eye(3), np.array([0.0, 0.0, -traj.arm_length_m]))
    if traj.kind == GREAT_CIRCLE:
        frac = 0.5 if traj.duration_ms == 0 else t / traj.duration_ms
        return geometry.great_circle_pose(frac, traj.arm_length_m, traj.sweep_deg)
    k = int(t // traj.step_ms)
    rng = np.random.default_rng([int(seed) & 0x7FFFFFFF, k, 7777])
    yaw = rng.uniform(-traj.walk_yaw_deg, traj.walk_yaw_deg)
    pitch = rng.uniform(-traj.walk_pitch_deg, traj.walk_pitch_deg)
    rot = geometry.rotation_from_ypr(yaw, pitch, 0.0)
    return DevicePose(rot, rot @ np.array([0.0, 0.0, -traj.arm_length_m]))


def pose_at(traj: Trajectory, t_ms: float, seed: int | None = None) -> DevicePose:
    """Device pose at `t_ms`: the trajectory's nominal pose composed with a
    seeded random rotation of magnitude ~ |N(0, sigma)| (sigma = 0 disables)."""
    seed = traj.seed if seed is None else seed
    nominal = _nominal_pose(traj, t_ms, seed)
    if traj.noise_sigma_deg <= 0.0:
        return nominal
    noise = _noise_rotation(traj.noise_sigma_deg, seed, t_ms)
    return DevicePose(nominal.rotation @ noise, nominal.position)


def imu_signal(traj: Trajectory, t_ms: float, window_ms: float,
               seed: int | None = None) -> float:
    """Angular speed in deg/s over the trailing window, by finite differences."""
    if window_ms <= 0:
        raise ValueError("window_ms must be positive")
    a = pose_at(traj, max(t_ms - window_ms, 0.0), seed)
    b = pose_at(traj, t_ms, seed)
    span = min(window_ms, max(t_ms, 1e-9))
    return geometry.rotation_angle_deg(a.rotation, b.rotation) / (span / 1000.0)


# ---------------------------------------------------------------------------
# Frame rendering
# ---------------------------------------------------------------------------

def render_frame(scene: Scene, intr: CameraIntrinsics, pose: DevicePose,
                 exposure: float, t_ms: float,
                 camera_id: str = geometry.BACK_WIDE) -> Frame:
    """Render one LDR camera frame from the active truth map at `t_ms`.

    Per pixel: unproject the pixel center, bilinearly sample the truth map,
    scale by `exposure`, clamp to [0,1], gamma-encode. Deterministic.
    """
    truth = apply_change_events(scene, t_ms)
    w, h = intr.width_px, intr.height_px
    xs = (np.arange(w) + 0.5)
    ys = (np.arange(h) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    px = np.stack([gx, gy], axis=-1)
    dirs = geometry.pixel_to_direction(intr, geometry.camera_pose(pose, camera_id), px)
    radiance = sample_equirect(truth, dirs)
    pixels = image_io.encode_gamma(radiance * exposure).astype(np.float32)
    return Frame(pixels=pixels, intrinsics=intr, pose=pose,
                 camera_id=camera_id, timestamp_ms=int(round(t_ms)))


# ---------------------------------------------------------------------------
# Scenario configuration (JSON in, resolved dataclass out)
# ---------------------------------------------------------------------------

DEFAULT_CAMERAS = {
    "front": {"h_fov_deg": 70.0, "width_px": 640, "height_px": 480},
    "back_wide": {"h_fov_deg": 75.0, "width_px": 640, "height_px": 480},
    "back_ultrawide": {"h_fov_deg": 120.0, "width_px": 640, "height_px": 480},
}


@dataclass(eq=False)
class ScenarioConfig:
    """Resolved simulation scenario; see `from_json` for the file schema."""

    scenario_id: str = "scenario"
    seed: int = 0
    duration_ms: int = 10_000
    fps: float = 30.0
    exposure: float = 1.0
    env_height_px: int = 256
    scene_pfm_path: str | None = None
    change_events: list[dict] = field(default_factory=list)
    trajectory: Trajectory = field(default_factory=Trajectory)
    cameras: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_CAMERAS.items()})
    back_camera: str = geometry.BACK_ULTRAWIDE
    policy: PolicyParams = field(default_factory=PolicyParams)
    energy: EnergyModel = field(default_factory=EnergyModel)
    estimate_interval_ms: int = 1000
    coverage_samples: int = 20_000
    probe_res_px: int = 128
    out_dir: str | None = None

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be >= 0")
        if self.back_camera not in (geometry.BACK_WIDE, geometry.BACK_ULTRAWIDE):
            raise ValueError(f"back_camera must be a back camera, got {self.back_camera!r}")

    @property
    def tick_ms(self) -> int:
        return max(1, int(round(1000.0 / self.fps)))

    def intrinsics(self, camera_id: str) -> CameraIntrinsics:
        spec = self.cameras[camera_id]
        return geometry.intrinsics_from_fov(spec["h_fov_deg"], spec["width_px"],
                                            spec["height_px"])

    def load_scene(self) -> Scene:
        if self.scene_pfm_path is None:
            raise ValueError("config has no scene_pfm_path")
        truth = image_io.read_pfm(self.scene_pfm_path)
        events = []
        for ev in self.change_events:
            if "pfm_path" in ev:
                events.append(ChangeEvent(time_ms=int(ev["time_ms"]),
                                          truth=image_io.read_pfm(ev["pfm_path"])))
            else:
                events.append(ChangeEvent(time_ms=int(ev["time_ms"]),
                                          region_uv=tuple(ev["region_uv"]),
                                          scale=float(ev["scale"])))
        return Scene(truth=truth, change_events=events)

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        traj = Trajectory(**doc.pop("trajectory", {}))
        policy = PolicyParams(**doc.pop("policy", {}))
        energy = EnergyModel(**doc.pop("energy", {}))
        cameras = {k: dict(v) for k, v in DEFAULT_CAMERAS.items()}
        for cam_id, spec in doc.pop("cameras", {}).items():
            if cam_id not in cameras:
                raise ValueError(f"unknown camera id {cam_id!r} in config")
            cameras[cam_id].update(spec)
        scene = doc.pop("scene", {})
        known = {f for f in cls.__dataclass_fields__
                 if f not in ("trajectory", "policy", "energy", "cameras",
                              "scene_pfm_path", "change_events")}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(trajectory=traj, policy=policy, energy=energy, cameras=cameras,
                   scene_pfm_path=scene.get("pfm_path"),
                   change_events=list(scene.get("change_events", [])),
                   **doc)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        doc = {
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "fps": self.fps,
            "exposure": self.exposure,
            "env_height_px": self.env_height_px,
            "scene": {"pfm_path": self.scene_pfm_path,
                      "change_events": self.change_events},
            "trajectory": asdict(self.trajectory),
            "cameras": self.cameras,
            "back_camera": self.back_camera,
            "policy": asdict(self.policy),
            "energy": asdict(self.energy),
            "estimate_interval_ms": self.estimate_interval_ms,
            "coverage_samples": self.coverage_samples,
            "probe_res_px": self.probe_res_px,
            "out_dir": self.out_dir,
        }
        return doc
