import numpy as np
import pytest

from envlight import envmap as em
from envlight import capture, geometry, scenes
from envlight.envmap import EnvironmentMap, Frame, InsufficientOverlapError
from envlight.geometry import DevicePose, intrinsics_from_fov

from util import (constant_frame, encoded_truth_at_texels, env_from_truth,
                  masked_psnr, rectangular_solid_angle)


def test_envmap_must_be_2_to_1():
    with pytest.raises(ValueError):
        EnvironmentMap(texels=np.zeros((64, 100, 3), dtype=np.float32),
                       observed=np.zeros((64, 100), dtype=bool),
                       updated_at=np.zeros((64, 100), dtype=np.int64),
                       written_by=np.zeros((64, 100), dtype=np.uint8))


def test_frame_dimension_check():
    intr = intrinsics_from_fov(75.0, 64, 48)
    with pytest.raises(ValueError):
        Frame(pixels=np.zeros((10, 10, 3), dtype=np.float32), intrinsics=intr,
              pose=DevicePose(), camera_id="back_wide", timestamp_ms=0)


# ---------------------------------------------------------------------------
# project_frame
# ---------------------------------------------------------------------------

def test_project_constant_frame():
    intr = intrinsics_from_fov(90.0, 64, 48)
    frame = constant_frame([0.2, 0.5, 0.8], intr, DevicePose(), t_ms=5)
    env = em.project_frame(EnvironmentMap.empty(64), frame)
    assert env.observed.any()
    assert np.allclose(env.texels[env.observed], [0.2, 0.5, 0.8], atol=1e-6)
    assert np.all(env.texels[~env.observed] == 0.0)
    assert np.all(env.updated_at[env.observed] == 5)
    assert np.all(env.updated_at[~env.observed] == 0)


def test_projection_matches_per_texel_visibility():
    # oracle: brute-force direction_to_pixel on every texel center
    intr = intrinsics_from_fov(100.0, 64, 48)
    pose = DevicePose(geometry.rotation_from_ypr(35.0, -20.0, 10.0))
    frame = constant_frame([1.0, 1.0, 1.0], intr, pose,
                           camera_id=geometry.BACK_WIDE)
    env = em.project_frame(EnvironmentMap.empty(32), frame)
    dirs = em.texel_directions(env)
    for i in range(env.height_px):
        for j in range(env.width_px):
            visible = geometry.direction_to_pixel(intr, pose, dirs[i, j]) is not None
            assert env.observed[i, j] == visible


def test_observed_fraction_matches_solid_angle():
    # oracle: analytic rectangular-frustum solid angle
    intr = intrinsics_from_fov(70.0, 320, 240)
    frame = constant_frame([1, 1, 1], intr, DevicePose(), camera_id=geometry.FRONT)
    env = em.project_frame(EnvironmentMap.empty(256), frame)
    expect = rectangular_solid_angle(intr.h_fov_deg, intr.v_fov_deg) / (4 * np.pi)
    assert em.observed_fraction(env) == pytest.approx(expect, abs=0.01)


def test_render_project_round_trip_psnr():
    # oracle: render from known truth, project back, compare on covered texels
    truth = scenes.blob_scene(512, seed=3)
    scene = capture.Scene(truth)
    intr = intrinsics_from_fov(120.0, 640, 480)
    frame = capture.render_frame(scene, intr, DevicePose(), 1.0, 0,
                                 camera_id=geometry.BACK_ULTRAWIDE)
    env = em.project_frame(EnvironmentMap.empty(256), frame)
    expect = encoded_truth_at_texels(np.clip(truth, 0, 1), env)
    assert masked_psnr(env.texels, expect, env.observed) >= 40.0


# ---------------------------------------------------------------------------
# merge_frame
# ---------------------------------------------------------------------------

def _back_frame(color, yaw_deg, t_ms, h_fov=90.0):
    intr = intrinsics_from_fov(h_fov, 64, 48)
    return constant_frame(color, intr, DevicePose(geometry.rot_y(yaw_deg)), t_ms=t_ms)


def test_merge_disjoint_union():
    env = EnvironmentMap.empty(64)
    a = em.merge_frame(env, _back_frame([1, 0, 0], 0.0, 1))
    b = em.merge_frame(a, _back_frame([0, 1, 0], 180.0, 2))
    n_a = em.project_frame(env, _back_frame([1, 0, 0], 0.0, 1)).observed.sum()
    n_b = em.project_frame(env, _back_frame([0, 1, 0], 180.0, 2)).observed.sum()
    assert b.observed.sum() == n_a + n_b


def test_merge_newest_wins_on_overlap():
    env = EnvironmentMap.empty(64)
    env = em.merge_frame(env, _back_frame([1, 0, 0], 0.0, 1))
    env = em.merge_frame(env, _back_frame([0, 0, 1], 0.0, 2))
    assert np.allclose(env.texels[env.observed], [0, 0, 1], atol=1e-6)


def test_merge_idempotent():
    frame = _back_frame([0.3, 0.6, 0.9], 15.0, 7)
    once = em.merge_frame(EnvironmentMap.empty(64), frame)
    twice = em.merge_frame(once, frame)
    assert np.array_equal(once.texels, twice.texels)
    assert np.array_equal(once.observed, twice.observed)
    assert np.array_equal(once.updated_at, twice.updated_at)


def test_merge_coverage_monotone():
    rng = np.random.default_rng(9)
    env = EnvironmentMap.empty(32)
    count = 0
    for k in range(8):
        frame = _back_frame(rng.uniform(size=3), rng.uniform(-180, 180), k + 1)
        env = em.merge_frame(env, frame, em.NEWEST_WINS)
        assert env.observed.sum() >= count
        count = env.observed.sum()


def test_current_only_drops_stale_front_data():
    intr = intrinsics_from_fov(70.0, 64, 48)
    env = EnvironmentMap.empty(64)
    f1 = constant_frame([1, 0, 0], intr, DevicePose(), geometry.FRONT, t_ms=1)
    env = em.merge_frame(env, f1, em.CURRENT_ONLY)
    f2 = constant_frame([0, 1, 0], intr, DevicePose(geometry.rot_y(40.0)),
                        geometry.FRONT, t_ms=2)
    env = em.merge_frame(env, f2, em.CURRENT_ONLY)
    front = env.written_by == em.CAMERA_CODE[geometry.FRONT]
    assert front.any()
    assert np.all(env.updated_at[front] == 2)
    assert np.allclose(env.texels[front], [0, 1, 0], atol=1e-6)


def test_current_only_single_timestamp_invariant():
    rng = np.random.default_rng(11)
    intr = intrinsics_from_fov(70.0, 64, 48)
    env = EnvironmentMap.empty(32)
    for t in range(1, 10):
        pose = DevicePose(geometry.rot_y(rng.uniform(-90, 90)))
        if t % 2:
            frame = constant_frame(rng.uniform(size=3), intr, pose,
                                   geometry.FRONT, t_ms=t)
            env = em.merge_frame(env, frame, em.CURRENT_ONLY)
        else:
            frame = constant_frame(rng.uniform(size=3), intr, pose,
                                   geometry.BACK_WIDE, t_ms=t)
            env = em.merge_frame(env, frame, em.NEWEST_WINS)
        front = env.written_by == em.CAMERA_CODE[geometry.FRONT]
        assert len(np.unique(env.updated_at[front])) <= 1


def test_back_wins_at_equal_timestamp():
    intr = intrinsics_from_fov(75.0, 64, 48)
    env = EnvironmentMap.empty(64)
    back = constant_frame([0, 0, 1], intr, DevicePose(), geometry.BACK_WIDE, t_ms=5)
    front = constant_frame([1, 0, 0], intr, DevicePose(geometry.rot_y(180.0)),
                           geometry.FRONT, t_ms=5)  # same frustum as back
    env = em.merge_frame(env, back, em.NEWEST_WINS)
    env = em.merge_frame(env, front, em.CURRENT_ONLY)
    assert np.allclose(env.texels[env.observed], [0, 0, 1], atol=1e-6)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sample_constant_map():
    env = EnvironmentMap.empty(32)
    env.texels[:] = [0.1, 0.4, 0.7]
    rng = np.random.default_rng(12)
    dirs = geometry.unit(rng.normal(size=(100, 3)))
    assert np.allclose(em.sample_envmap(env, dirs), [0.1, 0.4, 0.7], atol=1e-6)


def test_sample_texel_center_exact():
    rng = np.random.default_rng(13)
    env = EnvironmentMap.empty(32)
    env.texels[:] = rng.uniform(size=env.texels.shape).astype(np.float32)
    dirs = em.texel_directions(env)
    for i, j in [(0, 0), (5, 40), (31, 63), (16, 32)]:
        val = em.sample_envmap(env, dirs[i, j])
        assert np.allclose(val, env.texels[i, j], atol=1e-6)


def test_sample_wraps_horizontal_seam():
    env = EnvironmentMap.empty(32)
    # continuous gradient across the seam
    u = (np.arange(env.width_px) + 0.5) / env.width_px
    env.texels[:] = (0.5 + 0.4 * np.cos(2 * np.pi * u))[None, :, None]
    for eps in (1e-3, 1e-4):
        left = em.sample_envmap(env, geometry.equirect_to_dir(1.0 - eps, 0.5))
        right = em.sample_envmap(env, geometry.equirect_to_dir(eps, 0.5))
        assert np.all(np.abs(left - right) < 0.05)
    # midway between the last and first columns interpolates across the seam
    env.texels[:, 0] = 1.0
    env.texels[:, -1] = 0.0
    mid = em.sample_envmap(env, geometry.equirect_to_dir(0.0, 0.5))
    assert np.allclose(mid, 0.5, atol=1e-6)


# ---------------------------------------------------------------------------
# refine_pose
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def textured_env_and_scene():
    truth = scenes.blob_scene(256, seed=11)
    env = env_from_truth(np.clip(truth, 0, 1), 256)
    return env, capture.Scene(truth)


def test_refine_pose_zero_noise_returns_nominal(textured_env_and_scene):
    env, scene = textured_env_and_scene
    intr = intrinsics_from_fov(75.0, 320, 240)
    frame = capture.render_frame(scene, intr, DevicePose(), 1.0, 0)
    refined = em.refine_pose(env, frame, 2.0, 1.0)
    assert np.allclose(refined.rotation, np.eye(3), atol=1e-12)


def test_refine_pose_recovers_yaw(textured_env_and_scene):
    env, scene = textured_env_and_scene
    intr = intrinsics_from_fov(75.0, 320, 240)
    true_pose = DevicePose(geometry.rot_y(2.0))
    frame = capture.render_frame(scene, intr, true_pose, 1.0, 0)
    nominal = Frame(frame.pixels, frame.intrinsics, DevicePose(),
                    frame.camera_id, frame.timestamp_ms)
    refined = em.refine_pose(env, nominal, 5.0, 0.5)
    assert geometry.rotation_angle_deg(refined.rotation, true_pose.rotation) <= 0.5


def test_refine_pose_recovers_pitch_roll(textured_env_and_scene):
    env, scene = textured_env_and_scene
    intr = intrinsics_from_fov(75.0, 320, 240)
    true_pose = DevicePose(geometry.rotation_from_ypr(0.0, -1.5, 1.0))
    frame = capture.render_frame(scene, intr, true_pose, 1.0, 0)
    nominal = Frame(frame.pixels, frame.intrinsics, DevicePose(),
                    frame.camera_id, frame.timestamp_ms)
    refined = em.refine_pose(env, nominal, 3.0, 0.5)
    assert geometry.rotation_angle_deg(refined.rotation, true_pose.rotation) <= 0.5


def test_refine_pose_front_camera(textured_env_and_scene):
    env, scene = textured_env_and_scene
    intr = intrinsics_from_fov(70.0, 320, 240)
    true_pose = DevicePose(geometry.rot_y(-2.0))
    frame = capture.render_frame(scene, intr, true_pose, 1.0, 0,
                                 camera_id=geometry.FRONT)
    nominal = Frame(frame.pixels, frame.intrinsics, DevicePose(),
                    frame.camera_id, frame.timestamp_ms)
    refined = em.refine_pose(env, nominal, 4.0, 0.5)
    assert geometry.rotation_angle_deg(refined.rotation, true_pose.rotation) <= 0.5


def test_merge_ignores_stale_out_of_order_frame():
    env = EnvironmentMap.empty(64)
    env = em.merge_frame(env, _back_frame([0, 0, 1], 0.0, t_ms=10))
    env = em.merge_frame(env, _back_frame([1, 0, 0], 0.0, t_ms=4))
    assert np.allclose(env.texels[env.observed], [0, 0, 1], atol=1e-6)
    assert np.all(env.updated_at[env.observed] == 10)


def test_refine_pose_constant_scene_returns_nominal():
    env = EnvironmentMap.empty(64)
    env.texels[:] = 0.5
    env.observed[:] = True
    intr = intrinsics_from_fov(75.0, 64, 48)
    frame = constant_frame([0.5, 0.5, 0.5], intr, DevicePose(geometry.rot_y(9.0)))
    refined = em.refine_pose(env, frame, 2.0, 1.0)
    assert np.array_equal(refined.rotation, frame.pose.rotation)


def test_refine_pose_insufficient_overlap():
    env = EnvironmentMap.empty(64)  # nothing observed
    intr = intrinsics_from_fov(75.0, 64, 48)
    frame = constant_frame([0.5, 0.5, 0.5], intr, DevicePose())
    with pytest.raises(InsufficientOverlapError):
        em.refine_pose(env, frame, 2.0, 1.0)
