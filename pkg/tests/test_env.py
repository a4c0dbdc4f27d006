"""Environment tests: observation layout, reward, filter, termination,
reference-state initialization, and the episode loop."""

import numpy as np
import pytest

from quadlab.dynamics import RobotState
from quadlab.env import (
    ACTION_WIDTH,
    FILTER_BETA,
    HISTORY_LENGTH,
    OBSERVATION_LENGTH,
    SENSOR_WIDTH,
    EpisodeConfig,
    FilterState,
    QuadEnv,
    check_termination,
    compute_reward,
    quat_geodesic_angle,
    reward_terms,
)
from quadlab.morphology import ConfigurationError, MorphologyConfig, preset_morphology
from quadlab.motions import synth_pace
from quadlab.randomization import RandomizationConfig


@pytest.fixture(scope="module")
def a1():
    return preset_morphology("A1")


@pytest.fixture(scope="module")
def pace():
    return synth_pace()


def make_env(a1, pace, **kw):
    kw.setdefault("randomization", RandomizationConfig.disabled())
    kw.setdefault("seed", 0)
    if "morphology_config" not in kw:
        kw.setdefault("morphology", a1)
    return QuadEnv(pace, a1, **kw)


def state_from_target(ref):
    return RobotState(
        base_position=ref.base_position.copy(),
        base_orientation=ref.base_orientation.copy(),
        base_linear_velocity=ref.base_linear_velocity.copy(),
        base_angular_velocity=ref.base_angular_velocity.copy(),
        joint_positions=ref.joint_positions.copy(),
        joint_velocities=ref.joint_velocities.copy(),
    )


class TestObservation:
    def test_length_421(self, a1, pace):
        env = make_env(a1, pace)
        obs = env.reset()
        assert obs.shape == (OBSERVATION_LENGTH,)
        assert OBSERVATION_LENGTH == 15 * 16 + 15 * 12 + 1 == 421

    def test_phase_at_final_index(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=True, phase=0.37)
        assert env.observation()[-1] == 0.37

    def test_reset_backfills_identical_frames(self, a1, pace):
        env = make_env(a1, pace)
        obs = env.reset(rsi=False)
        frames = obs[:HISTORY_LENGTH * SENSOR_WIDTH].reshape(HISTORY_LENGTH, SENSOR_WIDTH)
        assert np.all(frames == frames[0])
        actions = obs[HISTORY_LENGTH * SENSOR_WIDTH:-1].reshape(HISTORY_LENGTH, ACTION_WIDTH)
        assert np.all(actions == 0.0)

    def test_sensor_frame_is_quaternion_and_joints_only(self, a1, pace):
        # the observation carries no base linear velocity and no contact
        # flags: each sensor frame is exactly quaternion (4) + joints (12)
        env = make_env(a1, pace)
        env.reset(rsi=False)
        frame = env._sensor_frame(env.state)
        assert frame.shape == (SENSOR_WIDTH,)
        assert np.array_equal(frame[:4], env.state.base_orientation)
        assert np.array_equal(frame[4:], env.state.joint_positions)

    def test_histories_ordered_oldest_to_newest(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        action = np.full(12, 0.25)
        obs, _, _, _ = env.step(action)
        actions = obs[HISTORY_LENGTH * SENSOR_WIDTH:-1].reshape(HISTORY_LENGTH, ACTION_WIDTH)
        assert np.all(actions[:-1] == 0.0)
        assert np.allclose(actions[-1], 0.25)


class TestReward:
    def test_identity_at_reference(self, a1, pace):
        cfg = EpisodeConfig()
        ref = pace.sample(0.42)
        s = state_from_target(ref)
        assert abs(compute_reward(s, ref, cfg) - 1.0) <= 1e-12
        assert abs(cfg.weight_pose + cfg.weight_velocity + cfg.weight_base_pose
                   + cfg.weight_base_velocity - 1.0) <= 1e-15

    def test_single_joint_offset(self, pace):
        cfg = EpisodeConfig()
        ref = pace.sample(0.0)
        s = state_from_target(ref)
        s.joint_positions[3] += 0.1
        terms = reward_terms(s, ref)
        assert terms["pose"] == pytest.approx(np.exp(-0.05), abs=1e-12)
        assert compute_reward(s, ref, cfg) == pytest.approx(
            0.6 * np.exp(-0.05) + 0.4, abs=1e-12)

    def test_reward_bounded(self, pace):
        cfg = EpisodeConfig()
        rng = np.random.default_rng(2)
        ref = pace.sample(0.5)
        for _ in range(50):
            s = state_from_target(ref)
            s.base_position += rng.normal(size=3)
            s.joint_positions += rng.normal(size=12)
            s.joint_velocities += rng.normal(size=12) * 5
            q = rng.normal(size=4)
            s.base_orientation = q / np.linalg.norm(q)
            r = compute_reward(s, ref, cfg)
            assert 0.0 < r <= 1.0
            assert all(0.0 < v <= 1.0 for v in reward_terms(s, ref).values())

    def test_invalid_weights_rejected(self):
        with pytest.raises(ConfigurationError):
            EpisodeConfig(weight_pose=0.7).validate()

    def test_geodesic_angle(self):
        q0 = np.array([1.0, 0.0, 0.0, 0.0])
        q90 = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
        assert quat_geodesic_angle(q0, q0) == 0.0
        assert quat_geodesic_angle(q0, -q0) == 0.0  # double cover
        assert quat_geodesic_angle(q0, q90) == pytest.approx(np.pi / 2, abs=1e-12)


class TestFilter:
    def test_zero_action_at_reset_gives_nominal(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        cmd = env.filter_action(np.zeros(12))
        assert np.allclose(cmd.target_joint_positions, a1.nominal_pose)

    def test_step_response_closed_form(self):
        nominal = np.zeros(12)
        f = FilterState(nominal)
        step = np.full(12, 0.5)
        for k in range(1, 40):
            out = f.apply(nominal + step)
            want = (1.0 - FILTER_BETA**k) * step
            assert np.abs(out - want).max() <= 1e-9

    def test_converges_within_60_steps(self):
        f = FilterState(np.zeros(12))
        target = np.full(12, 1.0)
        for _ in range(60):
            out = f.apply(target)
        assert np.abs(out - target).max() <= 1e-5  # beta^60 ~ 1.5e-6

    def test_output_bounded_by_clamp(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        for _ in range(30):
            cmd = env.filter_action(np.full(12, 5.0))  # clamped to +1
        assert np.all(cmd.target_joint_positions <= a1.nominal_pose + 1.0 + 1e-12)
        assert np.all(cmd.target_joint_positions >= a1.nominal_pose - 1.0 - 1e-12)


class TestTermination:
    def test_at_reference_continues(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        ref = env.reference()
        s = state_from_target(ref)
        assert not check_termination(s, ref, env.sim, env.config)

    def test_large_position_deviation_terminates(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        ref = env.reference()
        s = state_from_target(ref)
        s.base_position[0] += 10.0
        assert check_termination(s, ref, env.sim, env.config)

    def test_large_orientation_deviation_terminates(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        ref = env.reference()
        s = state_from_target(ref)
        s.base_orientation = np.array([np.cos(0.6), np.sin(0.6), 0.0, 0.0])
        assert check_termination(s, ref, env.sim, env.config)

    def test_base_on_ground_terminates(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        ref = env.reference()
        s = state_from_target(ref)
        s.base_position[2] = 0.01  # base box bottom below the plane
        assert check_termination(s, ref, env.sim, env.config)


class TestReset:
    def test_rsi_off_gives_nominal(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        assert np.array_equal(env.state.joint_positions, a1.nominal_pose)
        assert env.phase == 0.0

    def test_rsi_forced_phase(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=True, phase=0.3)
        ref = env.motion.sample(0.3)
        assert np.array_equal(env.state.joint_positions, ref.joint_positions)
        assert np.array_equal(env.state.joint_velocities, ref.joint_velocities)

    def test_no_foot_penetration_after_reset(self, a1, pace):
        env = make_env(a1, pace)
        for k in range(20):
            env.reset()
            feet = env.sim.foot_positions(env.state)
            assert np.all(feet[:, 2] >= env.sim.model.foot_radius - 1e-12)

    def test_rsi_fraction(self, a1, pace):
        env = make_env(a1, pace, seed=123)
        n, hits = 4000, 0
        for _ in range(n):
            env.reset()
            if env.phase != 0.0 or not np.array_equal(
                    env.state.joint_positions, a1.nominal_pose):
                hits += 1
        assert abs(hits / n - 0.9) <= 0.015

    def test_generalized_mode_fresh_morphology(self, a1, pace):
        env = make_env(a1, pace, morphology=None,
                       morphology_config=MorphologyConfig(), seed=5)
        masses = set()
        for _ in range(5):
            env.reset()
            masses.add(round(env.sim.model.total_mass, 9))
        assert len(masses) == 5

    def test_both_morphology_arguments_rejected(self, a1, pace):
        with pytest.raises(ConfigurationError):
            QuadEnv(pace, a1, morphology=a1, morphology_config=MorphologyConfig())
        with pytest.raises(ConfigurationError):
            QuadEnv(pace, a1)


class TestEpisodeLoop:
    def test_horizon_truncates(self, a1, pace):
        env = make_env(a1, pace, kinematic_override=True)
        env.reset(rsi=True, phase=0.0)
        for k in range(100):
            obs, r, done, info = env.step(np.zeros(12))
        assert done and info["truncated"] and not info["terminated"]
        assert info["steps"] == 100

    def test_step_after_done_rejected(self, a1, pace):
        env = make_env(a1, pace, kinematic_override=True)
        env.reset(rsi=True, phase=0.0)
        for _ in range(100):
            env.step(np.zeros(12))
        with pytest.raises(ConfigurationError):
            env.step(np.zeros(12))

    def test_kinematic_override_perfect_tracking(self, a1, pace):
        # perfect reference playback scores reward 1 every step, straight
        # through the loop wrap of the reference motion
        env = make_env(a1, pace, kinematic_override=True)
        env.reset(rsi=True, phase=0.95)
        for _ in range(100):
            _, r, done, _ = env.step(np.zeros(12))
            assert r == pytest.approx(1.0, abs=1e-12)
        assert done

    def test_wall_time_coverage(self, a1, pace):
        env = make_env(a1, pace, kinematic_override=True)
        env.reset(rsi=True, phase=0.0)
        for _ in range(100):
            env.step(np.zeros(12))
        assert env.state.time == pytest.approx(100 * 33 * 0.001, abs=1e-12)

    def test_deterministic_trajectories(self, a1, pace):
        traces = []
        for _ in range(2):
            env = make_env(a1, pace, seed=42)
            obs = env.reset()
            rng = np.random.default_rng(7)
            rows = [obs]
            for _ in range(20):
                obs, r, done, _ = env.step(rng.uniform(-0.2, 0.2, 12))
                rows.append(obs)
                if done:
                    break
            traces.append(np.concatenate(rows))
        assert np.array_equal(traces[0], traces[1])

    def test_divergence_gives_zero_terminal_reward(self, a1, pace):
        env = make_env(a1, pace)
        env.reset(rsi=False)
        env.state.base_linear_velocity[0] = 2.0e4
        obs, r, done, info = env.step(np.zeros(12))
        assert done and info["terminated"]
        assert r == 0.0

    def test_normalized_return_bounded(self, a1, pace):
        env = make_env(a1, pace, seed=9)
        env.reset()
        total = 0.0
        for _ in range(100):
            _, r, done, _ = env.step(np.zeros(12))
            total += r
            if done:
                break
        assert 0.0 < total / 100 <= 1.0
