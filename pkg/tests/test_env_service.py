import numpy as np
import pandas as pd
import pytest

from exceptions import LifecycleError
from models.simulation import CfState, TerminalReason
from services.env_service import CarFollowingEnv, replay_policy, rollout_frame, write_rollout_log
from services.fleet_service import make_event_from_arrays
from services.reward_service import RewardCalculator, collision_reward
from utils.constants import RolloutColumns


@pytest.fixture
def env():
    return CarFollowingEnv(RewardCalculator(), dt=0.1, max_acceleration=3.0)


def test_reset_uses_first_sample(env, varying_event):
    state = env.reset(varying_event)
    assert state.follower_speed == varying_event.follower_speed[0]
    assert state.gap == varying_event.gap[0]
    assert state.relative_speed == pytest.approx(varying_event.leader_speed[0] - varying_event.follower_speed[0])
    assert state.prev_acceleration == varying_event.follower_acceleration[0]
    assert state.step_index == 0 and not state.terminal


def test_step_follows_point_mass_update(env):
    event = make_event_from_arrays(1, np.array([20.0, 21.0, 21.0]), np.zeros(3), 30.0, 20.0)
    state = env.reset(event)

    outcome = env.step(state, 1.0, event)
    next_state = outcome.next_state

    assert next_state.follower_speed == pytest.approx(20.1)
    assert next_state.relative_speed == pytest.approx(21.0 - 20.1)
    assert next_state.gap == pytest.approx(30.0 + (0.0 + 0.9) / 2 * 0.1)
    assert next_state.step_index == 1
    assert outcome.leader_speed == 21.0
    assert outcome.jerk == pytest.approx(10.0)
    assert not outcome.terminal


def test_speed_is_clamped_at_zero(env):
    event = make_event_from_arrays(1, np.full(5, 1.0), np.zeros(5), 20.0, 0.1)
    outcome = env.step(env.reset(event), -3.0, event)
    assert outcome.next_state.follower_speed == 0.0


def test_action_is_clipped_to_bounds(env, constant_event):
    outcome = env.step(env.reset(constant_event), 10.0, constant_event)
    assert outcome.action == 3.0
    assert outcome.next_state.follower_speed == pytest.approx(20.3)


def test_first_step_jerk_uses_recorded_acceleration(env):
    event = make_event_from_arrays(1, np.full(5, 20.0), np.full(5, 0.5), 30.0, 20.0)
    state = env.reset(event)
    assert env.step(state, 0.5, event).jerk == 0.0
    assert env.step(state, 1.0, event).jerk == pytest.approx(5.0)


def test_unknown_previous_acceleration_gives_zero_jerk(env, constant_event):
    state = CfState(20.0, 0.0, 30.0, prev_acceleration=None)
    assert env.step(state, 2.0, constant_event).jerk == 0.0


def test_collision_terminates_with_collision_reward(env, stopped_leader_event):
    state = CfState(10.0, -10.0, 1.0, prev_acceleration=0.0)
    outcome = env.step(state, 3.0, stopped_leader_event)

    assert outcome.terminal
    assert outcome.terminal_reason is TerminalReason.COLLISION
    assert outcome.next_state.gap <= 0
    assert outcome.ttc is None
    assert outcome.reward == collision_reward(outcome.jerk)


def test_event_end_is_terminal(env, constant_event):
    state = env.reset(constant_event)
    steps = 0
    while not state.terminal:
        outcome = env.step(state, 0.0, constant_event)
        state = outcome.next_state
        steps += 1
    assert steps == len(constant_event) - 1
    assert outcome.terminal_reason is TerminalReason.EVENT_END


def test_step_after_terminal_raises(env, constant_event):
    state = CfState(20.0, 0.0, 30.0, 0.0, step_index=5, terminal=True)
    with pytest.raises(LifecycleError):
        env.step(state, 0.0, constant_event)


def test_step_past_last_sample_raises(env, constant_event):
    state = CfState(20.0, 0.0, 30.0, 0.0, step_index=len(constant_event) - 1)
    with pytest.raises(LifecycleError):
        env.step(state, 0.0, constant_event)


def test_replay_reproduces_recorded_follower(env, varying_event):
    log = env.run_event(replay_policy(varying_event), varying_event)

    assert len(log) == len(varying_event) - 1
    assert not log.collided
    speeds = np.array([step.follower_speed for step in log.steps])
    gaps = np.array([step.gap for step in log.steps])
    assert np.allclose(speeds, varying_event.follower_speed[1:], atol=1e-9)
    assert np.allclose(gaps, varying_event.gap[1:], atol=1e-9)


def test_rollout_consumes_recorded_leader_exactly(env, varying_event):
    log = env.run_event(lambda state: 1.5, varying_event)
    leader = np.array([step.leader_speed for step in log.steps])
    assert np.array_equal(leader, varying_event.leader_speed[1:len(log) + 1])


def test_constant_acceleration_into_stopped_leader_collides(env, stopped_leader_event):
    log = env.run_event(lambda state: 3.0, stopped_leader_event)
    assert log.collided
    assert log.steps[-1].gap <= 0


def test_rollout_log_table(env, constant_event, tmp_path):
    log = env.run_event(lambda state: 0.0, constant_event)
    frame = rollout_frame(log)
    assert list(frame.columns) == list(RolloutColumns.ORDER)
    assert len(frame) == len(log)

    path = write_rollout_log(log, tmp_path / "log.csv")
    assert len(pd.read_csv(path)) == len(log)
