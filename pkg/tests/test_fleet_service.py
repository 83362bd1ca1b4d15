import numpy as np
import pandas as pd
import pytest

from config import ColumnMapping
from exceptions import DataError
from services.fleet_service import (
    MAX_SPEED,
    MIN_SPEED,
    feedback_driver_accelerations,
    generate_synthetic_fleet,
    integrate_positions,
    leader_speed_profile,
    make_event_from_arrays,
    write_trajectory_table,
)
from services.trajectory_service import validate_cf_event


def test_integrate_positions_trapezoid():
    positions = integrate_positions(np.array([0.0, 2.0, 2.0]), 5.0, 0.5)
    assert np.allclose(positions, [5.0, 5.5, 6.5])


def test_event_from_arrays_kinematics():
    event = make_event_from_arrays(4, np.full(4, 10.0), np.array([1.0, -2.0, 0.0, 0.0]), 20.0, 10.0)
    assert np.allclose(event.follower_speed, [10.0, 10.1, 9.9, 9.9])
    assert event.gap[0] == pytest.approx(20.0)
    assert (event.leader_id, event.follower_id) == (7, 8)
    assert event.follower[0].leader_id == 7


def test_event_from_arrays_length_mismatch():
    with pytest.raises(DataError):
        make_event_from_arrays(1, np.ones(5), np.ones(4), 10.0, 1.0)


@pytest.mark.parametrize("sinusoidal", [False, True])
def test_leader_profile_respects_limits(sinusoidal):
    speeds = leader_speed_profile(np.random.default_rng(0), 400, 0.1, sinusoidal)
    assert speeds.min() >= MIN_SPEED and speeds.max() <= MAX_SPEED
    assert np.max(np.abs(np.diff(speeds))) <= 2.0 * 0.1 + 1e-12


def test_feedback_driver_closes_large_gap():
    rng = np.random.default_rng(0)
    accelerations = feedback_driver_accelerations(np.full(300, 15.0), 80.0, 15.0, rng, noise_std=0.0)
    assert accelerations[0] == pytest.approx(3.0)
    assert np.all(np.abs(accelerations) <= 3.0)


def test_fleet_is_deterministic_and_valid():
    first = generate_synthetic_fleet(4, seed=9)
    second = generate_synthetic_fleet(4, seed=9)
    assert [len(e) for e in first] == [len(e) for e in second]
    for a, b in zip(first, second):
        assert np.array_equal(a.gap, b.gap)
    for event in first:
        validate_cf_event(event, 15.0)
        assert event.gap.min() > 1.0
        assert 155 <= len(event) <= 401


def test_fleet_events_do_not_overlap_in_time(small_fleet):
    for earlier, later in zip(small_fleet, small_fleet[1:]):
        assert later.times[0] > earlier.times[-1]
    assert {e.lane_id for e in small_fleet} == {1, 2, 3}


def test_trajectory_table_uses_column_mapping(tmp_path, small_fleet):
    mapping = ColumnMapping(distance_scale=0.3048)
    path = write_trajectory_table(small_fleet[:1], tmp_path / "t.csv", mapping)
    frame = pd.read_csv(path)
    assert list(frame.columns) == list(mapping.required_columns().values())
    assert len(frame) == 2 * len(small_fleet[0])
    follower = frame[frame["Vehicle_ID"] == small_fleet[0].follower_id]
    assert follower["v_Vel"].iloc[0] == pytest.approx(small_fleet[0].follower_speed[0] / 0.3048)
