import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import assume, given, settings, strategies as st

from config import ExtractionConfig
from exceptions import DataError, FitError, SchemaError, SplitError
from models.trajectory import CfEvent, LognormalParams
from services.fleet_service import write_trajectory_table
from services.trajectory_service import (
    TrajectoryService,
    estimate_ttc_safety_limit,
    fit_headway_lognormal,
    fit_lognormal,
    headway_samples,
    min_samples_for,
    read_events,
    split_events,
    ttc_samples,
    validate_cf_event,
    write_events,
)

from conftest import NGSIM_COLUMNS, pair_rows, write_table


def test_parse_missing_column_raises_schema_error(tmp_path):
    rows = pair_rows(range(10))
    columns = [c for c in NGSIM_COLUMNS if c != "v_Vel"]
    path = write_table(tmp_path / "traj.csv", rows, columns)

    with pytest.raises(SchemaError) as excinfo:
        TrajectoryService().parse_trajectory_file(path)
    assert excinfo.value.missing_columns == ["v_Vel"]


def test_parse_rejects_invalid_rows(tmp_path):
    rows = pair_rows(range(10))
    rows[3]["v_Vel"] = -1.0
    rows[5]["v_Acc"] = "n/a"
    rows[7]["v_Length"] = 0.0
    path = write_table(tmp_path / "traj.csv", rows)

    result = TrajectoryService().parse_trajectory_file(path)

    assert result.total_rows == 20
    assert result.rejected_rows == 3
    assert result.sample_count == 17


def test_parse_applies_unit_scales(tmp_path):
    path = write_table(tmp_path / "traj.csv", pair_rows(range(3), speed=10.0))
    service = TrajectoryService()
    service.mapping.distance_scale = 0.3048

    result = service.parse_trajectory_file(path)

    follower = result.vehicles[2]
    assert follower[0].speed == pytest.approx(3.048)
    assert follower[1].time == pytest.approx(0.1)


def test_parse_non_monotone_time_names_vehicle(tmp_path):
    rows = pair_rows(range(5))
    rows[4], rows[6] = rows[6], rows[4]   # 차량 1 의 프레임 2, 3 순서 뒤바꿈
    path = write_table(tmp_path / "traj.csv", rows)

    with pytest.raises(DataError) as excinfo:
        TrajectoryService().parse_trajectory_file(path)
    assert excinfo.value.vehicle_id == 1


def test_parse_interleaved_vehicles_are_allowed(tmp_path):
    path = write_table(tmp_path / "traj.csv", pair_rows(range(5)))
    result = TrajectoryService().parse_trajectory_file(path)
    assert sorted(result.vehicles) == [1, 2]
    assert [s.frame() for s in result.vehicles[2]] == [0, 1, 2, 3, 4]


def test_min_samples_for_fifteen_seconds():
    assert min_samples_for(15.0, 0.1) == 151


@pytest.mark.parametrize("frames, expected", [(150, 0), (151, 1), (300, 1)])
def test_extract_applies_strict_duration_filter(tmp_path, frames, expected):
    path = write_table(tmp_path / "traj.csv", pair_rows(range(frames)))
    service = TrajectoryService()
    events = service.extract_cf_events(service.parse_trajectory_file(path).vehicles)
    assert len(events) == expected


def test_extract_splits_run_when_leader_changes(tmp_path):
    rows = pair_rows(range(320), preceding={160: 0})
    path = write_table(tmp_path / "traj.csv", rows)
    service = TrajectoryService()

    events = service.extract_cf_events(service.parse_trajectory_file(path).vehicles)

    assert [len(e) for e in events] == [160, 159]
    assert [e.event_id for e in events] == [1, 2]


def test_extract_splits_run_on_missing_frame(tmp_path):
    frames = [f for f in range(330) if f != 170]
    path = write_table(tmp_path / "traj.csv", pair_rows(frames))
    service = TrajectoryService()

    events = service.extract_cf_events(service.parse_trajectory_file(path).vehicles)

    assert [len(e) for e in events] == [170, 159]


def test_extract_requires_same_lane(tmp_path):
    rows = pair_rows(range(200))
    for row in rows:
        if row["Vehicle_ID"] == 1:
            row["Lane_ID"] = 2
    path = write_table(tmp_path / "traj.csv", rows)
    service = TrajectoryService()
    assert service.extract_cf_events(service.parse_trajectory_file(path).vehicles) == []


def test_extract_two_qualifying_pairs(tmp_path):
    rows = pair_rows(range(200)) + pair_rows(range(200), leader_id=3, follower_id=4, lane=2, gap=35.0)
    path = write_table(tmp_path / "traj.csv", rows)
    service = TrajectoryService()

    events = service.extract_cf_events(service.parse_trajectory_file(path).vehicles)

    assert len(events) == 2
    assert np.allclose(events[0].gap, 20.0)
    assert np.allclose(events[1].gap, 35.0)
    for event in events:
        validate_cf_event(event)


def test_exclusive_vehicles_drops_chained_events(tmp_path):
    # 2 는 1 을, 3 은 2 를 따라감: 차량 2 가 두 이벤트에 등장
    rows = pair_rows(range(200))
    rows += [
        dict(r, **{"Vehicle_ID": 3, "Local_Y": r["Local_Y"] - 30.0, "Preceding": 2})
        for r in pair_rows(range(200)) if r["Vehicle_ID"] == 2
    ]
    path = write_table(tmp_path / "traj.csv", rows)

    shared = TrajectoryService()
    exclusive = TrajectoryService(extraction=ExtractionConfig(exclusive_vehicles=True))
    vehicles = shared.parse_trajectory_file(path).vehicles

    assert len(shared.extract_cf_events(vehicles)) == 2
    assert len(exclusive.extract_cf_events(vehicles)) == 1


def test_extract_recovers_synthetic_fleet(tmp_path, small_fleet):
    path = write_trajectory_table(small_fleet, tmp_path / "fleet.csv")
    service = TrajectoryService()

    events = service.extract_cf_events(service.parse_trajectory_file(path).vehicles)

    assert len(events) == len(small_fleet)
    for extracted, original in zip(events, small_fleet):
        assert len(extracted) == len(original)
        assert np.allclose(extracted.gap, original.gap, atol=1e-9)


def test_validate_rejects_short_event(constant_event):
    short = CfEvent(1, constant_event.leader[:100], constant_event.follower[:100])
    with pytest.raises(DataError):
        validate_cf_event(short, 15.0)


def test_split_sizes_match_reference_count():
    events = [CfEvent(i, [], []) for i in range(1341)]
    train, test = split_events(events, 0.7, seed=3)
    assert (len(train), len(test)) == (938, 403)
    ids = {e.event_id for e in train} | {e.event_id for e in test}
    assert len(ids) == 1341
    assert not {e.event_id for e in train} & {e.event_id for e in test}


def test_split_is_deterministic_and_seed_dependent():
    events = [CfEvent(i, [], []) for i in range(50)]
    first = [e.event_id for e in split_events(events, 0.7, seed=1)[0]]
    again = [e.event_id for e in split_events(events, 0.7, seed=1)[0]]
    other = [e.event_id for e in split_events(events, 0.7, seed=2)[0]]
    assert first == again
    assert first != other


@pytest.mark.parametrize("n, fraction", [(0, 0.7), (1, 0.7), (10, 1.0), (10, 0.0)])
def test_split_invalid_inputs(n, fraction):
    with pytest.raises(SplitError):
        split_events([CfEvent(i, [], []) for i in range(n)], fraction, seed=0)


def test_split_two_events_keeps_both_sides_nonempty():
    train, test = split_events([CfEvent(1, [], []), CfEvent(2, [], [])], 0.99, seed=0)
    assert len(train) == 1 and len(test) == 1


def test_fit_lognormal_symmetric_log_values():
    values = [math.exp(0.4 - 0.3), math.exp(0.4 + 0.3)]
    params = fit_lognormal(values)
    assert params.mu == pytest.approx(0.4)
    assert params.sigma == pytest.approx(0.3)


@pytest.mark.parametrize("values", [[], [0.0, -1.0], [1.3, 1.3, 1.3]])
def test_fit_lognormal_degenerate_inputs(values):
    with pytest.raises(FitError):
        fit_lognormal(values)


def test_fit_lognormal_recovers_draws():
    draws = np.random.default_rng(11).lognormal(0.4226, 0.4365, 100_000)
    params = fit_lognormal(draws)
    assert abs(params.mu - 0.4226) < 0.02
    assert abs(params.sigma - 0.4365) < 0.02


@settings(max_examples=50, deadline=None)
@given(
    values=st.lists(st.floats(min_value=0.05, max_value=20.0), min_size=2, max_size=60),
    data=st.data(),
)
def test_fit_lognormal_is_permutation_invariant(values, data):
    assume(max(values) / min(values) > 1.001)
    shuffled = data.draw(st.permutations(values))
    assert fit_lognormal(values) == fit_lognormal(shuffled)


def test_fit_headway_uses_per_timestep_headways(constant_event):
    # 간격 30 m / 속도 20 m/s = 1.5 s 로 일정 → 분산 0
    with pytest.raises(FitError):
        fit_headway_lognormal([constant_event])
    assert np.allclose(headway_samples([constant_event]), 1.5)


def test_fit_headway_on_fleet(small_fleet):
    params = fit_headway_lognormal(small_fleet)
    assert isinstance(params, LognormalParams)
    assert 0.0 < params.sigma < 2.0


def test_ttc_samples_only_closing_timesteps(constant_event, varying_event):
    assert ttc_samples([constant_event]).size == 0
    assert ttc_samples([]).size == 0

    closing = varying_event.follower_speed - varying_event.leader_speed
    expected = varying_event.gap[closing > 0] / closing[closing > 0]
    samples = ttc_samples([constant_event, varying_event])
    np.testing.assert_allclose(samples, expected)
    assert np.all(samples > 0)


def test_ttc_safety_limit_none_when_never_closing(constant_event):
    assert estimate_ttc_safety_limit([constant_event]) is None


def test_ttc_safety_limit_lower_percentile(varying_event):
    limit = estimate_ttc_safety_limit([varying_event], percentile=10)
    assert limit is not None and limit > 0


def test_events_file_round_trip(tmp_path, small_fleet):
    path = write_events(small_fleet, tmp_path / "events.csv")
    assert list(pd.read_csv(path).columns)[:3] == ["event_id", "step", "time"]

    restored = read_events(path)

    assert [e.event_id for e in restored] == [e.event_id for e in small_fleet]
    for a, b in zip(restored, small_fleet):
        assert np.array_equal(a.follower_speed, b.follower_speed)
        assert np.array_equal(a.leader_speed, b.leader_speed)
        assert np.array_equal(a.gap, b.gap)
        assert a.leader_id == b.leader_id and a.follower_id == b.follower_id


def test_read_events_missing_column(tmp_path):
    path = tmp_path / "events.csv"
    pd.DataFrame({"event_id": [1], "step": [0]}).to_csv(path, index=False)
    with pytest.raises(SchemaError):
        read_events(path)


def test_parse_empty_file_raises_data_error(tmp_path):
    path = tmp_path / "traj.csv"
    path.write_bytes(b"")
    with pytest.raises(DataError, match="traj.csv"):
        TrajectoryService().parse_trajectory_file(path)


@pytest.mark.parametrize("content", [b"", b"\xff\xfe\xfa event_id,step\n\xff,\xfe\n"])
def test_read_events_unreadable_file_raises_data_error(tmp_path, content):
    path = tmp_path / "events.csv"
    path.write_bytes(content)
    with pytest.raises(DataError):
        read_events(path)


def test_read_events_non_numeric_cell_raises_data_error(tmp_path, constant_event):
    path = write_events([constant_event], tmp_path / "events.csv")
    frame = pd.read_csv(path)
    frame.loc[3, "lane_id"] = np.nan
    frame.to_csv(path, index=False)

    with pytest.raises(DataError, match="이벤트 1"):
        read_events(path)
