import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from config import EvaluationConfig
from exceptions import ReportError
from models.report import EventMetrics
from models.trajectory import LognormalParams
from services.env_service import CarFollowingEnv
from services.report_service import (
    ReportService,
    band_share,
    headway_of,
    histogram,
    min_ttc_cdf,
    read_report_table,
    sample_cdf,
    write_recorded_distributions,
    write_report,
)
from services.reward_service import lognormal_pdf
from utils.constants import FileNames, ReportColumns, ReportFiles, TraceSources
from utils.io_utils import read_key_values


def metrics(min_ttc):
    return EventMetrics(event_id=0, min_ttc=min_ttc)


def test_headway_of_edge_cases():
    assert headway_of(30.0, 20.0) == 1.5
    assert headway_of(10.0, 0.0) == math.inf
    assert headway_of(0.0, 10.0) == 0.0


def test_histogram_left_closed_bins():
    bins = histogram([0.0, 0.25, 0.49, 0.5, 1.0], 0.5, (0.0, 1.0))
    assert [b.count for b in bins] == [0, 3, 1, 1]
    assert bins[1].lower == 0.0 and bins[1].upper == 0.5
    assert bins[1].center == 0.25


def test_histogram_under_and_overflow():
    bins = histogram([-5.0, math.inf, 7.0, 0.3, math.nan], 1.0, (0.0, 2.0))
    assert bins[0].count == 1 and math.isnan(bins[0].center)
    assert bins[-1].count == 2 and bins[-1].upper == math.inf
    assert sum(b.count for b in bins) == 4


def test_histogram_empty_input():
    bins = histogram([], 0.5, (0.0, 2.0))
    assert all(b.count == 0 and b.fraction == 0.0 for b in bins)


@pytest.mark.parametrize("width", [0.0, -0.5])
def test_histogram_rejects_non_positive_width(width):
    with pytest.raises(ReportError):
        histogram([1.0], width, (0.0, 2.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-20.0, max_value=20.0), min_size=1, max_size=200))
def test_histogram_fractions_sum_to_one(values):
    bins = histogram(values, 0.25, (-5.0, 5.0))
    assert sum(b.count for b in bins) == len(values)
    assert sum(b.fraction for b in bins) == pytest.approx(1.0)


def test_band_share_sums_inner_bins():
    bins = histogram([0.5, 1.0, 1.5, 1.9, 2.0, 3.0], 0.25, (0.0, 6.0))
    assert band_share(bins, 1.0, 2.0) == pytest.approx(3 / 6)


def test_min_ttc_cdf_counts_strictly_below():
    cdf = dict(min_ttc_cdf([metrics(t) for t in (2.0, 4.0, 6.0, 8.0)], [5.0, 2.0, 10.0]))
    assert cdf[5.0] == 0.5
    assert cdf[2.0] == 0.0
    assert cdf[10.0] == 1.0


def test_min_ttc_cdf_undefined_ttc_stays_in_denominator():
    cdf = min_ttc_cdf([metrics(None), metrics(None), metrics(1.0), metrics(None)], [2.0, 20.0])
    assert [fraction for _, fraction in cdf] == [0.25, 0.25]
    assert [f for _, f in min_ttc_cdf([metrics(None)], [1.0, 5.0])] == [0.0, 0.0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.one_of(st.none(), st.floats(min_value=0.0, max_value=30.0)), min_size=1, max_size=40))
def test_min_ttc_cdf_is_monotone(ttcs):
    fractions = [f for _, f in min_ttc_cdf([metrics(t) for t in ttcs], range(1, 21))]
    assert fractions == sorted(fractions)
    assert all(0.0 <= f <= 1.0 for f in fractions)


def test_min_ttc_cdf_requires_events():
    with pytest.raises(ReportError):
        min_ttc_cdf([], [1.0])


def feedback_policy(state):
    """간격/속도 피드백 추종 (합성 데이터 운전자와 같은 형태)"""
    return 0.1 * (state.gap - 2.0 - 1.5 * state.follower_speed) + 0.6 * state.relative_speed


@pytest.fixture
def service():
    return ReportService(CarFollowingEnv(), EvaluationConfig(example_events=2))


def test_matching_policy_never_closes_in(service, constant_event):
    [result] = service.rollout_metrics(lambda state: 0.0, [constant_event])
    assert result.min_ttc is None
    assert not result.collided
    assert np.allclose(result.headways, 1.5)


def test_full_throttle_into_stopped_leader_collides(service, stopped_leader_event):
    [result] = service.rollout_metrics(lambda state: 3.0, [stopped_leader_event])
    assert result.collided


def test_replay_matches_recorded_metrics(service, varying_event, small_fleet):
    events = [varying_event] + small_fleet[:3]
    for replayed, recorded in zip(service.replay_metrics(events), service.recorded_metrics(events)):
        assert len(replayed.headways) == len(recorded.headways)
        assert np.allclose(replayed.headways, recorded.headways, atol=1e-6)
        assert np.allclose(replayed.jerks, recorded.jerks, atol=1e-6)
        assert np.allclose(replayed.times, recorded.times)
        assert replayed.mean_step_reward == pytest.approx(recorded.mean_step_reward, abs=1e-6)
        if recorded.min_ttc is None:
            assert replayed.min_ttc is None
        else:
            assert replayed.min_ttc == pytest.approx(recorded.min_ttc, rel=1e-6)


def test_recorded_metrics_are_cached(service, small_fleet):
    first = service.recorded_metrics(small_fleet)
    assert service.recorded_metrics(small_fleet) is first
    assert service.recorded_metrics(small_fleet[:2]) is not first


def test_recorded_jerk_alignment(service, varying_event):
    [result] = service.recorded_metrics([varying_event])
    a = varying_event.follower_acceleration
    assert result.jerks[0] == 0.0
    assert result.jerks[1] == pytest.approx((a[1] - a[0]) / 0.1)
    assert len(result.jerks) == len(varying_event) - 1


def test_build_report_requires_events(service):
    with pytest.raises(ReportError):
        service.build_comparison_report(lambda state: 0.0, [])


def test_comparison_report_tables_and_summary(service, small_fleet, tmp_path):
    events = small_fleet[:4]
    report = service.build_comparison_report(feedback_policy, events)

    assert report.event_count == 4
    assert [row[0] for row in report.min_ttc_cdf] == list(service.config.ttc_thresholds)
    summary = report.summary
    assert summary["event_count"] == 4
    kept = [m for m in report.simulated if not m.collided]
    assert summary["simulated_collisions"] == 4 - len(kept)

    pooled = [h for m in kept for h in m.headways]
    inside = sum(1 for h in pooled if 1.0 <= h < 2.0) / len(pooled)
    assert summary["simulated_headway_band_share"] == pytest.approx(inside)

    traced = {row["event_id"] for row in report.example_traces}
    assert traced == {e.event_id for e in events[:2]}
    assert {row["source"] for row in report.example_traces} == {TraceSources.SIMULATED, TraceSources.RECORDED}

    out = write_report(report, tmp_path / "report")
    for name in ReportFiles.TABLES:
        assert (out / name).exists()
    cdf = read_report_table(out / ReportFiles.MIN_TTC_CDF)
    assert list(cdf.columns) == list(ReportColumns.MIN_TTC_CDF)
    hist = read_report_table(out / ReportFiles.HEADWAY_SIMULATED)
    assert list(hist.columns) == list(ReportColumns.HISTOGRAM)
    assert hist["fraction"].sum() == pytest.approx(1.0)

    written = read_key_values(out / ReportFiles.SUMMARY, separator=":")
    assert int(written["event_count"]) == 4
    assert float(written["simulated_headway_band_share"]) == pytest.approx(inside)


def test_collided_events_leave_histograms(service, constant_event, stopped_leader_event):
    # 느린 차만 가속: 정지 선행차 이벤트만 충돌
    report = service.build_comparison_report(
        lambda state: 3.0 if state.follower_speed < 15.0 else 0.0, [constant_event, stopped_leader_event]
    )
    assert report.summary["simulated_collisions"] == 1
    simulated_count = sum(b.count for b in report.headway_simulated)
    recorded_count = sum(b.count for b in report.headway_recorded)
    assert simulated_count == len(report.simulated[0].headways)
    assert recorded_count == len(report.recorded[0].headways)



def test_sample_cdf_counts_strictly_below():
    assert sample_cdf([0.5, 1.0, 2.0, 3.0], [3.0, 1.0]) == [(1.0, 0.25), (3.0, 0.75)]
    assert sample_cdf([], [1.0, 2.0]) == [(1.0, 0.0), (2.0, 0.0)]


def test_recorded_distributions_tables(tmp_path, constant_event, varying_event):
    params = LognormalParams(math.log(1.5), 0.5)
    paths = write_recorded_distributions([constant_event], params, tmp_path)

    ttc = pd.read_csv(paths[FileNames.RECORDED_TTC_CDF])
    assert list(ttc.columns) == list(ReportColumns.SAMPLE_CDF)
    assert ttc["threshold"].tolist() == list(EvaluationConfig().ttc_thresholds)
    assert (ttc["fraction"] == 0.0).all()

    headway = pd.read_csv(paths[FileNames.RECORDED_HEADWAY_HIST])
    assert list(headway.columns) == list(ReportColumns.FITTED_HISTOGRAM)
    full = headway[headway["count"] > 0]
    assert len(full) == 1
    row = full.iloc[0]
    assert row["lower"] in (1.25, 1.5)
    assert row["count"] == len(constant_event)
    assert row["density"] == pytest.approx(4.0)
    assert row["fitted_density"] == pytest.approx(lognormal_pdf(row["center"], params))
    assert headway["density"].iloc[[0, -1]].isna().all()

    paths = write_recorded_distributions([constant_event, varying_event], params, tmp_path)
    fractions = pd.read_csv(paths[FileNames.RECORDED_TTC_CDF])["fraction"]
    assert fractions.is_monotonic_increasing
    assert fractions.iloc[-1] <= 1.0
