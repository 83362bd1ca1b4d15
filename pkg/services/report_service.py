# services/report_service.py
# 평가 리포트: 정책 주행과 기록된 후행차를 같은 이벤트 집합에서 비교합니다.
# 최소 TTC 누적분포, 차두시간/저크 히스토그램, 예시 궤적, 요약 지표를 만들고 파일로 씁니다.

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import EvaluationConfig
from exceptions import ReportError
from models.report import ComparisonReport, EventMetrics, HistogramBin
from models.trajectory import CfEvent, LognormalParams
from utils.constants import FileNames, ReportColumns, ReportFiles, TraceSources
from utils.error_handler import handle_exceptions
from utils.io_utils import write_key_values
from utils.logger import LoggerMixin

from .env_service import CarFollowingEnv, Policy, replay_policy
from .reward_service import lognormal_pdf, time_to_collision
from .trajectory_service import headway_samples, ttc_samples

MIN_HEADWAY_SPEED = 0.1


def headway_of(gap: float, follower_speed: float, min_speed: float = MIN_HEADWAY_SPEED) -> float:
    """차두시간 = 간격 / 속도. 거의 정지(min_speed 미만)면 inf, 충돌(간격 <= 0)이면 0"""
    if gap <= 0:
        return 0.0
    if follower_speed < min_speed:
        return math.inf
    return gap / follower_speed


def _min_ttc(ttcs) -> Optional[float]:
    defined = [ttc for ttc in ttcs if ttc is not None]
    return min(defined) if defined else None


def metrics_from_rollout(log, start_time: float = 0.0, min_speed: float = MIN_HEADWAY_SPEED) -> EventMetrics:
    """시뮬레이션 로그 하나를 이벤트 지표로 요약합니다."""
    return EventMetrics(
        event_id=log.event_id,
        min_ttc=_min_ttc(step.ttc for step in log.steps),
        headways=[headway_of(step.gap, step.follower_speed, min_speed) for step in log.steps],
        jerks=[step.jerk for step in log.steps],
        collided=log.collided,
        mean_step_reward=log.mean_step_reward,
        times=[step.time - start_time for step in log.steps],
    )


def histogram(
    values: Sequence[float],
    bin_width: float,
    value_range: Tuple[float, float],
) -> List[HistogramBin]:
    """
    고정 폭 히스토그램. 구간은 왼쪽 닫힘 [lower, upper) 이고
    범위 밖 값은 양 끝의 언더플로/오버플로 구간에 셉니다. (inf 포함, NaN 은 제외)

    Returns:
        List[HistogramBin]: [언더플로, 일반 구간..., 오버플로]. 입력이 비면 count/fraction 모두 0
    """
    if bin_width <= 0:
        raise ReportError(f"히스토그램 구간 폭은 0보다 커야 합니다: {bin_width}")
    low, high = value_range
    n_bins = int(round((high - low) / bin_width))
    if n_bins < 1:
        raise ReportError(f"히스토그램 범위가 잘못되었습니다: {value_range}")

    data = np.asarray(values, dtype=float)
    data = data[~np.isnan(data)]
    edges = low + bin_width * np.arange(n_bins + 1)

    index = np.empty(len(data), dtype=int)
    under = data < low
    over = data >= edges[-1]
    inside = ~(under | over)
    index[under] = 0
    index[over] = n_bins + 1
    # 경계값 반올림 오차 보정: 계산된 구간이 실제 경계와 맞지 않으면 한 칸 이동
    raw = np.floor((data[inside] - low) / bin_width).astype(int) + 1
    raw = np.clip(raw, 1, n_bins)
    raw[data[inside] < edges[raw - 1]] -= 1
    raw[data[inside] >= edges[np.minimum(raw, n_bins)]] += 1
    index[inside] = np.clip(raw, 1, n_bins)

    counts = np.bincount(index, minlength=n_bins + 2)
    total = counts.sum()
    lowers = np.concatenate([[-np.inf], edges[:-1], [edges[-1]]])
    uppers = np.concatenate([[edges[0]], edges[1:], [np.inf]])
    bins = []
    for lower, upper, count in zip(lowers, uppers, counts):
        center = (lower + upper) / 2.0 if np.isfinite(lower) and np.isfinite(upper) else math.nan
        bins.append(HistogramBin(
            lower=float(lower),
            upper=float(upper),
            center=float(center),
            count=int(count),
            fraction=float(count / total) if total else 0.0,
        ))
    return bins


def band_share(bins: Sequence[HistogramBin], low: float, high: float, tol: float = 1e-9) -> float:
    """[low, high) 안에 완전히 들어가는 구간들의 비율 합"""
    return float(sum(b.fraction for b in bins if b.lower >= low - tol and b.upper <= high + tol))


def min_ttc_cdf(metrics: Sequence[EventMetrics], thresholds: Sequence[float]) -> List[Tuple[float, float]]:
    """
    임계값별로 최소 TTC 가 그 값보다 작은 이벤트 비율.
    최소 TTC 가 정의되지 않은(한 번도 접근하지 않은) 이벤트도 분모에 포함합니다.
    """
    if not metrics:
        raise ReportError("최소 TTC 분포를 계산할 이벤트가 없습니다")
    defined = np.array([m.min_ttc for m in metrics if m.min_ttc is not None], dtype=float)
    n = len(metrics)
    return [(float(t), float(np.count_nonzero(defined < t)) / n) for t in sorted(thresholds)]


def sample_cdf(values: Sequence[float], thresholds: Sequence[float]) -> List[Tuple[float, float]]:
    """임계값별로 표본이 그 값보다 작은 비율. 표본이 없으면 모두 0"""
    data = np.asarray(values, dtype=float)
    n = data.size
    return [(float(t), float(np.count_nonzero(data < t)) / n if n else 0.0) for t in sorted(thresholds)]


class ReportService(LoggerMixin):
    """정책 주행 지표와 기록된 후행차 지표를 계산해 비교 리포트를 만드는 서비스"""

    def __init__(self, env: Optional[CarFollowingEnv] = None, config: Optional[EvaluationConfig] = None):
        self.env = env or CarFollowingEnv()
        self.config = config or EvaluationConfig()
        self._recorded_cache: Dict[tuple, List[EventMetrics]] = {}

    def rollout_metrics(self, policy: Policy, events: Sequence[CfEvent]) -> List[EventMetrics]:
        """이벤트마다 env.run_event 로 주행하고 지표를 계산합니다."""
        return [
            metrics_from_rollout(self.env.run_event(policy, event), float(event.times[0]))
            for event in events
        ]

    def replay_metrics(self, events: Sequence[CfEvent]) -> List[EventMetrics]:
        """기록된 가속도를 그대로 재생한 주행의 지표"""
        return [
            metrics_from_rollout(self.env.run_event(replay_policy(event), event), float(event.times[0]))
            for event in events
        ]

    def recorded_metrics(self, events: Sequence[CfEvent]) -> List[EventMetrics]:
        """
        기록된 후행차의 지표 (정책과 무관하므로 이벤트 집합마다 한 번만 계산)

        시뮬레이션 로그와 같은 정렬을 씁니다: k번째 행은 샘플 k의 상태와
        구간 [k-1, k] 에 적용된 가속도 a[k-1] 의 저크 (a[k-1] - a[k-2]) / dt 를 가집니다.
        """
        key = tuple((e.event_id, e.leader_id, e.follower_id, len(e)) for e in events)
        if key not in self._recorded_cache:
            self._recorded_cache[key] = [self._recorded_event_metrics(event) for event in events]
        return self._recorded_cache[key]

    def _recorded_event_metrics(self, event: CfEvent) -> EventMetrics:
        dt = event.dt
        speeds = event.follower_speed
        leader_speeds = event.leader_speed
        accelerations = event.follower_acceleration
        gaps = event.gap
        start = float(event.times[0])

        headways, jerks, ttcs, rewards, times = [], [], [], [], []
        collided = False
        for k in range(1, len(event)):
            jerk = 0.0 if k == 1 else (accelerations[k - 1] - accelerations[k - 2]) / dt
            gap = float(gaps[k])
            if gap <= 0:
                collided = True
                rewards.append(self.env.reward.collision(jerk).total)
                ttcs.append(None)
            else:
                ttcs.append(time_to_collision(gap, float(speeds[k]), float(leader_speeds[k])))
                rewards.append(self.env.reward.step(gap, float(speeds[k]), float(leader_speeds[k]), jerk).total)
            headways.append(headway_of(gap, float(speeds[k])))
            jerks.append(float(jerk))
            times.append(float(event.times[k]) - start)
            if collided:
                break

        return EventMetrics(
            event_id=event.event_id,
            min_ttc=_min_ttc(ttcs),
            headways=headways,
            jerks=jerks,
            collided=collided,
            mean_step_reward=sum(rewards) / len(rewards) if rewards else 0.0,
            times=times,
        )

    def example_traces(self, policy: Policy, events: Sequence[CfEvent]) -> List[Dict[str, float]]:
        """앞쪽 example_events 개 이벤트의 시뮬레이션/기록 궤적 (그림용 행 데이터)"""
        rows: List[Dict[str, float]] = []
        for event in list(events)[: self.config.example_events]:
            start = float(event.times[0])
            log = self.env.run_event(policy, event)
            for step in log.steps:
                rows.append({
                    "event_id": event.event_id,
                    "source": TraceSources.SIMULATED,
                    "time": step.time - start,
                    "leader_speed": step.leader_speed,
                    "follower_speed": step.follower_speed,
                    "gap": step.gap,
                    "headway": headway_of(step.gap, step.follower_speed),
                    "acceleration": step.action,
                    "jerk": step.jerk,
                })
            accelerations = event.follower_acceleration
            for k in range(1, len(event)):
                rows.append({
                    "event_id": event.event_id,
                    "source": TraceSources.RECORDED,
                    "time": float(event.times[k]) - start,
                    "leader_speed": float(event.leader_speed[k]),
                    "follower_speed": float(event.follower_speed[k]),
                    "gap": float(event.gap[k]),
                    "headway": headway_of(float(event.gap[k]), float(event.follower_speed[k])),
                    "acceleration": float(accelerations[k - 1]),
                    "jerk": 0.0 if k == 1 else float((accelerations[k - 1] - accelerations[k - 2]) / event.dt),
                })
        return rows

    @handle_exceptions(default_message="평가 리포트 생성에 실패했습니다")
    def build_comparison_report(self, policy: Policy, events: Sequence[CfEvent]) -> ComparisonReport:
        """
        정책 주행과 기록 주행을 같은 이벤트 집합에서 비교합니다.
        시뮬레이션에서 충돌한 이벤트는 양쪽 히스토그램에서 모두 제외하고 따로 셉니다.

        Raises:
            ReportError: 이벤트가 없는 경우
        """
        if not events:
            raise ReportError("평가할 이벤트가 없습니다")
        cfg = self.config
        simulated = self.rollout_metrics(policy, events)
        recorded = self.recorded_metrics(events)

        kept = [i for i, m in enumerate(simulated) if not m.collided]
        if len(kept) < len(simulated):
            self.log_warning(f"시뮬레이션 충돌 이벤트 {len(simulated) - len(kept)}개를 히스토그램에서 제외합니다")

        def pooled(metrics: List[EventMetrics], attribute: str) -> List[float]:
            return [value for i in kept for value in getattr(metrics[i], attribute)]

        headway_range = (cfg.headway_min, cfg.headway_max)
        jerk_range = (cfg.jerk_min, cfg.jerk_max)
        headway_sim = histogram(pooled(simulated, "headways"), cfg.headway_bin_width, headway_range)
        headway_rec = histogram(pooled(recorded, "headways"), cfg.headway_bin_width, headway_range)
        jerk_sim = histogram(pooled(simulated, "jerks"), cfg.jerk_bin_width, jerk_range)
        jerk_rec = histogram(pooled(recorded, "jerks"), cfg.jerk_bin_width, jerk_range)

        cdf_sim = min_ttc_cdf(simulated, cfg.ttc_thresholds)
        cdf_rec = min_ttc_cdf(recorded, cfg.ttc_thresholds)
        cdf = [(t, s, r) for (t, s), (_, r) in zip(cdf_sim, cdf_rec)]

        report = ComparisonReport(
            simulated=simulated,
            recorded=recorded,
            min_ttc_cdf=cdf,
            headway_simulated=headway_sim,
            headway_recorded=headway_rec,
            jerk_simulated=jerk_sim,
            jerk_recorded=jerk_rec,
            example_traces=self.example_traces(policy, events),
        )
        report.summary = self._summary(report, kept)
        return report

    def _summary(self, report: ComparisonReport, kept: List[int]) -> Dict[str, float]:
        cfg = self.config
        threshold = cfg.min_ttc_threshold
        n = report.event_count

        def below(metrics: List[EventMetrics]) -> float:
            return sum(1 for m in metrics if m.min_ttc is not None and m.min_ttc < threshold) / n

        def warm_share(metrics: List[EventMetrics]) -> float:
            values = [
                h for i in kept
                for h, t in zip(metrics[i].headways, metrics[i].times)
                if t >= cfg.warmup_seconds
            ]
            if not values:
                return 0.0
            inside = sum(1 for h in values if cfg.headway_band_low <= h < cfg.headway_band_high)
            return inside / len(values)

        def jerk_extent(metrics: List[EventMetrics]) -> Tuple[float, float]:
            values = [j for i in kept for j in metrics[i].jerks]
            return (min(values), max(values)) if values else (0.0, 0.0)

        sim_jerk = jerk_extent(report.simulated)
        rec_jerk = jerk_extent(report.recorded)
        return {
            "event_count": n,
            "simulated_collisions": sum(1 for m in report.simulated if m.collided),
            "recorded_collisions": sum(1 for m in report.recorded if m.collided),
            "simulated_min_ttc_below_threshold": below(report.simulated),
            "recorded_min_ttc_below_threshold": below(report.recorded),
            "min_ttc_threshold": threshold,
            "simulated_headway_band_share": band_share(report.headway_simulated, cfg.headway_band_low, cfg.headway_band_high),
            "recorded_headway_band_share": band_share(report.headway_recorded, cfg.headway_band_low, cfg.headway_band_high),
            "simulated_headway_band_share_after_warmup": warm_share(report.simulated),
            "recorded_headway_band_share_after_warmup": warm_share(report.recorded),
            "headway_band_low": cfg.headway_band_low,
            "headway_band_high": cfg.headway_band_high,
            "simulated_jerk_min": sim_jerk[0],
            "simulated_jerk_max": sim_jerk[1],
            "recorded_jerk_min": rec_jerk[0],
            "recorded_jerk_max": rec_jerk[1],
            "simulated_mean_step_reward": float(np.mean([m.mean_step_reward for m in report.simulated])),
            "recorded_mean_step_reward": float(np.mean([m.mean_step_reward for m in report.recorded])),
        }


def _histogram_frame(bins: Sequence[HistogramBin]) -> pd.DataFrame:
    return pd.DataFrame(
        [(b.lower, b.upper, b.center, b.count, b.fraction) for b in bins],
        columns=list(ReportColumns.HISTOGRAM),
    )


def write_report(report: ComparisonReport, out_dir: Union[str, Path]) -> Path:
    """
    리포트 테이블 6개와 요약 파일을 out_dir 아래에 씁니다.

    Raises:
        ReportError: 이벤트가 없거나 디렉토리에 쓸 수 없는 경우
    """
    if report.event_count == 0:
        raise ReportError("이벤트가 없는 리포트는 쓰지 않습니다")
    out_dir = Path(out_dir)
    tables = {
        ReportFiles.MIN_TTC_CDF: pd.DataFrame(report.min_ttc_cdf, columns=list(ReportColumns.MIN_TTC_CDF)),
        ReportFiles.HEADWAY_SIMULATED: _histogram_frame(report.headway_simulated),
        ReportFiles.HEADWAY_RECORDED: _histogram_frame(report.headway_recorded),
        ReportFiles.JERK_SIMULATED: _histogram_frame(report.jerk_simulated),
        ReportFiles.JERK_RECORDED: _histogram_frame(report.jerk_recorded),
        ReportFiles.EXAMPLE_TRACES: pd.DataFrame(report.example_traces, columns=list(ReportColumns.EXAMPLE_TRACES)),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, frame in tables.items():
            frame.to_csv(out_dir / name, index=False, float_format="%.17g")
        write_key_values(out_dir / ReportFiles.SUMMARY, report.summary.items(), separator=": ")
    except OSError as e:
        raise ReportError(f"리포트를 쓸 수 없습니다: {out_dir} ({e})") from e
    return out_dir


def read_report_table(path: Union[str, Path]) -> pd.DataFrame:
    """write_report 가 쓴 테이블을 다시 읽습니다."""
    return pd.read_csv(path, float_precision="round_trip")


def write_recorded_distributions(
    events: Sequence[CfEvent],
    params: LognormalParams,
    out_dir: Union[str, Path],
    config: Optional[EvaluationConfig] = None,
) -> Dict[str, Path]:
    """
    기록된 후행차의 시점별 TTC 누적분포와, 추정된 로그정규 밀도를 곁들인 차두시간 히스토그램을 씁니다.

    Raises:
        ReportError: 디렉토리에 쓸 수 없는 경우
    """
    config = config or EvaluationConfig()
    out_dir = Path(out_dir)

    ttc_cdf = pd.DataFrame(
        sample_cdf(ttc_samples(events), config.ttc_thresholds),
        columns=list(ReportColumns.SAMPLE_CDF),
    )
    width = config.headway_bin_width
    bins = histogram(headway_samples(events, MIN_HEADWAY_SPEED), width, (config.headway_min, config.headway_max))
    headway = _histogram_frame(bins)
    headway["density"] = headway["fraction"] / width
    headway["fitted_density"] = [
        lognormal_pdf(b.center, params) if math.isfinite(b.center) else math.nan for b in bins
    ]
    # 언더/오버플로 구간은 폭이 무한대라 밀도가 없음
    headway.loc[~np.isfinite(headway["center"]), "density"] = math.nan

    paths = {
        FileNames.RECORDED_TTC_CDF: out_dir / FileNames.RECORDED_TTC_CDF,
        FileNames.RECORDED_HEADWAY_HIST: out_dir / FileNames.RECORDED_HEADWAY_HIST,
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        ttc_cdf.to_csv(paths[FileNames.RECORDED_TTC_CDF], index=False, float_format="%.17g")
        headway[list(ReportColumns.FITTED_HISTOGRAM)].to_csv(
            paths[FileNames.RECORDED_HEADWAY_HIST], index=False, float_format="%.17g",
        )
    except OSError as e:
        raise ReportError(f"분포 테이블을 쓸 수 없습니다: {out_dir} ({e})") from e
    return paths
