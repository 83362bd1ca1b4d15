from typing import Dict, List, Optional, Sequence

import numpy as np

from models.report import ComparisonReport, OracleResult
from models.trajectory import CfEvent, LognormalParams
from models.training import TrainingResult


def build_extraction_summary(events: Sequence[CfEvent], rejected_rows: int = 0, total_rows: int = 0) -> Dict[str, object]:
    """
    이벤트 추출 결과 요약 항목을 만듭니다.

    Args:
        events: 추출된 이벤트
        rejected_rows: 파싱 단계에서 버린 행 수
        total_rows: 파일의 전체 행 수
    """
    durations = np.array([event.duration for event in events], dtype=float)
    summary: Dict[str, object] = {
        "events": len(events),
        "total_rows": total_rows,
        "rejected_rows": rejected_rows,
    }
    if len(durations):
        summary.update({
            "duration_min": float(durations.min()),
            "duration_mean": float(durations.mean()),
            "duration_max": float(durations.max()),
            "duration_total": float(durations.sum()),
        })
    return summary


def build_extraction_text(summary: Dict[str, object]) -> str:
    lines = [f"{summary['events']} events"]
    if "duration_mean" in summary:
        lines.append(
            f"  기간(초) 최소 {summary['duration_min']:.1f} / 평균 {summary['duration_mean']:.1f} "
            f"/ 최대 {summary['duration_max']:.1f}, 합계 {summary['duration_total'] / 3600.0:.2f}시간"
        )
    if summary.get("rejected_rows"):
        lines.append(f"  제외된 행 {summary['rejected_rows']}개 / 전체 {summary['total_rows']}개")
    return "\n".join(lines)


def build_headway_fit_text(params: LognormalParams, samples: int, ttc_limit: Optional[float]) -> str:
    """차두시간 분포 추정 결과"""
    text = (
        f"lognormal mu={params.mu:.4f} sigma={params.sigma:.4f} "
        f"(최빈값 {params.mode:.2f}초, 표본 {samples}개)"
    )
    if ttc_limit is not None:
        text += f"\n  TTC 10% 분위수 {ttc_limit:.2f}초"
    return text


def build_training_text(result: TrainingResult, train_count: int, test_count: int) -> str:
    """학습 결과 요약: 분할 크기, 최고 평가 보상과 그 에피소드"""
    lines = [f"학습 이벤트 {train_count}개 / 평가 이벤트 {test_count}개"]
    if not result.curve:
        lines.append("  에피소드 0회 - 초기 네트워크를 저장했습니다")
        return "\n".join(lines)
    last = result.curve[-1]
    lines.append(
        f"  최고 평가 평균 보상 {result.best_eval_reward:.4f} (에피소드 {result.best_episode}), "
        f"마지막 에피소드 학습 {last.train_mean_step_reward:.4f} / 평가 {last.eval_mean_step_reward:.4f}"
    )
    return "\n".join(lines)


def build_report_text(report: ComparisonReport) -> str:
    """평가 리포트 요약 (시뮬레이션 vs 기록)"""
    s = report.summary
    threshold = s.get("min_ttc_threshold", 5.0)
    low, high = s.get("headway_band_low", 1.0), s.get("headway_band_high", 2.0)
    rows = [
        ("최소 TTC < %gs 비율" % threshold, s["simulated_min_ttc_below_threshold"], s["recorded_min_ttc_below_threshold"]),
        ("차두시간 [%g, %g)s 비율" % (low, high), s["simulated_headway_band_share"], s["recorded_headway_band_share"]),
        ("평균 스텝 보상", s["simulated_mean_step_reward"], s["recorded_mean_step_reward"]),
    ]
    lines = [f"이벤트 {report.event_count}개 (시뮬레이션 충돌 {s['simulated_collisions']}건)"]
    lines.append(f"  {'항목':<24}{'시뮬레이션':>12}{'기록':>12}")
    for label, simulated, recorded in rows:
        lines.append(f"  {label:<24}{simulated:>12.4f}{recorded:>12.4f}")
    lines.append(
        f"  저크 범위 시뮬레이션 [{s['simulated_jerk_min']:.2f}, {s['simulated_jerk_max']:.2f}] "
        f"/ 기록 [{s['recorded_jerk_min']:.2f}, {s['recorded_jerk_max']:.2f}] m/s^3"
    )
    return "\n".join(lines)


def build_selftest_text(results: List[OracleResult]) -> str:
    """selftest 결과 표"""
    lines = []
    for result in results:
        mark = "PASS" if result.passed else "FAIL"
        lines.append(f"[{mark}] {result.name:<16} {result.seconds:6.2f}s  {result.detail}")
    passed = sum(1 for r in results if r.passed)
    lines.append(f"{passed}/{len(results)} 통과")
    return "\n".join(lines)
