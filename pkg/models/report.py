# models/report.py
# 평가 지표와 비교 리포트 데이터 모델을 정의합니다.

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


@dataclass
class EventMetrics:
    """이벤트 하나에 대한 안전/효율/승차감 지표"""
    event_id: int
    min_ttc: Optional[float]
    headways: List[float] = field(default_factory=list)
    jerks: List[float] = field(default_factory=list)
    collided: bool = False
    mean_step_reward: float = 0.0
    times: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class HistogramBin:
    """고정 폭 히스토그램 구간 [lower, upper). 언더/오버플로 구간은 ±inf 경계를 가집니다."""
    lower: float
    upper: float
    center: float
    count: int
    fraction: float


@dataclass
class ComparisonReport:
    """시뮬레이션 후행차와 기록된 후행차의 비교 리포트"""
    simulated: List[EventMetrics]
    recorded: List[EventMetrics]
    min_ttc_cdf: List[Tuple[float, float, float]]          # (threshold, simulated, recorded)
    headway_simulated: List[HistogramBin]
    headway_recorded: List[HistogramBin]
    jerk_simulated: List[HistogramBin]
    jerk_recorded: List[HistogramBin]
    example_traces: List[Dict[str, float]]
    summary: Dict[str, float] = field(default_factory=dict)

    @property
    def event_count(self) -> int:
        return len(self.simulated)


@dataclass(frozen=True)
class OracleResult:
    """selftest 수치 검증 항목 하나의 결과"""
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
