# models/__init__.py
# 데이터 모델과 타입 정의를 담당하는 패키지입니다.

from .trajectory import TrajectorySample, CfEvent, LognormalParams, ParseResult
from .simulation import (
    CfState,
    RewardBreakdown,
    RewardWeights,
    RolloutLog,
    RolloutStep,
    StepOutcome,
    TerminalReason,
)
from .network import AdamState, ForwardCache, Gradients, MlpParams, OutputActivation
from .training import AgentSnapshot, CurvePoint, OuNoiseState, TrainingResult, Transition, TransitionBatch
from .report import ComparisonReport, EventMetrics, HistogramBin, OracleResult

__all__ = [
    "TrajectorySample",
    "CfEvent",
    "LognormalParams",
    "ParseResult",
    "CfState",
    "RewardBreakdown",
    "RewardWeights",
    "RolloutLog",
    "RolloutStep",
    "StepOutcome",
    "TerminalReason",
    "AdamState",
    "ForwardCache",
    "Gradients",
    "MlpParams",
    "OutputActivation",
    "AgentSnapshot",
    "CurvePoint",
    "OuNoiseState",
    "TrainingResult",
    "Transition",
    "TransitionBatch",
    "ComparisonReport",
    "EventMetrics",
    "HistogramBin",
    "OracleResult",
]
