# models/simulation.py
# 차량 추종 시뮬레이션 상태, 보상, 스텝 결과 관련 데이터 모델을 정의합니다.

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional


class TerminalReason(Enum):
    """에피소드 종료 사유"""
    EVENT_END = "event_end"
    COLLISION = "collision"


@dataclass(frozen=True)
class RewardWeights:
    """보상 특징량 가중치 (모두 0 이상)"""
    w_ttc: float = 1.0
    w_headway: float = 1.0
    w_jerk: float = 1.0

    def __post_init__(self):
        if min(self.w_ttc, self.w_headway, self.w_jerk) < 0:
            raise ValueError(f"보상 가중치는 0 이상이어야 합니다: {self}")


@dataclass(frozen=True)
class RewardBreakdown:
    """한 스텝의 보상 특징량과 합계"""
    f_ttc: float
    f_headway: float
    f_jerk: float
    total: float


@dataclass(frozen=True)
class CfState:
    """
    강화학습 상태 (후행차 속도, 상대 속도, 간격) + 저크 계산용 부가 정보

    prev_acceleration 이 None 이면 직전 가속도를 모르는 것으로 보고 저크를 0으로 둡니다.
    """
    follower_speed: float
    relative_speed: float
    gap: float
    prev_acceleration: Optional[float] = None
    step_index: int = 0
    terminal: bool = False


@dataclass(frozen=True)
class StepOutcome:
    """env.step 의 결과"""
    next_state: CfState
    reward: RewardBreakdown
    terminal: bool
    terminal_reason: Optional[TerminalReason] = None
    action: float = 0.0
    jerk: float = 0.0
    leader_speed: float = 0.0
    ttc: Optional[float] = None


@dataclass(frozen=True)
class RolloutStep:
    """시뮬레이션 로그 한 줄"""
    step: int
    time: float
    leader_speed: float
    follower_speed: float
    gap: float
    action: float
    jerk: float
    reward: RewardBreakdown
    ttc: Optional[float] = None

    def as_row(self) -> dict:
        """RolloutColumns 순서의 딕셔너리로 변환"""
        return {
            "step": self.step,
            "time": self.time,
            "leader_speed": self.leader_speed,
            "follower_speed": self.follower_speed,
            "gap": self.gap,
            "action": self.action,
            "jerk": self.jerk,
            "f_ttc": self.reward.f_ttc,
            "f_headway": self.reward.f_headway,
            "f_jerk": self.reward.f_jerk,
            "reward": self.reward.total,
        }


@dataclass
class RolloutLog:
    """이벤트 하나를 정책으로 주행한 결과 로그"""
    event_id: int
    initial_state: CfState
    steps: List[RolloutStep] = field(default_factory=list)
    terminal_reason: Optional[TerminalReason] = None

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def collided(self) -> bool:
        return self.terminal_reason is TerminalReason.COLLISION

    @property
    def total_reward(self) -> float:
        return sum(step.reward.total for step in self.steps)

    @property
    def mean_step_reward(self) -> float:
        return self.total_reward / len(self.steps) if self.steps else 0.0
