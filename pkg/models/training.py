# models/training.py
# DDPG 학습 관련 데이터 모델(전이, 노이즈 상태, 학습 곡선, 학습 결과)을 정의합니다.

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .network import MlpParams
from .simulation import CfState


@dataclass(frozen=True)
class Transition:
    """리플레이 버퍼 레코드 (s, a, r, s', terminal). 정규화된 상태도 함께 저장합니다."""
    state: CfState
    action: float
    reward: float
    next_state: CfState
    terminal: bool
    state_norm: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    next_state_norm: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass
class TransitionBatch:
    """미니배치를 배열 형태로 묶은 것 (신경망 갱신에 사용)"""
    states: np.ndarray        # (N, state_dim) 정규화된 상태
    actions: np.ndarray       # (N,) m/s^2
    rewards: np.ndarray       # (N,)
    next_states: np.ndarray   # (N, state_dim) 정규화된 상태
    terminals: np.ndarray     # (N,) bool

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class OuNoiseState:
    """Ornstein-Uhlenbeck 노이즈 상태"""
    value: float = 0.0
    theta: float = 0.15
    sigma: float = 0.2
    mu: float = 0.0


@dataclass
class AgentSnapshot:
    """액터/크리틱과 타깃 네트워크의 스냅샷 (체크포인트 단위)"""
    actor: MlpParams
    critic: MlpParams
    actor_target: MlpParams
    critic_target: MlpParams
    episode: int = 0

    def copy(self) -> "AgentSnapshot":
        return AgentSnapshot(
            actor=self.actor.copy(),
            critic=self.critic.copy(),
            actor_target=self.actor_target.copy(),
            critic_target=self.critic_target.copy(),
            episode=self.episode,
        )


@dataclass(frozen=True)
class CurvePoint:
    """에피소드별 평균 스텝 보상"""
    episode: int
    train_mean_step_reward: float
    eval_mean_step_reward: float


@dataclass
class TrainingResult:
    """학습 결과: 테스트 평균 스텝 보상이 최대인 체크포인트와 전체 곡선"""
    best: AgentSnapshot
    final: AgentSnapshot
    curve: List[CurvePoint] = field(default_factory=list)
    best_episode: int = 0

    @property
    def best_eval_reward(self) -> Optional[float]:
        if not self.curve:
            return None
        return max(point.eval_mean_step_reward for point in self.curve)
