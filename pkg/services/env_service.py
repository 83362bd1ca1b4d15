# services/env_service.py
# 차량 추종 시뮬레이션 환경: 질점 운동학 상태 갱신과 에피소드 수명 주기를 담당합니다.
# 선행차 속도는 이벤트 기록을 그대로 재생하며 시뮬레이션된 후행차가 선행차에 영향을 주지 않습니다.

from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd

from exceptions import LifecycleError
from models.simulation import CfState, RolloutLog, RolloutStep, StepOutcome, TerminalReason
from models.trajectory import CfEvent
from utils.constants import RolloutColumns
from utils.logger import LoggerMixin

from .reward_service import RewardCalculator, time_to_collision

Policy = Callable[[CfState], float]


class CarFollowingEnv(LoggerMixin):
    """
    상태 갱신 (dt 간격):
        V'  = max(V + a·dt, 0)
        ΔV' = V_leader(t+1) − V'
        S'  = S + (ΔV + ΔV')/2 · dt
    보상은 갱신 후 상태와 이번 스텝의 저크 (a − a_prev)/dt 로 계산합니다.
    """

    def __init__(
        self,
        reward: Optional[RewardCalculator] = None,
        dt: float = 0.1,
        max_acceleration: float = 3.0,
    ):
        self.reward = reward or RewardCalculator()
        self.dt = dt
        self.max_acceleration = max_acceleration

    def reset(self, event: CfEvent) -> CfState:
        """이벤트 첫 샘플의 후행차 속도, 간격, 상대 속도, 가속도로 상태를 초기화합니다."""
        first = event.follower[0]
        return CfState(
            follower_speed=float(first.speed),
            relative_speed=float(event.leader[0].speed - first.speed),
            gap=float(event.gap[0]),
            prev_acceleration=float(first.acceleration),
            step_index=0,
            terminal=len(event) < 2,
        )

    def step(
        self,
        state: CfState,
        action_acceleration: float,
        event: CfEvent,
        dt: Optional[float] = None,
    ) -> StepOutcome:
        """
        한 스텝 진행합니다.

        Raises:
            LifecycleError: 이미 종료된 상태에서 호출한 경우
        """
        if state.terminal:
            raise LifecycleError(f"이벤트 {event.event_id}: 종료된 상태에서는 step 을 호출할 수 없습니다")
        k = state.step_index
        if k + 1 >= len(event):
            raise LifecycleError(f"이벤트 {event.event_id}: 샘플이 모두 소진되었습니다 (step_index={k})")
        dt = self.dt if dt is None else dt

        action = float(np.clip(action_acceleration, -self.max_acceleration, self.max_acceleration))
        follower_speed = state.follower_speed + action * dt
        if follower_speed < 0.0:
            follower_speed = 0.0
        leader_speed = float(event.leader_speed[k + 1])
        relative_speed = leader_speed - follower_speed
        gap = state.gap + (state.relative_speed + relative_speed) / 2.0 * dt

        if state.prev_acceleration is None:
            jerk = 0.0
        else:
            jerk = (action - state.prev_acceleration) / dt

        ttc = None
        if gap <= 0.0:
            reward = self.reward.collision(jerk)
            reason = TerminalReason.COLLISION
        else:
            ttc = time_to_collision(gap, follower_speed, leader_speed)
            reward = self.reward.step(gap, follower_speed, leader_speed, jerk)
            reason = TerminalReason.EVENT_END if k + 1 >= len(event) - 1 else None

        terminal = reason is not None
        next_state = CfState(
            follower_speed=follower_speed,
            relative_speed=relative_speed,
            gap=gap,
            prev_acceleration=action,
            step_index=k + 1,
            terminal=terminal,
        )
        return StepOutcome(
            next_state=next_state,
            reward=reward,
            terminal=terminal,
            terminal_reason=reason,
            action=action,
            jerk=jerk,
            leader_speed=leader_speed,
            ttc=ttc,
        )

    def run_event(self, policy: Policy, event: CfEvent) -> RolloutLog:
        """정책으로 이벤트 하나를 끝까지(또는 충돌까지) 주행하고 스텝별 로그를 반환합니다."""
        state = self.reset(event)
        log = RolloutLog(event_id=event.event_id, initial_state=state)
        times = event.times

        while not state.terminal:
            outcome = self.step(state, float(policy(state)), event)
            state = outcome.next_state
            log.steps.append(RolloutStep(
                step=state.step_index,
                time=float(times[state.step_index]),
                leader_speed=outcome.leader_speed,
                follower_speed=state.follower_speed,
                gap=state.gap,
                action=outcome.action,
                jerk=outcome.jerk,
                reward=outcome.reward,
                ttc=outcome.ttc,
            ))
            log.terminal_reason = outcome.terminal_reason

        if log.collided:
            self.log_warning(f"이벤트 {event.event_id}: {len(log)}번째 스텝에서 충돌")
        return log


def replay_policy(event: CfEvent) -> Policy:
    """기록된 후행차 가속도를 그대로 재생하는 정책"""
    accelerations = event.follower_acceleration
    return lambda state: float(accelerations[state.step_index])


def rollout_frame(log: RolloutLog) -> pd.DataFrame:
    """시뮬레이션 로그를 RolloutColumns 순서의 테이블로 변환합니다."""
    return pd.DataFrame([step.as_row() for step in log.steps], columns=list(RolloutColumns.ORDER))


def write_rollout_log(log: RolloutLog, path: Union[str, Path]) -> Path:
    """스텝별 시뮬레이션 로그를 구분자 텍스트 테이블로 저장합니다."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rollout_frame(log).to_csv(path, index=False)
    return path
