# services/reward_service.py
# 안전(TTC), 효율(차두시간), 승차감(저크) 특징량과 그 선형 결합 보상을 계산합니다.
# 모든 함수는 상태가 없는 순수 함수입니다.

import math
from typing import Optional

from config import RewardConfig
from exceptions import CollisionStateError
from models.simulation import RewardBreakdown, RewardWeights
from models.trajectory import LognormalParams

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def time_to_collision(gap: float, follower_speed: float, leader_speed: float) -> Optional[float]:
    """
    충돌까지 남은 시간 = 간격 / 접근 속도. 후행차가 더 빠를 때만 정의됩니다.

    Raises:
        CollisionStateError: gap <= 0 인 경우
    """
    if gap <= 0:
        raise CollisionStateError(f"간격이 0 이하인 상태에서는 TTC 를 계산할 수 없습니다: gap={gap}")
    closing_speed = follower_speed - leader_speed
    if closing_speed <= 0:
        return None
    return gap / closing_speed


def ttc_feature(ttc: Optional[float], safety_limit: float = 7.0, floor_ttc: float = 0.1) -> float:
    """ln(TTC / 안전 한계) (0 <= TTC <= 한계), 그 외 0. TTC 는 floor_ttc 아래로 내려가지 않게 자릅니다."""
    if ttc is None or ttc < 0 or ttc > safety_limit:
        return 0.0
    return math.log(max(ttc, floor_ttc) / safety_limit)


def lognormal_pdf(x: float, params: LognormalParams) -> float:
    """로그정규 확률밀도. x <= 0 이면 0"""
    if x <= 0:
        return 0.0
    z = (math.log(x) - params.mu) / params.sigma
    return math.exp(-0.5 * z * z) / (x * params.sigma * SQRT_TWO_PI)


def headway_feature(headway: float, params: LognormalParams = LognormalParams()) -> float:
    """차두시간 특징량 = 추정된 차두시간 분포의 밀도값"""
    return lognormal_pdf(headway, params)


def jerk_feature(jerk: float, base: float = 3600.0) -> float:
    """저크 제곱 / 3600 (가속도 ±3, 0.1초 간격에서 최대 저크 60의 제곱)"""
    return jerk * jerk / base


def step_reward(
    gap: float,
    follower_speed: float,
    leader_speed: float,
    jerk: float,
    weights: RewardWeights = RewardWeights(),
    params: LognormalParams = LognormalParams(),
    safety_limit: float = 7.0,
    floor_ttc: float = 0.1,
    jerk_base: float = 3600.0,
) -> RewardBreakdown:
    """
    r = w_ttc·F_ttc + w_headway·F_headway − w_jerk·F_jerk

    Raises:
        CollisionStateError: gap <= 0 인 경우 (환경에서 충돌 종료로 처리)
    """
    f_ttc = ttc_feature(time_to_collision(gap, follower_speed, leader_speed), safety_limit, floor_ttc)
    headway = gap / follower_speed if follower_speed > 0 else math.inf
    f_headway = headway_feature(headway, params) if math.isfinite(headway) else 0.0
    f_jerk = jerk_feature(jerk, jerk_base)
    total = weights.w_ttc * f_ttc + weights.w_headway * f_headway - weights.w_jerk * f_jerk
    return RewardBreakdown(f_ttc=f_ttc, f_headway=f_headway, f_jerk=f_jerk, total=total)


def collision_reward(
    jerk: float,
    weights: RewardWeights = RewardWeights(),
    safety_limit: float = 7.0,
    floor_ttc: float = 0.1,
    jerk_base: float = 3600.0,
) -> RewardBreakdown:
    """충돌 스텝의 보상: TTC 특징량은 바닥값 ln(floor/limit), 차두시간 특징량 0"""
    f_ttc = math.log(floor_ttc / safety_limit)
    f_jerk = jerk_feature(jerk, jerk_base)
    total = weights.w_ttc * f_ttc - weights.w_jerk * f_jerk
    return RewardBreakdown(f_ttc=f_ttc, f_headway=0.0, f_jerk=f_jerk, total=total)


class RewardCalculator:
    """설정값을 묶어 두고 스텝 보상을 계산하는 헬퍼"""

    def __init__(self, config: Optional[RewardConfig] = None, params: Optional[LognormalParams] = None):
        """
        Args:
            config: 보상 설정 (가중치, TTC 안전 한계/바닥값, 저크 기준값)
            params: 차두시간 로그정규 파라미터 (None이면 config 의 mu/sigma)
        """
        self.config = config or RewardConfig()
        self.weights = RewardWeights(self.config.w_ttc, self.config.w_headway, self.config.w_jerk)
        self.params = params or LognormalParams(self.config.mu, self.config.sigma)

    def step(self, gap: float, follower_speed: float, leader_speed: float, jerk: float) -> RewardBreakdown:
        return step_reward(
            gap, follower_speed, leader_speed, jerk,
            self.weights, self.params,
            self.config.ttc_safety_limit, self.config.ttc_floor, self.config.jerk_base,
        )

    def collision(self, jerk: float) -> RewardBreakdown:
        return collision_reward(
            jerk, self.weights,
            self.config.ttc_safety_limit, self.config.ttc_floor, self.config.jerk_base,
        )
