# models/trajectory.py
# 궤적 데이터와 차량 추종 이벤트 관련 데이터 모델을 정의합니다.

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List

import numpy as np


@dataclass(frozen=True)
class TrajectorySample:
    """10Hz 로 기록된 차량 한 대의 한 시점 운동 상태"""
    time: float
    position: float
    speed: float
    acceleration: float
    lane_id: int
    vehicle_id: int
    leader_id: int
    vehicle_length: float

    def frame(self, dt: float = 0.1) -> int:
        """샘플링 간격 기준 정수 프레임 번호"""
        return int(round(self.time / dt))


@dataclass
class ParseResult:
    """궤적 파일 파싱 결과"""
    vehicles: Dict[int, List[TrajectorySample]]
    rejected_rows: int = 0
    total_rows: int = 0

    @property
    def sample_count(self) -> int:
        return sum(len(samples) for samples in self.vehicles.values())


@dataclass(frozen=True)
class LognormalParams:
    """차두시간 로그정규 분포 파라미터 (로그 차두시간의 평균/표준편차)"""
    mu: float = 0.4226
    sigma: float = 0.4365

    @property
    def mode(self) -> float:
        """밀도가 최대가 되는 차두시간 exp(mu - sigma^2)"""
        return float(np.exp(self.mu - self.sigma ** 2))


@dataclass(frozen=True)
class CfEvent:
    """
    선행차-후행차 궤적 쌍으로 이루어진 차량 추종 이벤트

    leader/follower 는 같은 시각으로 정렬된 동일 길이의 샘플 리스트입니다.
    배열 프로퍼티는 처음 접근할 때 한 번만 계산됩니다.
    """
    event_id: int
    leader: List[TrajectorySample] = field(repr=False)
    follower: List[TrajectorySample] = field(repr=False)
    dt: float = 0.1

    def __len__(self) -> int:
        return len(self.follower)

    @property
    def duration(self) -> float:
        """샘플 수 × 샘플링 간격 (151 샘플 = 15.1초)"""
        return len(self.follower) * self.dt

    @property
    def leader_id(self) -> int:
        return self.leader[0].vehicle_id

    @property
    def follower_id(self) -> int:
        return self.follower[0].vehicle_id

    @property
    def lane_id(self) -> int:
        return self.follower[0].lane_id

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.follower], dtype=float)

    @cached_property
    def leader_position(self) -> np.ndarray:
        return np.array([s.position for s in self.leader], dtype=float)

    @cached_property
    def leader_speed(self) -> np.ndarray:
        return np.array([s.speed for s in self.leader], dtype=float)

    @cached_property
    def leader_acceleration(self) -> np.ndarray:
        return np.array([s.acceleration for s in self.leader], dtype=float)

    @cached_property
    def follower_position(self) -> np.ndarray:
        return np.array([s.position for s in self.follower], dtype=float)

    @cached_property
    def follower_speed(self) -> np.ndarray:
        return np.array([s.speed for s in self.follower], dtype=float)

    @cached_property
    def follower_acceleration(self) -> np.ndarray:
        return np.array([s.acceleration for s in self.follower], dtype=float)

    @cached_property
    def gap(self) -> np.ndarray:
        """범퍼 간 간격 = 선행차 위치 - 후행차 위치 - 선행차 길이"""
        lengths = np.array([s.vehicle_length for s in self.leader], dtype=float)
        return self.leader_position - self.follower_position - lengths

    @cached_property
    def relative_speed(self) -> np.ndarray:
        """상대 속도 = 선행차 속도 - 후행차 속도"""
        return self.leader_speed - self.follower_speed
