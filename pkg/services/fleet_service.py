# services/fleet_service.py
# 합성 차량 추종 데이터 생성기
# 선행차는 구간 상수/정현파 속도 프로파일을 따르고, 후행차는 간격·속도차 선형 피드백 운전자 모델로 움직입니다.
# 두 차량 모두 환경과 같은 운동학 식(속도 오일러, 위치 사다리꼴 적분)으로 적분합니다.

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import ColumnMapping
from exceptions import DataError
from models.trajectory import CfEvent, LognormalParams, TrajectorySample
from utils.logger import get_logger

logger = get_logger(__name__)

LEADER_MAX_ACCELERATION = 2.0
FOLLOWER_MAX_ACCELERATION = 3.0
VEHICLE_LENGTH = 4.5
MIN_SPEED = 3.0
MAX_SPEED = 28.0


def integrate_positions(speeds: np.ndarray, start: float, dt: float) -> np.ndarray:
    """x[k+1] = x[k] + (v[k] + v[k+1]) / 2 · dt"""
    steps = (speeds[:-1] + speeds[1:]) / 2.0 * dt
    return start + np.concatenate([[0.0], np.cumsum(steps)])


def make_event_from_arrays(
    event_id: int,
    leader_speed: Sequence[float],
    follower_acceleration: Sequence[float],
    initial_gap: float,
    initial_follower_speed: float,
    dt: float = 0.1,
    leader_length: float = VEHICLE_LENGTH,
    follower_length: float = VEHICLE_LENGTH,
    leader_id: Optional[int] = None,
    follower_id: Optional[int] = None,
    lane_id: int = 1,
    start_frame: int = 0,
) -> CfEvent:
    """
    선행차 속도 열과 후행차 가속도 열로 정확한 운동학을 만족하는 이벤트를 만듭니다.

    후행차 속도는 v[k+1] = max(v[k] + a[k]·dt, 0), 두 차량 위치는 사다리꼴 적분입니다.
    follower_acceleration[k] 는 구간 [k, k+1] 에 적용되는 가속도이며 길이는 leader_speed 와 같습니다.
    """
    leader_speed = np.asarray(leader_speed, dtype=float)
    accelerations = np.asarray(follower_acceleration, dtype=float)
    n = len(leader_speed)
    if len(accelerations) != n:
        raise DataError(f"선행차 속도({n})와 후행차 가속도({len(accelerations)}) 길이가 다릅니다")

    follower_speed = np.empty(n)
    follower_speed[0] = initial_follower_speed
    for k in range(n - 1):
        follower_speed[k + 1] = max(follower_speed[k] + accelerations[k] * dt, 0.0)

    follower_position = integrate_positions(follower_speed, 0.0, dt)
    leader_position = integrate_positions(leader_speed, initial_gap + leader_length, dt)
    leader_acceleration = np.append(np.diff(leader_speed) / dt, 0.0) if n > 1 else np.zeros(n)

    leader_id = 2 * event_id - 1 if leader_id is None else leader_id
    follower_id = 2 * event_id if follower_id is None else follower_id
    leader, follower = [], []
    for k in range(n):
        time = (start_frame + k) * dt
        leader.append(TrajectorySample(
            time=time,
            position=float(leader_position[k]),
            speed=float(leader_speed[k]),
            acceleration=float(leader_acceleration[k]),
            lane_id=lane_id,
            vehicle_id=leader_id,
            leader_id=0,
            vehicle_length=leader_length,
        ))
        follower.append(TrajectorySample(
            time=time,
            position=float(follower_position[k]),
            speed=float(follower_speed[k]),
            acceleration=float(accelerations[k]),
            lane_id=lane_id,
            vehicle_id=follower_id,
            leader_id=leader_id,
            vehicle_length=follower_length,
        ))
    return CfEvent(event_id=event_id, leader=leader, follower=follower, dt=dt)


def leader_speed_profile(rng: np.random.Generator, n: int, dt: float, sinusoidal: bool) -> np.ndarray:
    """
    선행차 목표 속도 프로파일을 가속도 한계 안에서 추종한 실제 속도 열

    구간 상수: 3~8초마다 목표 속도를 바꾸고 1.5초 응답으로 따라갑니다.
    정현파: 기준 속도 ± 진폭, 주기 8~20초.
    """
    times = np.arange(n) * dt
    if sinusoidal:
        base = rng.uniform(10.0, 22.0)
        amplitude = rng.uniform(1.0, 4.0)
        period = rng.uniform(8.0, 20.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        target = base + amplitude * np.sin(2.0 * np.pi * times / period + phase)
        response = dt
    else:
        target = np.empty(n)
        k = 0
        while k < n:
            length = int(rng.uniform(3.0, 8.0) / dt)
            target[k:k + length] = rng.uniform(8.0, 25.0)
            k += length
        response = 1.5

    speeds = np.empty(n)
    speeds[0] = target[0]
    for k in range(n - 1):
        a = np.clip((target[k + 1] - speeds[k]) / response, -LEADER_MAX_ACCELERATION, LEADER_MAX_ACCELERATION)
        speeds[k + 1] = np.clip(speeds[k] + a * dt, MIN_SPEED, MAX_SPEED)
    return speeds


def feedback_driver_accelerations(
    leader_speed: np.ndarray,
    initial_gap: float,
    initial_speed: float,
    rng: np.random.Generator,
    dt: float = 0.1,
    desired_headway: float = 1.5,
    standstill_gap: float = 2.0,
    gap_gain: float = 0.1,
    speed_gain: float = 0.6,
    noise_std: float = 0.05,
) -> np.ndarray:
    """
    a = gap_gain·(S − (standstill_gap + T·V)) + speed_gain·ΔV + 잡음, [−3, 3] 으로 제한

    환경과 같은 식으로 상태를 갱신하면서 매 스텝 가속도를 결정합니다.
    """
    n = len(leader_speed)
    accelerations = np.zeros(n)
    speed, gap = initial_speed, initial_gap
    for k in range(n - 1):
        relative = leader_speed[k] - speed
        a = gap_gain * (gap - (standstill_gap + desired_headway * speed)) + speed_gain * relative
        a += noise_std * rng.standard_normal()
        a = float(np.clip(a, -FOLLOWER_MAX_ACCELERATION, FOLLOWER_MAX_ACCELERATION))
        accelerations[k] = a
        next_speed = max(speed + a * dt, 0.0)
        gap += (relative + (leader_speed[k + 1] - next_speed)) / 2.0 * dt
        speed = next_speed
    accelerations[-1] = accelerations[-2] if n > 1 else 0.0
    return accelerations


def generate_synthetic_fleet(
    n_events: int = 100,
    seed: int = 0,
    dt: float = 0.1,
    headway: LognormalParams = LognormalParams(),
    min_duration: float = 15.5,
    max_duration: float = 40.0,
    min_gap: float = 1.0,
    max_attempts: int = 20,
) -> List[CfEvent]:
    """
    합성 차량 추종 이벤트 n_events 개를 만듭니다. 짝수 번째는 구간 상수, 홀수 번째는 정현파 선행차입니다.
    초기 차두시간은 로그정규 분포에서 뽑고 [0.8, 4] 초로 자릅니다.
    간격이 min_gap 아래로 내려가는 표본은 다시 뽑습니다.
    """
    rng = np.random.default_rng(seed)
    events: List[CfEvent] = []
    start_frame = 0
    for index in range(n_events):
        event_id = index + 1
        for _ in range(max_attempts):
            n = int(round(rng.uniform(min_duration, max_duration) / dt)) + 1
            leader_speed = leader_speed_profile(rng, n, dt, sinusoidal=index % 2 == 1)
            initial_speed = max(leader_speed[0] + rng.uniform(-1.0, 1.0), MIN_SPEED)
            initial_headway = float(np.clip(rng.lognormal(headway.mu, headway.sigma), 0.8, 4.0))
            initial_gap = max(initial_headway * initial_speed, 2.0 * min_gap)
            accelerations = feedback_driver_accelerations(
                leader_speed, initial_gap, initial_speed, rng, dt,
                desired_headway=rng.uniform(1.2, 1.8),
            )
            event = make_event_from_arrays(
                event_id, leader_speed, accelerations, initial_gap, initial_speed, dt,
                lane_id=1 + index % 3,
                start_frame=start_frame,
            )
            if event.gap.min() > min_gap:
                break
        else:
            raise DataError(f"합성 이벤트 {event_id}를 {max_attempts}번 안에 만들지 못했습니다")
        events.append(event)
        start_frame += n + 10

    logger.info(f"합성 이벤트 {len(events)}개 생성 (seed={seed})")
    return events


def write_trajectory_table(
    events: Sequence[CfEvent],
    path: Union[str, Path],
    mapping: ColumnMapping = ColumnMapping(),
) -> Path:
    """이벤트의 선행/후행 궤적을 컬럼 매핑 형식(기본 NGSIM 컬럼)의 궤적 테이블로 씁니다."""
    rows = []
    for event in events:
        for sample in list(event.leader) + list(event.follower):
            rows.append({
                mapping.vehicle_id: sample.vehicle_id,
                mapping.time: int(round(sample.time / mapping.time_scale)),
                mapping.position: sample.position / mapping.distance_scale,
                mapping.speed: sample.speed / mapping.distance_scale,
                mapping.acceleration: sample.acceleration / mapping.distance_scale,
                mapping.lane_id: sample.lane_id,
                mapping.leader_id: sample.leader_id,
                mapping.vehicle_length: sample.vehicle_length / mapping.distance_scale,
            })
    frame = pd.DataFrame(rows, columns=list(mapping.required_columns().values()))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    separator = "," if mapping.delimiter == "auto" else mapping.delimiter
    frame.to_csv(path, index=False, sep=separator)
    return path
