# services/trajectory_service.py
# 궤적 파일 파싱, 차량 추종 이벤트 추출, 학습/평가 분할, 차두시간 분포 추정을 담당합니다.

import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import ColumnMapping, ExtractionConfig
from exceptions import DataError, FitError, SchemaError, SplitError
from models.trajectory import CfEvent, LognormalParams, ParseResult, TrajectorySample
from utils.constants import EventColumns
from utils.error_handler import handle_exceptions
from utils.logger import LoggerMixin, get_logger

logger = get_logger(__name__)

Vehicles = Dict[int, List[TrajectorySample]]


def read_table(path: Union[str, Path], **kwargs) -> pd.DataFrame:
    """구분자 테이블 읽기. 비었거나 읽을 수 없는 파일은 DataError"""
    try:
        return pd.read_csv(path, **kwargs)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"테이블을 읽을 수 없습니다: {path} ({e})") from e


class TrajectoryService(LoggerMixin):
    """궤적 데이터 서비스 클래스"""

    def __init__(
        self,
        mapping: Optional[ColumnMapping] = None,
        extraction: Optional[ExtractionConfig] = None,
    ):
        """
        Args:
            mapping: 궤적 테이블 컬럼 매핑
            extraction: 이벤트 추출 필터 설정
        """
        self.mapping = mapping or ColumnMapping()
        self.extraction = extraction or ExtractionConfig()

    @handle_exceptions(default_message="궤적 파일 파싱에 실패했습니다")
    def parse_trajectory_file(self, path: Union[str, Path]) -> ParseResult:
        """
        구분자로 나뉜 궤적 테이블을 읽어 차량별로 묶습니다.

        결측/비수치 값, 음수 속도, 허용 범위를 넘는 가속도, 0 이하 차량 길이를 가진 행은
        버리고 개수만 셉니다. 차량별로 시간 순 정렬된 샘플 리스트를 반환합니다.

        Args:
            path: 궤적 파일 경로

        Returns:
            ParseResult: vehicle_id → 시간 순 TrajectorySample 리스트, 버린 행 수

        Raises:
            SchemaError: 필수 컬럼이 없는 경우
            DataError: 한 차량의 행이 파일 안에서 시간 순으로 증가하지 않는 경우
        """
        mapping = self.mapping
        if mapping.delimiter == "auto":
            frame = read_table(path, sep=r"\s+|,", engine="python")
        else:
            frame = read_table(path, sep=mapping.delimiter)
        frame.columns = [str(column).strip() for column in frame.columns]

        columns = mapping.required_columns()
        missing = [column for column in columns.values() if column not in frame.columns]
        if missing:
            raise SchemaError(f"필수 컬럼이 없습니다: {', '.join(missing)}", missing_columns=missing)

        table = frame[list(columns.values())].rename(columns={v: k for k, v in columns.items()})
        table = table.apply(pd.to_numeric, errors="coerce")
        total_rows = len(table)

        table["time"] = table["time"] * mapping.time_scale
        for name in ("position", "speed", "acceleration", "vehicle_length"):
            table[name] = table[name] * mapping.distance_scale

        valid = table.notna().all(axis=1)
        valid &= table["speed"] >= 0
        valid &= table["acceleration"].abs() <= self.extraction.max_abs_acceleration
        valid &= table["vehicle_length"] > 0
        rejected = int((~valid).sum())
        table = table[valid].copy()
        if rejected:
            self.log_warning(f"잘못된 행 {rejected}개를 제외했습니다 - 파일: {path}")

        for name in ("vehicle_id", "lane_id", "leader_id"):
            table[name] = table[name].astype(np.int64)

        # 파일 안에서 차량별 시간은 엄격히 증가해야 함 (다른 차량과 섞여 있는 것은 허용)
        steps = table.groupby("vehicle_id", sort=False)["time"].diff()
        bad = steps <= 0
        if bad.any():
            vehicle_id = int(table.loc[bad[bad].index[0], "vehicle_id"])
            raise DataError(f"차량 {vehicle_id}의 시간이 단조 증가하지 않습니다", vehicle_id=vehicle_id)

        table = table.sort_values(["vehicle_id", "time"], kind="mergesort")

        vehicles: Vehicles = {}
        for row in table.itertuples(index=False):
            sample = TrajectorySample(
                time=float(row.time),
                position=float(row.position),
                speed=float(row.speed),
                acceleration=float(row.acceleration),
                lane_id=int(row.lane_id),
                vehicle_id=int(row.vehicle_id),
                leader_id=int(row.leader_id),
                vehicle_length=float(row.vehicle_length),
            )
            vehicles.setdefault(sample.vehicle_id, []).append(sample)

        self.log_info(f"궤적 파싱 완료 - 차량 {len(vehicles)}대, 행 {total_rows}개, 제외 {rejected}개")
        return ParseResult(vehicles=vehicles, rejected_rows=rejected, total_rows=total_rows)

    @handle_exceptions(default_message="차량 추종 이벤트 추출에 실패했습니다")
    def extract_cf_events(self, vehicles: Vehicles, min_duration: Optional[float] = None) -> List[CfEvent]:
        """
        같은 차로에서 같은 선행차를 따라가는 최대 구간을 찾아 기간 조건을 통과한 것만 이벤트로 만듭니다.

        구간은 다음 중 하나라도 바뀌면 끊깁니다: 선행차 ID, 차로, 프레임 연속성, 선행차 샘플 존재,
        간격 > min_gap 조건. 끊긴 조각마다 기간 조건을 다시 적용합니다.
        """
        config = self.extraction
        dt = config.dt
        min_duration = config.min_duration if min_duration is None else min_duration
        min_samples = min_samples_for(min_duration, dt)

        frame_index: Dict[int, Dict[int, TrajectorySample]] = {}

        def leader_sample(leader_id: int, frame: int) -> Optional[TrajectorySample]:
            if leader_id not in vehicles:
                return None
            if leader_id not in frame_index:
                frame_index[leader_id] = {s.frame(dt): s for s in vehicles[leader_id]}
            return frame_index[leader_id].get(frame)

        candidates: List[Tuple[List[TrajectorySample], List[TrajectorySample]]] = []
        for follower_id in sorted(vehicles):
            run_leader: List[TrajectorySample] = []
            run_follower: List[TrajectorySample] = []
            run_key = None
            prev_frame = None

            for sample in vehicles[follower_id]:
                frame = sample.frame(dt)
                lead = None
                if sample.leader_id != 0:
                    lead = leader_sample(sample.leader_id, frame)
                ok = (
                    lead is not None
                    and lead.lane_id == sample.lane_id
                    and lead.position - sample.position - lead.vehicle_length > config.min_gap
                )
                key = (sample.leader_id, sample.lane_id)
                continues = ok and key == run_key and prev_frame is not None and frame == prev_frame + 1

                if not continues:
                    if len(run_follower) >= min_samples:
                        candidates.append((run_leader, run_follower))
                    run_leader, run_follower, run_key = [], [], None
                    if ok:
                        run_key = key
                if ok:
                    run_leader.append(lead)
                    run_follower.append(sample)
                prev_frame = frame

            if len(run_follower) >= min_samples:
                candidates.append((run_leader, run_follower))

        if config.exclusive_vehicles:
            candidates = _exclusive(candidates)

        events = [
            CfEvent(event_id=index + 1, leader=leader, follower=follower, dt=dt)
            for index, (leader, follower) in enumerate(candidates)
        ]
        self.log_info(f"차량 추종 이벤트 {len(events)}개 추출 (최소 {min_samples} 샘플)")
        return events


def min_samples_for(min_duration: float, dt: float = 0.1) -> int:
    """기간 > min_duration 을 만족하는 최소 샘플 수 (15초, 0.1초 → 151)"""
    return int(math.floor(min_duration / dt + 1e-9)) + 1


def _exclusive(candidates):
    """한 차량이 하나의 이벤트에만 등장하도록 앞선 후보부터 채택합니다."""
    used = set()
    kept = []
    for leader, follower in candidates:
        ids = {leader[0].vehicle_id, follower[0].vehicle_id}
        if ids & used:
            continue
        used |= ids
        kept.append((leader, follower))
    return kept


def validate_cf_event(event: CfEvent, min_duration: float = 15.0) -> None:
    """
    이벤트 불변조건을 독립적으로 다시 검사합니다.

    Raises:
        DataError: 길이 불일치, 시각 불일치, 차로/선행차 불일치, 기간 미달, 간격 0 이하
    """
    dt = event.dt
    leader, follower = event.leader, event.follower
    if len(leader) != len(follower) or not follower:
        raise DataError(f"이벤트 {event.event_id}: 선행/후행 샘플 수가 다릅니다")
    if len(follower) < min_samples_for(min_duration, dt):
        raise DataError(f"이벤트 {event.event_id}: 기간이 {min_duration}초 이하입니다")

    lane_id = follower[0].lane_id
    leader_id = leader[0].vehicle_id
    for k, (lead, foll) in enumerate(zip(leader, follower)):
        if lead.frame(dt) != foll.frame(dt):
            raise DataError(f"이벤트 {event.event_id}: {k}번째 시각이 정렬되지 않았습니다")
        if k and foll.frame(dt) != follower[k - 1].frame(dt) + 1:
            raise DataError(f"이벤트 {event.event_id}: {k}번째 샘플이 연속되지 않습니다")
        if lead.lane_id != lane_id or foll.lane_id != lane_id:
            raise DataError(f"이벤트 {event.event_id}: {k}번째 샘플에서 차로가 다릅니다")
        if foll.leader_id != leader_id or lead.vehicle_id != leader_id:
            raise DataError(f"이벤트 {event.event_id}: {k}번째 샘플에서 선행차가 다릅니다")
        if lead.position - foll.position - lead.vehicle_length <= 0:
            raise DataError(f"이벤트 {event.event_id}: {k}번째 샘플의 간격이 0 이하입니다")


def split_events(
    events: Sequence[CfEvent],
    train_fraction: float = 0.7,
    seed: int = 0,
) -> Tuple[List[CfEvent], List[CfEvent]]:
    """
    이벤트를 학습/평가 집합으로 나눕니다. 학습 개수는 floor(train_fraction·n) 을 [1, n-1] 로 제한합니다.
    (1,341개 → 938 / 403)

    Raises:
        SplitError: 이벤트가 2개 미만이거나 비율이 (0, 1) 밖인 경우
    """
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction 은 (0, 1) 범위여야 합니다: {train_fraction}")
    n = len(events)
    if n < 2:
        raise SplitError(f"분할하려면 이벤트가 2개 이상 필요합니다: {n}개")

    n_train = int(math.floor(train_fraction * n + 1e-9))
    n_train = min(max(n_train, 1), n - 1)

    order = np.random.default_rng(seed).permutation(n)
    train = [events[i] for i in sorted(order[:n_train])]
    test = [events[i] for i in sorted(order[n_train:])]
    return train, test


def headway_samples(events: Iterable[CfEvent], min_speed: float = 0.1) -> np.ndarray:
    """기록된 후행차의 시점별 차두시간 (간격 / 후행차 속도), 저속 샘플 제외"""
    chunks = []
    for event in events:
        speed = event.follower_speed
        mask = speed >= min_speed
        chunks.append(event.gap[mask] / speed[mask])
    return np.concatenate(chunks) if chunks else np.empty(0)


def ttc_samples(events: Iterable[CfEvent]) -> np.ndarray:
    """기록된 후행차의 시점별 TTC (접근 중인 시점만)"""
    chunks = []
    for event in events:
        closing = event.follower_speed - event.leader_speed
        mask = closing > 0
        chunks.append(event.gap[mask] / closing[mask])
    return np.concatenate(chunks) if chunks else np.empty(0)


def fit_lognormal(values: Iterable[float]) -> LognormalParams:
    """
    양수 표본에 대한 로그정규 최우추정 (로그값의 평균과 모표준편차).
    fsum 을 사용하므로 표본 순서에 무관하게 같은 값을 냅니다.

    Raises:
        FitError: 유효한 양수 표본이 없거나 분산이 0인 경우
    """
    array = np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=float)
    array = array[np.isfinite(array) & (array > 0)]
    if array.size == 0:
        raise FitError("유효한 차두시간 표본이 없습니다")

    logs = np.log(array)
    mu = math.fsum(logs) / logs.size
    variance = math.fsum((logs - mu) ** 2) / logs.size
    sigma = math.sqrt(variance)
    if not sigma > 1e-12:
        raise FitError(f"차두시간 로그값의 분산이 0입니다 (mu={mu})")
    return LognormalParams(mu=mu, sigma=sigma)


@handle_exceptions(default_message="차두시간 분포 추정에 실패했습니다")
def fit_headway_lognormal(events: Sequence[CfEvent], min_speed: float = 0.1) -> LognormalParams:
    """이벤트 전체의 시점별 차두시간에 로그정규 분포를 맞춥니다."""
    if not events:
        raise FitError("이벤트가 없습니다")
    params = fit_lognormal(headway_samples(events, min_speed))
    logger.info(f"차두시간 로그정규 추정 - mu={params.mu:.4f}, sigma={params.sigma:.4f}")
    return params


def estimate_ttc_safety_limit(events: Sequence[CfEvent], percentile: float = 10.0) -> Optional[float]:
    """기록된 TTC 분포의 하위 percentile 값 (TTC 안전 한계 산정용). 접근 시점이 없으면 None"""
    samples = ttc_samples(events)
    if samples.size == 0:
        return None
    return float(np.percentile(samples, percentile))


def write_events(events: Sequence[CfEvent], path: Union[str, Path]) -> Path:
    """
    이벤트 교환 파일을 작성합니다. 한 행 = 이벤트의 한 시점이며 컬럼 순서는 EventColumns.ORDER 입니다.
    float 는 왕복 가능한 정밀도로 기록합니다.
    """
    rows = []
    for event in events:
        gaps = event.gap
        for k, (lead, foll) in enumerate(zip(event.leader, event.follower)):
            rows.append((
                event.event_id, k, foll.time, foll.lane_id, lead.vehicle_id, foll.vehicle_id,
                lead.vehicle_length, foll.vehicle_length,
                lead.position, lead.speed, lead.acceleration,
                foll.position, foll.speed, foll.acceleration,
                float(gaps[k]),
            ))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=list(EventColumns.ORDER)).to_csv(path, index=False)
    return path


def read_events(path: Union[str, Path], dt: float = 0.1) -> List[CfEvent]:
    """write_events 로 작성한 교환 파일을 읽어 이벤트 리스트로 복원합니다."""
    frame = read_table(path, float_precision="round_trip")
    missing = [column for column in EventColumns.ORDER if column not in frame.columns]
    if missing:
        raise SchemaError(f"이벤트 파일에 필수 컬럼이 없습니다: {', '.join(missing)}", missing_columns=missing)

    events = []
    for event_id, group in frame.groupby("event_id", sort=True):
        group = group.sort_values("step")
        leader, follower = [], []
        try:
            for row in group.itertuples(index=False):
                leader.append(TrajectorySample(
                    time=float(row.time), position=float(row.leader_position), speed=float(row.leader_speed),
                    acceleration=float(row.leader_acceleration), lane_id=int(row.lane_id),
                    vehicle_id=int(row.leader_id), leader_id=0, vehicle_length=float(row.leader_length),
                ))
                follower.append(TrajectorySample(
                    time=float(row.time), position=float(row.follower_position), speed=float(row.follower_speed),
                    acceleration=float(row.follower_acceleration), lane_id=int(row.lane_id),
                    vehicle_id=int(row.follower_id), leader_id=int(row.leader_id),
                    vehicle_length=float(row.follower_length),
                ))
        except (TypeError, ValueError) as e:
            raise DataError(f"이벤트 {event_id} 에 숫자가 아닌 값이 있습니다: {path} ({e})") from e
        events.append(CfEvent(event_id=int(event_id), leader=leader, follower=follower, dt=dt))
    return events


# 전역 서비스 인스턴스 (기본 설정)
trajectory_service = TrajectoryService()
