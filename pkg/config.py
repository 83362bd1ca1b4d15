# config.py
# 프로젝트의 모든 설정 정보를 중앙에서 관리합니다.
# 설정 파일은 'section.key = value' 형식의 평문이며 python-dotenv 파서로 읽습니다.

import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union, get_args, get_origin, get_type_hints

from dotenv import dotenv_values

from exceptions import ConfigError
from utils.constants import ErrorMessages
from utils.io_utils import format_value, text_digest


@dataclass
class RunSection:
    """실행 공통 설정"""
    seed: Optional[int] = None
    out_dir: str = "out"
    log_level: str = "INFO"
    checkpoint: Optional[str] = None


@dataclass
class DataSection:
    """입력 데이터 경로 설정"""
    trajectories: Optional[str] = None
    events: Optional[str] = None
    synthetic_events: int = 100


@dataclass
class ColumnMapping:
    """궤적 테이블 컬럼 매핑 (기본값은 NGSIM 내보내기 형식)"""
    vehicle_id: str = "Vehicle_ID"
    time: str = "Frame_ID"
    position: str = "Local_Y"
    speed: str = "v_Vel"
    acceleration: str = "v_Acc"
    lane_id: str = "Lane_ID"
    leader_id: str = "Preceding"
    vehicle_length: str = "v_Length"
    # 파일의 시간 값 × time_scale = 초 (Frame_ID 는 0.1초 단위)
    time_scale: float = 0.1
    # 파일의 거리 단위 × distance_scale = 미터 (원본 NGSIM 피트 단위면 0.3048)
    distance_scale: float = 1.0
    # ",", "\t" 또는 "auto"(공백/탭 자동 인식)
    delimiter: str = ","

    def required_columns(self) -> Dict[str, str]:
        """필드명 → 파일 컬럼명 매핑을 반환합니다."""
        return {
            "vehicle_id": self.vehicle_id,
            "time": self.time,
            "position": self.position,
            "speed": self.speed,
            "acceleration": self.acceleration,
            "lane_id": self.lane_id,
            "leader_id": self.leader_id,
            "vehicle_length": self.vehicle_length,
        }


@dataclass
class ExtractionConfig:
    """차량 추종 이벤트 추출 필터 설정"""
    min_duration: float = 15.0
    min_gap: float = 0.0
    max_abs_acceleration: float = 8.0
    # True면 한 차량이 최대 하나의 이벤트에만 등장 (선행/후행 중첩 이벤트 제외)
    exclusive_vehicles: bool = False
    dt: float = 0.1


@dataclass
class RewardConfig:
    """보상 함수 설정"""
    w_ttc: float = 1.0
    w_headway: float = 1.0
    w_jerk: float = 1.0
    ttc_safety_limit: float = 7.0
    ttc_floor: float = 0.1
    mu: float = 0.4226
    sigma: float = 0.4365
    jerk_base: float = 3600.0
    # fit-headway 결과 파일 경로. 지정하면 mu/sigma를 이 파일 값으로 덮어씁니다.
    headway_fit: Optional[str] = None

    def validate(self) -> None:
        """보상 가중치와 분포 파라미터 범위를 검사합니다."""
        for name in ("w_ttc", "w_headway", "w_jerk"):
            if not getattr(self, name) >= 0.0:
                raise ConfigError(f"reward.{name} 는 0 이상이어야 합니다: {getattr(self, name)}")
        for name in ("sigma", "ttc_safety_limit", "ttc_floor", "jerk_base"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"reward.{name} 는 0보다 커야 합니다: {getattr(self, name)}")
        if not math.isfinite(self.mu):
            raise ConfigError(f"reward.mu 는 유한한 값이어야 합니다: {self.mu}")


@dataclass
class NormalizationConfig:
    """신경망 입력 정규화 스케일"""
    speed_scale: float = 30.0
    relative_speed_scale: float = 10.0
    gap_scale: float = 100.0
    action_scale: float = 3.0


@dataclass
class TrainConfig:
    """DDPG 학습 하이퍼파라미터"""
    episodes: int = 60
    minibatch: int = 32
    gamma: float = 0.99
    tau: float = 0.001
    actor_learning_rate: float = 0.001
    critic_learning_rate: float = 0.001
    buffer_capacity: int = 7000
    hidden_dim: int = 30
    max_acceleration: float = 3.0
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    ou_mu: float = 0.0
    train_fraction: float = 0.7
    dt: float = 0.1

    def validate(self) -> None:
        """설정값 범위를 검사합니다."""
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"train.gamma 는 (0, 1] 범위여야 합니다: {self.gamma}")
        if self.minibatch < 1 or self.minibatch > self.buffer_capacity:
            raise ConfigError(
                f"train.minibatch({self.minibatch})는 1 이상, buffer_capacity({self.buffer_capacity}) 이하여야 합니다"
            )
        if self.episodes < 0:
            raise ConfigError(f"train.episodes 는 0 이상이어야 합니다: {self.episodes}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"train.tau 는 (0, 1] 범위여야 합니다: {self.tau}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train.train_fraction 은 (0, 1) 범위여야 합니다: {self.train_fraction}")


@dataclass
class EvaluationConfig:
    """평가 리포트 설정"""
    headway_bin_width: float = 0.25
    headway_min: float = 0.0
    headway_max: float = 6.0
    jerk_bin_width: float = 0.5
    jerk_min: float = -10.0
    jerk_max: float = 10.0
    ttc_thresholds: Tuple[float, ...] = tuple(float(t) for t in range(1, 21))
    min_ttc_threshold: float = 5.0
    headway_band_low: float = 1.0
    headway_band_high: float = 2.0
    warmup_seconds: float = 5.0
    example_events: int = 3


@dataclass
class RunConfig:
    """전체 실행 설정 (섹션 묶음)"""
    run: RunSection = field(default_factory=RunSection)
    data: DataSection = field(default_factory=DataSection)
    columns: ColumnMapping = field(default_factory=ColumnMapping)
    extract: ExtractionConfig = field(default_factory=ExtractionConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    norm: NormalizationConfig = field(default_factory=NormalizationConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvaluationConfig = field(default_factory=EvaluationConfig)

    @classmethod
    def load(
        cls,
        path: Optional[Union[str, Path]] = None,
        overrides: Optional[Mapping[str, str]] = None,
    ) -> "RunConfig":
        """
        설정 파일과 명령행 덮어쓰기 값을 합쳐 설정을 생성합니다. (명령행이 우선)

        Args:
            path: 설정 파일 경로 (None이면 환경변수 CFDDPG_CONFIG, 그것도 없으면 기본값)
            overrides: 'section.key' → 문자열 값

        Raises:
            ConfigError: 파일이 없거나 알 수 없는 키/잘못된 값이 있는 경우
        """
        path = path or os.environ.get(AppConfig.CONFIG_ENV_VAR)
        values: Dict[str, Optional[str]] = {}
        if path:
            if not Path(path).is_file():
                raise ConfigError(f"{ErrorMessages.PATH_NOT_FOUND}: {path}")
            values.update(dotenv_values(path))
        values.update(overrides or {})

        config = cls()
        for key, raw in values.items():
            config = config.with_value(key, raw)
        config.reward.validate()
        config.train.validate()
        return config

    def with_value(self, key: str, raw: Optional[str]) -> "RunConfig":
        """'section.key' 하나를 문자열 값으로 설정한 새 설정을 반환합니다."""
        if "." not in key:
            raise ConfigError(f"설정 키는 'section.key' 형식이어야 합니다: {key}")
        section_name, field_name = key.split(".", 1)
        if section_name not in AppConfig.SECTION_NAMES:
            raise ConfigError(f"알 수 없는 설정 섹션입니다: {section_name}")

        section = getattr(self, section_name)
        hints = get_type_hints(type(section))
        if field_name not in hints:
            raise ConfigError(f"알 수 없는 설정 키입니다: {key}")

        value = _convert(key, raw, hints[field_name])
        return replace(self, **{section_name: replace(section, **{field_name: value})})

    def to_key_values(self) -> List[Tuple[str, Any]]:
        """완전히 해석된 설정을 (section.key, value) 목록으로 반환합니다."""
        items = []
        for section_name in AppConfig.SECTION_NAMES:
            section = getattr(self, section_name)
            for f in fields(section):
                value = getattr(section, f.name)
                if isinstance(value, tuple):
                    value = ",".join(format_value(v) for v in value)
                items.append((f"{section_name}.{f.name}", value))
        return items

    def digest(self) -> str:
        """설정 에코의 SHA-256 (체크포인트 메타데이터의 config hash)"""
        text = "\n".join(f"{key} = {format_value(value)}" for key, value in self.to_key_values())
        return text_digest(text)

    def require_seed(self) -> int:
        """시드는 필수입니다."""
        if self.run.seed is None:
            raise ConfigError(ErrorMessages.SEED_REQUIRED)
        return self.run.seed

    def require_path(self, key: str, value: Optional[str]) -> Path:
        """참조하는 경로가 존재하는지 명령 시작 시점에 확인합니다."""
        if not value:
            raise ConfigError(f"필수 경로 설정이 없습니다: {key}")
        path = Path(value)
        if not path.exists():
            raise ConfigError(f"{ErrorMessages.PATH_NOT_FOUND}: {path}")
        return path


def _convert(key: str, raw: Optional[str], annotation: Any) -> Any:
    """설정 문자열을 필드 타입으로 변환합니다."""
    origin = get_origin(annotation)
    if origin is Union:
        inner = [a for a in get_args(annotation) if a is not type(None)][0]
        if raw is None or raw.strip().lower() in ("", "none", "null"):
            return None
        return _convert(key, raw, inner)
    if raw is None:
        raise ConfigError(f"설정 값이 비어 있습니다: {key}")

    text = raw.strip()
    try:
        if annotation is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if annotation is int:
            return int(text)
        if annotation is float:
            return float(text)
        if origin is tuple:
            return tuple(float(part) for part in text.split(",") if part.strip())
        if text == "\\t":
            return "\t"
        return text
    except ValueError:
        raise ConfigError(f"설정 값을 해석할 수 없습니다: {key} = {raw}")


class AppConfig:
    """애플리케이션 전체 고정 설정"""

    ARTIFACT_VERSION: str = "1.0.0"

    # 기본 설정 파일 경로를 담는 환경변수
    CONFIG_ENV_VAR: str = "CFDDPG_CONFIG"

    # 설정 파일 섹션 (RunConfig 필드 이름과 동일)
    SECTION_NAMES: Tuple[str, ...] = (
        "run", "data", "columns", "extract", "reward", "norm", "train", "eval",
    )


def get_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    """실행 설정을 반환합니다."""
    return RunConfig.load(path, overrides)
