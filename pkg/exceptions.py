# exceptions.py
# 프로젝트에서 사용할 사용자 정의 예외를 정의합니다.
# 각 예외는 CLI 종료 코드(exit_code)를 가집니다. 0 성공, 1 설정 오류, 2 데이터 오류, 3 수치 오류.

from typing import Optional


class CarFollowingError(Exception):
    """모든 도메인 예외의 기본 클래스"""
    exit_code: int = 1


class ConfigError(CarFollowingError):
    """설정 파일/명령행 인자 오류 시 발생하는 예외"""
    exit_code = 1


class SchemaError(CarFollowingError):
    """궤적 파일에 필수 컬럼이 없을 때 발생하는 예외"""
    exit_code = 2

    def __init__(self, message: str, missing_columns: list = None):
        """
        Args:
            message: 기본 에러 메시지
            missing_columns: 누락된 컬럼 이름 리스트
        """
        super().__init__(message)
        self.missing_columns = missing_columns or []


class DataError(CarFollowingError):
    """궤적 데이터 자체가 잘못된 경우 발생하는 예외"""
    exit_code = 2

    def __init__(self, message: str, vehicle_id: Optional[int] = None):
        """
        Args:
            message: 기본 에러 메시지
            vehicle_id: 문제가 된 차량 ID (알 수 있는 경우)
        """
        super().__init__(message)
        self.vehicle_id = vehicle_id


class SplitError(CarFollowingError):
    """학습/평가 분할이 불가능할 때 발생하는 예외"""
    exit_code = 2


class FitError(CarFollowingError):
    """차두시간 로그정규 분포 추정 실패 시 발생하는 예외"""
    exit_code = 2


class CollisionStateError(CarFollowingError):
    """간격(gap)이 0 이하인 충돌 상태에서 안전 지표를 계산하려 할 때 발생하는 예외"""
    exit_code = 2


class LifecycleError(CarFollowingError):
    """종료된 에피소드 상태에서 step을 호출한 경우 발생하는 예외"""
    exit_code = 2


class BufferNotReadyError(CarFollowingError):
    """리플레이 버퍼에 미니배치만큼의 샘플이 아직 없을 때 발생하는 예외"""
    exit_code = 2


class TrainingError(CarFollowingError):
    """학습에 사용할 수 있는 이벤트가 없을 때 발생하는 예외"""
    exit_code = 2


class ReportError(CarFollowingError):
    """평가 리포트를 작성할 수 없을 때 발생하는 예외"""
    exit_code = 2


class NumericError(CarFollowingError):
    """NaN/Inf 등 수치 오류가 발생했을 때 사용하는 예외"""
    exit_code = 3

    def __init__(self, message: str, transition_index: Optional[int] = None):
        """
        Args:
            message: 기본 에러 메시지
            transition_index: 미니배치 안에서 문제가 된 전이(transition) 인덱스
        """
        super().__init__(message)
        self.transition_index = transition_index


class ShapeError(CarFollowingError):
    """신경망 입력/파라미터 차원이 맞지 않을 때 발생하는 예외"""
    exit_code = 3


class CheckpointError(CarFollowingError):
    """체크포인트 파일이 손상되었거나 형식이 다를 때 발생하는 예외"""
    exit_code = 2
