# utils/error_handler.py
# 표준화된 에러 처리 시스템을 제공합니다.

from typing import Optional, Callable, Any
from functools import wraps

from .logger import get_logger
from .constants import ExitCodes, ErrorMessages
from exceptions import CarFollowingError, ConfigError, NumericError

logger = get_logger(__name__)


class ErrorHandler:
    """CLI 명령 처리 중 발생한 에러를 종료 코드로 변환하는 클래스"""

    @staticmethod
    def exit_code_for(error: BaseException) -> int:
        """에러 종류에 맞는 종료 코드를 반환합니다."""
        if isinstance(error, CarFollowingError):
            return error.exit_code
        if isinstance(error, (FloatingPointError, OverflowError)):
            return ExitCodes.NUMERIC_ERROR
        return ExitCodes.CONFIG_ERROR

    @staticmethod
    def handle_command_error(
        command: str,
        error: BaseException,
        print_func: Callable[[str], None] = print,
    ) -> int:
        """
        명령 처리 중 발생한 에러를 로깅하고 사용자에게 진단 메시지를 출력합니다.

        Args:
            command: 실행 중이던 서브커맨드 이름
            error: 발생한 에러
            print_func: 진단 메시지 출력 함수 (기본 print)

        Returns:
            int: 프로세스 종료 코드
        """
        exit_code = ErrorHandler.exit_code_for(error)

        if isinstance(error, NumericError):
            logger.error(f"수치 오류 - 커맨드: {command}: {error}", exc_info=True)
        elif isinstance(error, (ConfigError, FileNotFoundError)):
            logger.warning(f"설정 오류 - 커맨드: {command}: {error}")
        elif isinstance(error, CarFollowingError):
            logger.warning(f"데이터 오류 - 커맨드: {command}: {error}")
        else:
            logger.error(f"{command} 중 예상치 못한 오류", exc_info=True)

        print_func(f"[{command}] {ErrorMessages.COMMAND_FAILED} (exit {exit_code}): {error}")
        return exit_code


def handle_exceptions(
    logger_name: Optional[str] = None,
    default_message: str = ErrorMessages.UNEXPECTED
):
    """
    함수 데코레이터: 예외를 자동으로 로깅하고 처리합니다.

    도메인 예외(CarFollowingError)는 그대로 다시 발생시키고,
    예상치 못한 예외는 CarFollowingError로 감싸서 발생시킵니다.

    Args:
        logger_name: 로거 이름 (None이면 함수 모듈명 사용)
        default_message: 기본 에러 메시지
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            func_logger = get_logger(logger_name or func.__module__)
            try:
                return func(*args, **kwargs)
            except NumericError as e:
                func_logger.error(f"{func.__name__} 에서 수치 에러: {e}", exc_info=True)
                raise
            except CarFollowingError as e:
                func_logger.warning(f"{func.__name__} 에서 도메인 에러: {e}")
                raise
            except (FileNotFoundError, PermissionError):
                # 경로 문제는 호출 측에서 경로를 포함해 보고하도록 그대로 전달
                raise
            except Exception as e:
                func_logger.error(f"{func.__name__} 에서 예상치 못한 에러", exc_info=True)
                raise CarFollowingError(f"{default_message}: {e}") from e
        return wrapper
    return decorator
