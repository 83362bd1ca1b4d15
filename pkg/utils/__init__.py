# utils/__init__.py
# 공통 유틸리티 함수들을 담당하는 패키지입니다.

from .logger import LoggerMixin, setup_logging, get_logger
from .error_handler import ErrorHandler, handle_exceptions
from .constants import *
from .io_utils import file_digest, read_key_values, write_key_values, write_manifest

__all__ = [
    'LoggerMixin',
    'setup_logging',
    'get_logger',
    'ErrorHandler',
    'handle_exceptions',
    'file_digest',
    'read_key_values',
    'write_key_values',
    'write_manifest',
]
