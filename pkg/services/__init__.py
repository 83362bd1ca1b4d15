# services/__init__.py

# 서비스 인스턴스들 import
from .trajectory_service import trajectory_service, TrajectoryService
from .env_service import CarFollowingEnv
from .ddpg_service import DdpgTrainer
from .report_service import ReportService

# 명확한 인터페이스 노출
__all__ = [
    'trajectory_service',
    'TrajectoryService',
    'CarFollowingEnv',
    'DdpgTrainer',
    'ReportService',
]
