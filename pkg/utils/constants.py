# utils/constants.py
# 프로젝트 전체에서 사용하는 상수들을 정의합니다.


class Commands:
    """CLI 서브커맨드 상수"""
    SYNTHESIZE = "synthesize"
    EXTRACT = "extract"
    FIT_HEADWAY = "fit-headway"
    TRAIN = "train"
    EVALUATE = "evaluate"
    SELFTEST = "selftest"


class ExitCodes:
    """프로세스 종료 코드 상수"""
    SUCCESS = 0
    CONFIG_ERROR = 1
    DATA_ERROR = 2
    NUMERIC_ERROR = 3


class FileNames:
    """--out 디렉토리 아래에 생성되는 파일 이름 (하위 스크립트가 의존하므로 변경 금지)"""
    TRAJECTORIES = "trajectories.csv"
    EVENTS = "events.csv"
    EXTRACTION_SUMMARY = "extraction_summary.txt"
    HEADWAY_FIT = "headway_fit.txt"
    RECORDED_TTC_CDF = "recorded_ttc_cdf.csv"
    RECORDED_HEADWAY_HIST = "recorded_headway_hist.csv"
    TRAIN_EVENTS = "train_events.csv"
    TEST_EVENTS = "test_events.csv"
    CURVE = "curve.csv"
    BEST_CHECKPOINT = "best.ckpt"
    FINAL_CHECKPOINT = "final.ckpt"
    CHECKPOINT_META_SUFFIX = ".meta"
    REPORT_DIR = "report"
    RUN_LOG = "run.log"
    MANIFEST_TEMPLATE = "manifest_{command}.txt"


class ReportFiles:
    """평가 리포트 테이블 파일 이름"""
    MIN_TTC_CDF = "min_ttc_cdf.csv"
    HEADWAY_SIMULATED = "headway_hist_simulated.csv"
    HEADWAY_RECORDED = "headway_hist_recorded.csv"
    JERK_SIMULATED = "jerk_hist_simulated.csv"
    JERK_RECORDED = "jerk_hist_recorded.csv"
    EXAMPLE_TRACES = "example_traces.csv"
    SUMMARY = "summary.txt"

    TABLES = (
        MIN_TTC_CDF,
        HEADWAY_SIMULATED,
        HEADWAY_RECORDED,
        JERK_SIMULATED,
        JERK_RECORDED,
        EXAMPLE_TRACES,
    )


class EventColumns:
    """이벤트 교환 파일(events.csv)의 고정 컬럼 순서"""
    ORDER = (
        "event_id",
        "step",
        "time",
        "lane_id",
        "leader_id",
        "follower_id",
        "leader_length",
        "follower_length",
        "leader_position",
        "leader_speed",
        "leader_acceleration",
        "follower_position",
        "follower_speed",
        "follower_acceleration",
        "gap",
    )


class RolloutColumns:
    """스텝별 시뮬레이션 로그 컬럼 순서"""
    ORDER = (
        "step",
        "time",
        "leader_speed",
        "follower_speed",
        "gap",
        "action",
        "jerk",
        "f_ttc",
        "f_headway",
        "f_jerk",
        "reward",
    )


class CurveColumns:
    """학습 곡선 파일 컬럼 순서"""
    ORDER = ("episode", "train_mean_step_reward", "eval_mean_step_reward")


class CheckpointFormat:
    """체크포인트 바이너리 포맷 상수"""
    MAGIC = b"CFNN"
    VERSION = 1
    FLOAT_DTYPE = "<f8"


class ErrorMessages:
    """에러 메시지 상수"""
    SEED_REQUIRED = "시드(seed)가 지정되지 않았습니다. 설정 파일의 run.seed 또는 --seed 를 지정해주세요"
    PATH_NOT_FOUND = "파일을 찾을 수 없습니다"
    COMMAND_FAILED = "명령 처리 중 오류가 발생했습니다"
    UNEXPECTED = "처리 중 예상치 못한 오류가 발생했습니다"


class ReportColumns:
    """평가 리포트 테이블 컬럼 순서"""
    MIN_TTC_CDF = ("threshold", "simulated_fraction", "recorded_fraction")
    HISTOGRAM = ("lower", "upper", "center", "count", "fraction")
    SAMPLE_CDF = ("threshold", "fraction")
    FITTED_HISTOGRAM = HISTOGRAM + ("density", "fitted_density")
    EXAMPLE_TRACES = (
        "event_id",
        "source",
        "time",
        "leader_speed",
        "follower_speed",
        "gap",
        "headway",
        "acceleration",
        "jerk",
    )


class TraceSources:
    """예시 궤적 테이블의 source 값"""
    SIMULATED = "simulated"
    RECORDED = "recorded"
