# app.py
# 명령행 진입점입니다. 서브커맨드(synthesize, extract, fit-headway, train, evaluate, selftest)를
# 설정 파일 + 명령행 덮어쓰기로 실행하고, 결과 파일과 실행 매니페스트를 --out 아래에 씁니다.

import argparse
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from dotenv import load_dotenv

from config import AppConfig, RunConfig
from exceptions import ConfigError, NumericError
from models.trajectory import LognormalParams
from services.checkpoint_service import load_checkpoint, save_checkpoint
from services.ddpg_service import DdpgTrainer, actor_policy, write_curve
from services.env_service import CarFollowingEnv
from services.fleet_service import generate_synthetic_fleet, write_trajectory_table
from services.report_service import ReportService, write_recorded_distributions, write_report
from services.reward_service import RewardCalculator
from services.selftest_service import run_selftest
from services.trajectory_service import (
    TrajectoryService,
    estimate_ttc_safety_limit,
    fit_headway_lognormal,
    headway_samples,
    read_events,
    split_events,
    write_events,
)
from utils.constants import Commands, ExitCodes, FileNames
from utils.error_handler import ErrorHandler
from utils.io_utils import read_key_values, write_key_values, write_manifest
from utils.logger import get_logger, setup_logging
from views.summary_view import (
    build_extraction_summary,
    build_extraction_text,
    build_headway_fit_text,
    build_report_text,
    build_selftest_text,
    build_training_text,
)

logger = get_logger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """사용법 오류를 SystemExit(2) 대신 ConfigError 로 알리는 파서 (종료 코드 2 는 데이터 오류)"""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    """명령행 파서를 생성합니다."""
    parser = CliArgumentParser(prog="cf-ddpg", description="DDPG 차량 추종 속도 제어기")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    common = CliArgumentParser(add_help=False)
    common.add_argument("--config", help=f"설정 파일 경로 (기본: 환경변수 {AppConfig.CONFIG_ENV_VAR})")
    common.add_argument("--seed", type=int, help="난수 시드 (run.seed)")
    common.add_argument("--out", help="출력 디렉토리 (run.out_dir)")
    common.add_argument("--events", help="이벤트 파일 경로 (data.events)")
    common.add_argument("--checkpoint", help="체크포인트 경로 (run.checkpoint)")
    common.add_argument("--log-level", help="로그 레벨 (run.log_level)")
    common.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="설정 값 덮어쓰기 (여러 번 지정 가능)",
    )

    for command, help_text in (
        (Commands.SYNTHESIZE, "합성 차량 추종 궤적 테이블 생성"),
        (Commands.EXTRACT, "궤적 파일에서 차량 추종 이벤트 추출"),
        (Commands.FIT_HEADWAY, "차두시간 로그정규 분포 추정"),
        (Commands.TRAIN, "DDPG 학습"),
        (Commands.EVALUATE, "체크포인트 평가 리포트 생성"),
        (Commands.SELFTEST, "내장 수치 검증 실행"),
    ):
        subparsers.add_parser(command, parents=[common], help=help_text)
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, str]:
    """--set 과 개별 플래그를 'section.key' 덮어쓰기로 모읍니다. 개별 플래그가 --set 보다 우선합니다."""
    overrides: Dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set 값은 section.key=value 형식이어야 합니다: {item}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()

    flags = {
        "run.seed": args.seed,
        "run.out_dir": args.out,
        "data.events": args.events,
        "run.checkpoint": args.checkpoint,
        "run.log_level": args.log_level,
    }
    overrides.update({key: str(value) for key, value in flags.items() if value is not None})
    return overrides


def headway_params(config: RunConfig) -> LognormalParams:
    """reward.headway_fit 파일이 지정되어 있으면 그 값을, 아니면 reward.mu/sigma 를 사용합니다."""
    if not config.reward.headway_fit:
        return LognormalParams(config.reward.mu, config.reward.sigma)
    values = read_key_values(config.require_path("reward.headway_fit", config.reward.headway_fit))
    try:
        params = LognormalParams(float(values["mu"]), float(values["sigma"]))
    except (KeyError, ValueError):
        raise ConfigError(f"차두시간 추정 파일 형식이 잘못되었습니다: {config.reward.headway_fit}")
    if not (math.isfinite(params.mu) and params.sigma > 0.0):
        raise ConfigError(f"차두시간 추정 값이 잘못되었습니다 (mu={params.mu}, sigma={params.sigma}): {config.reward.headway_fit}")
    return params


def events_path(config: RunConfig, default_name: str) -> Path:
    """data.events 가 없으면 출력 디렉토리의 기본 파일을 사용합니다."""
    value = config.data.events or str(Path(config.run.out_dir) / default_name)
    return config.require_path("data.events", value)


def cmd_synthesize(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    seed = config.require_seed()
    events = generate_synthetic_fleet(
        config.data.synthetic_events,
        seed,
        dt=config.extract.dt,
        headway=headway_params(config),
    )
    path = write_trajectory_table(events, out_dir / FileNames.TRAJECTORIES, config.columns)
    print(f"{len(events)} events -> {path}")
    return {}


def cmd_extract(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    config.require_seed()
    source = config.require_path("data.trajectories", config.data.trajectories)
    service = TrajectoryService(config.columns, config.extract)
    parsed = service.parse_trajectory_file(source)
    events = service.extract_cf_events(parsed.vehicles)

    write_events(events, out_dir / FileNames.EVENTS)
    summary = build_extraction_summary(events, parsed.rejected_rows, parsed.total_rows)
    write_key_values(out_dir / FileNames.EXTRACTION_SUMMARY, summary.items())
    print(build_extraction_text(summary))
    return {"trajectories": source}


def cmd_fit_headway(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    config.require_seed()
    source = events_path(config, FileNames.EVENTS)
    events = read_events(source, config.extract.dt)
    params = fit_headway_lognormal(events)
    samples = int(headway_samples(events).size)
    ttc_limit = estimate_ttc_safety_limit(events)

    write_key_values(out_dir / FileNames.HEADWAY_FIT, [
        ("mu", params.mu),
        ("sigma", params.sigma),
        ("mode", params.mode),
        ("samples", samples),
        ("ttc_p10", ttc_limit),
    ])
    write_recorded_distributions(events, params, out_dir, config.eval)
    print(build_headway_fit_text(params, samples, ttc_limit))
    return {"events": source}


def cmd_train(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    seed = config.require_seed()
    source = events_path(config, FileNames.EVENTS)
    inputs = {"events": source}
    if config.reward.headway_fit:
        inputs["headway_fit"] = Path(config.reward.headway_fit)

    events = read_events(source, config.train.dt)
    train_events, test_events = split_events(events, config.train.train_fraction, seed)
    write_events(train_events, out_dir / FileNames.TRAIN_EVENTS)
    write_events(test_events, out_dir / FileNames.TEST_EVENTS)

    trainer = DdpgTrainer(config.train, config.reward, config.norm, headway_params(config))
    result = trainer.train(train_events, test_events, seed)
    write_curve(result.curve, out_dir / FileNames.CURVE)

    config_hash = config.digest()
    extra = {
        "best_eval_mean_step_reward": result.best_eval_reward,
        "norm.speed_scale": config.norm.speed_scale,
        "norm.relative_speed_scale": config.norm.relative_speed_scale,
        "norm.gap_scale": config.norm.gap_scale,
        "norm.action_scale": config.norm.action_scale,
    }
    save_checkpoint(result.best, out_dir / FileNames.BEST_CHECKPOINT, seed, config_hash, AppConfig.ARTIFACT_VERSION, extra)
    save_checkpoint(result.final, out_dir / FileNames.FINAL_CHECKPOINT, seed, config_hash, AppConfig.ARTIFACT_VERSION, extra)
    print(build_training_text(result, len(train_events), len(test_events)))
    return inputs


def cmd_evaluate(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    config.require_seed()
    checkpoint = config.require_path(
        "run.checkpoint",
        config.run.checkpoint or str(out_dir / FileNames.BEST_CHECKPOINT),
    )
    source = events_path(config, FileNames.TEST_EVENTS)
    snapshot, meta = load_checkpoint(checkpoint)
    events = read_events(source, config.train.dt)
    logger.info(f"체크포인트 {checkpoint} (episode {meta.get('episode', '?')}) 로 이벤트 {len(events)}개 평가")

    env = CarFollowingEnv(
        RewardCalculator(config.reward, headway_params(config)),
        dt=config.train.dt,
        max_acceleration=config.train.max_acceleration,
    )
    report = ReportService(env, config.eval).build_comparison_report(actor_policy(snapshot.actor, config.norm), events)
    write_report(report, out_dir / FileNames.REPORT_DIR)
    print(build_report_text(report))
    return {"checkpoint": checkpoint, "events": source}


def cmd_selftest(config: RunConfig, out_dir: Path) -> Dict[str, Path]:
    results = run_selftest(seed=config.run.seed or 0)
    print(build_selftest_text(results))
    if not all(result.passed for result in results):
        raise NumericError(f"수치 검증 실패: {', '.join(r.name for r in results if not r.passed)}")
    return {}


COMMANDS: Dict[str, Callable[[RunConfig, Path], Dict[str, Path]]] = {
    Commands.SYNTHESIZE: cmd_synthesize,
    Commands.EXTRACT: cmd_extract,
    Commands.FIT_HEADWAY: cmd_fit_headway,
    Commands.TRAIN: cmd_train,
    Commands.EVALUATE: cmd_evaluate,
    Commands.SELFTEST: cmd_selftest,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI 진입점. 프로세스 종료 코드를 반환합니다."""
    # .env 파일에서 환경 변수 로드 (CFDDPG_CONFIG 등)
    load_dotenv()
    command = "cf-ddpg"

    try:
        args = build_parser().parse_args(argv)
        command = args.command
        config = RunConfig.load(args.config, collect_overrides(args))
        out_dir = Path(config.run.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        setup_logging(config.run.log_level, log_file=out_dir / FileNames.RUN_LOG)
        logger.info(f"{command} 시작 - 출력 디렉토리: {out_dir}")

        inputs = COMMANDS[command](config, out_dir)
        write_manifest(
            out_dir, command, config.to_key_values(), config.run.seed, inputs, AppConfig.ARTIFACT_VERSION,
        )
        logger.info(f"{command} 완료")
        return ExitCodes.SUCCESS

    except Exception as e:
        return ErrorHandler.handle_command_error(command, e)


if __name__ == "__main__":
    sys.exit(main())
