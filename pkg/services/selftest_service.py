# services/selftest_service.py
# 내장 수치 검증(oracle): 보상 기준값, 역전파 기울기, Adam 한 스텝, 운동학 적분, OU 통계, 로그정규 추정

import math
import time
from typing import Callable, List, Tuple

import numpy as np

from models.network import AdamState, ForwardCache, Gradients, MlpParams, OutputActivation
from models.report import OracleResult
from models.trajectory import LognormalParams

from .env_service import CarFollowingEnv
from .fleet_service import make_event_from_arrays
from .mlp_service import adam_step, backward, forward, init_mlp
from .ddpg_service import OuNoise
from .reward_service import headway_feature, jerk_feature, ttc_feature
from .trajectory_service import fit_lognormal

BackwardFn = Callable[[MlpParams, ForwardCache, np.ndarray], Tuple[Gradients, np.ndarray]]

GRADIENT_TOLERANCE = 1e-6
FINITE_DIFFERENCE_STEP = 1e-5
# 상대 오차 분모 하한. 이보다 작은 기울기는 절대 오차로 비교됨
RELATIVE_ERROR_FLOOR = 1e-3
# ReLU 꺾임점 근처 입력은 중앙차분이 정의되지 않으므로 다시 뽑음
KINK_MARGIN = 1e-3


def _scalar_output(params: MlpParams, inputs: np.ndarray) -> float:
    outputs, _ = forward(params, inputs)
    return float(np.sum(outputs))


def numerical_gradient(params: MlpParams, inputs: np.ndarray, h: float = FINITE_DIFFERENCE_STEP) -> Tuple[Gradients, np.ndarray]:
    """sum(output) 의 파라미터/입력 중앙차분 기울기"""
    arrays = [array.copy() for array in params.arrays()]
    grads = []
    for i, array in enumerate(arrays):
        grad = np.zeros_like(array)
        for index in np.ndindex(array.shape):
            original = array[index]
            array[index] = original + h
            plus = _scalar_output(params.with_arrays(arrays), inputs)
            array[index] = original - h
            minus = _scalar_output(params.with_arrays(arrays), inputs)
            array[index] = original
            grad[index] = (plus - minus) / (2.0 * h)
        grads.append(grad)

    x = np.asarray(inputs, dtype=float).copy()
    input_grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        original = x[index]
        x[index] = original + h
        plus = _scalar_output(params, x)
        x[index] = original - h
        minus = _scalar_output(params, x)
        x[index] = original
        input_grad[index] = (plus - minus) / (2.0 * h)
    return Gradients(*grads), input_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = RELATIVE_ERROR_FLOOR) -> float:
    """원소별 |a − n| / max(|a|, |n|, floor) 의 최댓값"""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def check_gradients(params: MlpParams, inputs: np.ndarray, backward_fn: BackwardFn = backward) -> float:
    """역전파 기울기와 중앙차분 기울기의 최대 상대 오차"""
    outputs, cache = forward(params, inputs)
    analytic, analytic_input = backward_fn(params, cache, np.ones_like(outputs))
    numeric, numeric_input = numerical_gradient(params, inputs)
    errors = [relative_error(a, n) for a, n in zip(analytic.arrays(), numeric.arrays())]
    errors.append(relative_error(analytic_input, numeric_input))
    return max(errors)


def _timed(name: str, check: Callable[[], Tuple[bool, str]]) -> OracleResult:
    started = time.perf_counter()
    passed, detail = check()
    return OracleResult(name=name, passed=passed, detail=detail, seconds=time.perf_counter() - started)


def reward_oracle() -> OracleResult:
    def check():
        headway = headway_feature(1.3, LognormalParams(0.4226, 0.4365))
        jerk = jerk_feature(60.0)
        ttc_limit = ttc_feature(7.0)
        ttc_half = ttc_feature(3.5)
        passed = (
            abs(headway - 0.657) <= 0.01
            and jerk == 1.0
            and ttc_limit == 0.0
            and abs(ttc_half - math.log(0.5)) <= 1e-12
        )
        return passed, f"F_headway(1.3)={headway:.4f} F_jerk(60)={jerk} F_ttc(7)={ttc_limit} F_ttc(3.5)={ttc_half:.12f}"
    return _timed("reward anchors", check)


def gradient_oracle(draws: int = 100, seed: int = 0, backward_fn: BackwardFn = backward) -> OracleResult:
    """액터(3-30-1 tanh)와 크리틱(4-30-1 linear) 무작위 표본에서 기울기 검증"""
    def check():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(draws):
            for input_dim, activation in ((3, OutputActivation.TANH_SCALED), (4, OutputActivation.LINEAR)):
                params = init_mlp(input_dim, 30, 1, activation, rng, 3.0)
                params = params.with_arrays((params.w1, rng.uniform(-0.5, 0.5, params.b1.shape), params.w2, rng.uniform(-0.5, 0.5, 1)))
                while True:
                    inputs = rng.uniform(-1.5, 1.5, input_dim)
                    _, cache = forward(params, inputs)
                    if np.min(np.abs(cache.pre_hidden)) > KINK_MARGIN:
                        break
                worst = max(worst, check_gradients(params, inputs, backward_fn))
        return worst < GRADIENT_TOLERANCE, (
            f"{draws}회 x 2 네트워크, 최대 상대 오차 {worst:.3e} "
            f"(기준 {GRADIENT_TOLERANCE:g}, 분모 하한 {RELATIVE_ERROR_FLOOR:g})"
        )
    return _timed("gradient check", check)


def adam_oracle() -> OracleResult:
    def check():
        params = MlpParams(np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)), np.zeros(1))
        grads = Gradients(np.ones((1, 1)), np.ones(1), np.ones((1, 1)), np.ones(1))
        updated, state = adam_step(params, grads, AdamState.for_params(params))
        expected = -0.001 / (1.0 + 1e-8)
        error = float(np.max(np.abs(updated.flat() - expected)))
        return error < 1e-12 and state.timestep == 1, f"첫 스텝 파라미터 {updated.w1[0, 0]:.10f} (기대값 {expected:.10f})"
    return _timed("adam step", check)


def kinematics_oracle(steps: int = 1000, dt: float = 0.1) -> OracleResult:
    """등가속 선행/후행차에서 간격이 사다리꼴 적분 닫힌 식과 일치하는지 확인"""
    def check():
        v0, vl0, a_f, a_l = 20.0, 20.0, 0.01, 0.02
        t = np.arange(steps + 1) * dt
        leader_speed = vl0 + a_l * t
        event = make_event_from_arrays(1, leader_speed, np.full(steps + 1, a_f), 30.0, v0, dt)
        env = CarFollowingEnv(dt=dt)
        state = env.reset(event)
        gap0 = state.gap
        worst = 0.0
        for k in range(1, steps + 1):
            state = env.step(state, a_f, event).next_state
            elapsed = k * dt
            expected = gap0 + (vl0 - v0) * elapsed + (a_l - a_f) * elapsed ** 2 / 2.0
            worst = max(worst, abs(state.gap - expected))
        return worst < 1e-9, f"{steps} 스텝 최대 간격 오차 {worst:.3e} m"
    return _timed("kinematics", check)


def ou_oracle(steps: int = 1_000_000, seed: int = 0, theta: float = 0.15, sigma: float = 0.2) -> OracleResult:
    def check():
        values = OuNoise(theta, sigma).path(np.random.default_rng(seed), steps)
        expected_std = sigma / math.sqrt(theta * (2.0 - theta))
        mean, std = float(values.mean()), float(values.std())
        passed = abs(mean) <= 0.02 and abs(std - expected_std) <= 0.02 * expected_std
        return passed, f"평균 {mean:+.4f}, 표준편차 {std:.4f} (기대값 {expected_std:.4f})"
    return _timed("ou statistics", check)


def lognormal_oracle(samples: int = 100_000, seed: int = 0, params: LognormalParams = LognormalParams()) -> OracleResult:
    def check():
        draws = np.random.default_rng(seed).lognormal(params.mu, params.sigma, samples)
        fitted = fit_lognormal(draws)
        passed = abs(fitted.mu - params.mu) <= 0.02 and abs(fitted.sigma - params.sigma) <= 0.02
        return passed, f"mu={fitted.mu:.4f}, sigma={fitted.sigma:.4f}"
    return _timed("lognormal fit", check)


def run_selftest(seed: int = 0, backward_fn: BackwardFn = backward) -> List[OracleResult]:
    """모든 수치 검증을 실행합니다."""
    return [
        reward_oracle(),
        gradient_oracle(seed=seed, backward_fn=backward_fn),
        adam_oracle(),
        kinematics_oracle(),
        ou_oracle(seed=seed),
        lognormal_oracle(seed=seed),
    ]
