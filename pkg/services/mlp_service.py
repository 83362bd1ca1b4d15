# services/mlp_service.py
# 은닉층 1개 신경망의 순전파, 역전파, Adam 갱신, 소프트 타깃 갱신을 numpy 로 구현합니다.
# 모든 연산은 float64 로 수행합니다.

from typing import Optional, Tuple, Union

import numpy as np

from exceptions import NumericError, ShapeError
from models.network import AdamState, ForwardCache, Gradients, MlpParams, OutputActivation

SeedLike = Union[int, np.random.Generator, None]


def init_mlp(
    input_dim: int,
    hidden_dim: int = 30,
    output_dim: int = 1,
    activation: OutputActivation = OutputActivation.LINEAR,
    seed: SeedLike = None,
    bound: float = 3.0,
) -> MlpParams:
    """
    가중치는 U(−1/√fan_in, 1/√fan_in), 편향은 0으로 초기화합니다. 같은 시드면 같은 파라미터를 냅니다.

    Args:
        input_dim: 입력 차원
        hidden_dim: 은닉 뉴런 수
        output_dim: 출력 차원
        activation: 출력 활성화 (TANH_SCALED 이면 출력 = bound·tanh)
        seed: 정수 시드 또는 numpy Generator
        bound: TANH_SCALED 출력 한계 (m/s^2)
    """
    if min(input_dim, hidden_dim, output_dim) < 1:
        raise ShapeError(f"신경망 차원은 1 이상이어야 합니다: {input_dim}-{hidden_dim}-{output_dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    limit1 = 1.0 / np.sqrt(input_dim)
    limit2 = 1.0 / np.sqrt(hidden_dim)
    return MlpParams(
        w1=rng.uniform(-limit1, limit1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-limit2, limit2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
        activation=activation,
        bound=float(bound) if activation is OutputActivation.TANH_SCALED else 1.0,
    )


def forward(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """
    output = act(W2·relu(W1·x + b1) + b2)

    inputs 는 (input_dim,) 또는 (N, input_dim). 출력도 같은 배치 형태로 돌려줍니다.

    Raises:
        ShapeError: 입력 차원이 맞지 않는 경우
    """
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    if batch.ndim != 2 or batch.shape[1] != params.input_dim:
        raise ShapeError(f"입력 차원이 맞지 않습니다: {x.shape} (기대값 {params.input_dim})")

    pre_hidden = batch @ params.w1.T + params.b1
    hidden = np.maximum(pre_hidden, 0.0)
    pre_output = hidden @ params.w2.T + params.b2
    if params.activation is OutputActivation.TANH_SCALED:
        outputs = params.bound * np.tanh(pre_output)
    else:
        outputs = pre_output

    cache = ForwardCache(batch, pre_hidden, hidden, pre_output, outputs)
    return (outputs[0] if single else outputs), cache


def backward(
    params: MlpParams,
    cache: ForwardCache,
    output_gradient: np.ndarray,
) -> Tuple[Gradients, np.ndarray]:
    """
    역전파. output_gradient = ∂L/∂output 를 받아 파라미터 기울기와 입력 기울기를 반환합니다.
    배치 기울기는 배치 방향으로 합산됩니다 (평균은 호출 측에서 1/N 을 곱해 처리).
    """
    grad = np.asarray(output_gradient, dtype=float)
    single = grad.ndim == 1
    grad = grad.reshape(cache.outputs.shape)

    if params.activation is OutputActivation.TANH_SCALED:
        tanh = np.tanh(cache.pre_output)
        d_pre_output = grad * params.bound * (1.0 - tanh * tanh)
    else:
        d_pre_output = grad

    grad_w2 = d_pre_output.T @ cache.hidden
    grad_b2 = d_pre_output.sum(axis=0)
    d_hidden = d_pre_output @ params.w2
    d_pre_hidden = d_hidden * (cache.pre_hidden > 0.0)
    grad_w1 = d_pre_hidden.T @ cache.inputs
    grad_b1 = d_pre_hidden.sum(axis=0)
    input_gradient = d_pre_hidden @ params.w1

    gradients = Gradients(w1=grad_w1, b1=grad_b1, w2=grad_w2, b2=grad_b2)
    return gradients, (input_gradient[0] if single else input_gradient)


def adam_step(params: MlpParams, grads: Gradients, adam: AdamState) -> Tuple[MlpParams, AdamState]:
    """
    편향 보정을 포함한 표준 Adam 한 스텝 (경사 하강 방향). 새 파라미터와 새 상태를 반환합니다.

    Raises:
        NumericError: 기울기에 NaN/Inf 가 있는 경우
    """
    if not grads.is_finite():
        raise NumericError("기울기에 유한하지 않은 값이 있습니다")
    for p, g in zip(params.arrays(), grads.arrays()):
        if p.shape != g.shape:
            raise ShapeError(f"파라미터와 기울기 모양이 다릅니다: {p.shape} vs {g.shape}")

    t = adam.timestep + 1
    correction1 = 1.0 - adam.beta1 ** t
    correction2 = 1.0 - adam.beta2 ** t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), adam.m.arrays(), adam.v.arrays()):
        m = adam.beta1 * m + (1.0 - adam.beta1) * g
        v = adam.beta2 * v + (1.0 - adam.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - adam.learning_rate * m_hat / (np.sqrt(v_hat) + adam.epsilon))
        new_m.append(m)
        new_v.append(v)

    new_adam = AdamState(
        m=Gradients(*new_m),
        v=Gradients(*new_v),
        timestep=t,
        learning_rate=adam.learning_rate,
        beta1=adam.beta1,
        beta2=adam.beta2,
        epsilon=adam.epsilon,
    )
    return params.with_arrays(new_params), new_adam


def soft_update(target: MlpParams, source: MlpParams, tau: float = 0.001) -> MlpParams:
    """θ' ← τ·θ + (1 − τ)·θ'"""
    blended = []
    for t, s in zip(target.arrays(), source.arrays()):
        if t.shape != s.shape:
            raise ShapeError(f"타깃과 원본 파라미터 모양이 다릅니다: {t.shape} vs {s.shape}")
        blended.append(tau * s + (1.0 - tau) * t)
    return target.with_arrays(blended)


def predict(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """캐시 없이 출력만 계산합니다."""
    outputs, _ = forward(params, inputs)
    return outputs


def parameter_distance(a: MlpParams, b: MlpParams, order: Optional[int] = None) -> float:
    """두 파라미터 집합 사이의 노름 ‖θa − θb‖"""
    return float(np.linalg.norm(a.flat() - b.flat(), ord=order))
