# models/network.py
# 은닉층 1개짜리 완전연결 신경망의 파라미터와 옵티마이저 상태를 정의합니다.

from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np


class OutputActivation(Enum):
    """출력층 활성화 함수"""
    TANH_SCALED = "tanh_scaled"
    LINEAR = "linear"


# 파라미터 배열의 고정 순서 (체크포인트 포맷도 이 순서를 따름)
PARAMETER_ORDER: Tuple[str, ...] = ("w1", "b1", "w2", "b2")


@dataclass
class MlpParams:
    """
    입력 → 은닉(ReLU) → 출력 신경망 파라미터

    w1: (hidden, input), b1: (hidden,), w2: (output, hidden), b2: (output,)
    activation 이 TANH_SCALED 이면 출력 = bound * tanh(z)
    """
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: OutputActivation = OutputActivation.LINEAR
    bound: float = 1.0

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def parameter_count(self) -> int:
        return sum(array.size for array in self.arrays())

    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)

    def with_arrays(self, arrays) -> "MlpParams":
        """같은 구조에 새 배열을 넣은 파라미터를 반환합니다."""
        w1, b1, w2, b2 = arrays
        return MlpParams(w1, b1, w2, b2, self.activation, self.bound)

    def copy(self) -> "MlpParams":
        return self.with_arrays(tuple(array.copy() for array in self.arrays()))

    def flat(self) -> np.ndarray:
        """PARAMETER_ORDER 순서로 펼친 1차원 벡터"""
        return np.concatenate([array.ravel() for array in self.arrays()])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(array)) for array in self.arrays())


@dataclass
class Gradients:
    """MlpParams 와 같은 모양의 편미분 값"""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(*(array * factor for array in self.arrays()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(array)) for array in self.arrays())

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "Gradients":
        return cls(*(np.zeros_like(array) for array in params.arrays()))


@dataclass
class AdamState:
    """Adam 옵티마이저 상태 (1차/2차 모멘트 누적값과 타임스텝)"""
    m: Gradients
    v: Gradients
    timestep: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams, learning_rate: float = 0.001, **kwargs) -> "AdamState":
        return cls(
            m=Gradients.zeros_like(params),
            v=Gradients.zeros_like(params),
            learning_rate=learning_rate,
            **kwargs,
        )


@dataclass
class ForwardCache:
    """역전파를 위한 순전파 중간값"""
    inputs: np.ndarray
    pre_hidden: np.ndarray
    hidden: np.ndarray
    pre_output: np.ndarray
    outputs: np.ndarray = field(repr=False)
