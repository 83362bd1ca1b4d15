# services/ddpg_service.py
# DDPG 학습: 리플레이 버퍼, OU 탐색 노이즈, 크리틱/액터 갱신, 타깃 추적, 다중 이벤트 학습 루프를 담당합니다.

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import NormalizationConfig, RewardConfig, TrainConfig
from exceptions import BufferNotReadyError, NumericError, TrainingError
from models.network import AdamState, MlpParams, OutputActivation
from models.simulation import CfState
from models.trajectory import CfEvent, LognormalParams
from models.training import (
    AgentSnapshot,
    CurvePoint,
    OuNoiseState,
    TrainingResult,
    Transition,
    TransitionBatch,
)
from utils.constants import CurveColumns
from utils.error_handler import handle_exceptions
from utils.logger import LoggerMixin

from .env_service import CarFollowingEnv
from .mlp_service import adam_step, backward, forward, init_mlp, predict, soft_update
from .reward_service import RewardCalculator

STATE_DIM = 3


def normalize_state(state: CfState, scales: NormalizationConfig = NormalizationConfig()) -> np.ndarray:
    """
    신경망 입력용 상태 정규화: [V/speed_scale, ΔV/relative_speed_scale, S/gap_scale]
    액터와 크리틱 입력 스케일은 이 함수 한 곳에서만 정합니다.
    """
    return np.array([
        state.follower_speed / scales.speed_scale,
        state.relative_speed / scales.relative_speed_scale,
        state.gap / scales.gap_scale,
    ])


def critic_input(states: np.ndarray, actions: np.ndarray, action_scale: float = 3.0) -> np.ndarray:
    """크리틱 입력 = (정규화 상태, 행동 / action_scale) 를 이어 붙인 벡터"""
    return np.column_stack([states, np.asarray(actions, dtype=float).reshape(-1) / action_scale])


class ReplayBuffer:
    """
    용량이 고정된 FIFO 리플레이 버퍼. 가득 차면 가장 오래된 전이부터 덮어씁니다.
    미니배치 구성을 위해 정규화 상태/행동/보상 배열을 함께 유지합니다.
    """

    def __init__(self, capacity: int = 7000, state_dim: int = STATE_DIM):
        if capacity < 1:
            raise ValueError(f"버퍼 용량은 1 이상이어야 합니다: {capacity}")
        self.capacity = capacity
        self._items: List[Optional[Transition]] = [None] * capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros(capacity)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._terminals = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, transition: Transition) -> "ReplayBuffer":
        """전이를 추가합니다. 가득 찬 경우 가장 오래된 전이가 빠집니다."""
        index = self._next
        self._items[index] = transition
        self._states[index] = transition.state_norm if transition.state_norm is not None else normalize_state(transition.state)
        self._next_states[index] = (
            transition.next_state_norm if transition.next_state_norm is not None
            else normalize_state(transition.next_state)
        )
        self._actions[index] = transition.action
        self._rewards[index] = transition.reward
        self._terminals[index] = transition.terminal
        self._next = (index + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        return self

    def is_ready(self, n: int) -> bool:
        return self._size >= n

    def items(self) -> List[Transition]:
        """오래된 것부터 최신 순으로 저장된 전이"""
        start = self._next if self._size == self.capacity else 0
        return [self._items[(start + i) % self.capacity] for i in range(self._size)]

    def _sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self._size < n:
            raise BufferNotReadyError(f"버퍼 샘플 부족: {self._size} < {n}")
        return rng.integers(0, self._size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> List[Transition]:
        """
        복원 추출로 n개 전이를 균등하게 뽑습니다.

        Raises:
            BufferNotReadyError: 저장된 전이가 n개 미만인 경우 (호출 측은 갱신을 건너뜀)
        """
        return [self._items[i] for i in self._sample_indices(n, rng)]

    def sample_batch(self, n: int, rng: np.random.Generator) -> TransitionBatch:
        """sample 과 같은 추출을 배열 미니배치로 반환합니다."""
        indices = self._sample_indices(n, rng)
        return TransitionBatch(
            states=self._states[indices],
            actions=self._actions[indices],
            rewards=self._rewards[indices],
            next_states=self._next_states[indices],
            terminals=self._terminals[indices],
        )


def ou_sample(noise: OuNoiseState, rng: np.random.Generator) -> Tuple[float, OuNoiseState]:
    """x ← x + θ(μ − x) + σ·g,  g ~ N(0, 1)  (단위 시간 간격 이산화)"""
    value = noise.value + noise.theta * (noise.mu - noise.value) + noise.sigma * rng.standard_normal()
    return value, OuNoiseState(value=value, theta=noise.theta, sigma=noise.sigma, mu=noise.mu)


class OuNoise:
    """시간 상관 탐색 노이즈 생성기"""

    def __init__(self, theta: float = 0.15, sigma: float = 0.2, mu: float = 0.0):
        self.state = OuNoiseState(value=mu, theta=theta, sigma=sigma, mu=mu)

    def reset(self) -> None:
        self.state = OuNoiseState(value=self.state.mu, theta=self.state.theta, sigma=self.state.sigma, mu=self.state.mu)

    def sample(self, rng: np.random.Generator) -> float:
        value, self.state = ou_sample(self.state, rng)
        return value

    def path(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n 스텝 연속 샘플 (정규 난수를 한 번에 뽑아 사용)"""
        s = self.state
        normals = rng.standard_normal(n)
        values = np.empty(n)
        x = s.value
        for i in range(n):
            x = x + s.theta * (s.mu - x) + s.sigma * normals[i]
            values[i] = x
        self.state = OuNoiseState(value=float(x), theta=s.theta, sigma=s.sigma, mu=s.mu)
        return values


@dataclass
class DdpgNetworks:
    """액터, 크리틱, 두 타깃 네트워크와 옵티마이저 상태"""
    actor: MlpParams
    critic: MlpParams
    actor_target: MlpParams
    critic_target: MlpParams
    actor_adam: AdamState
    critic_adam: AdamState
    action_scale: float = 3.0

    @classmethod
    def initialize(
        cls,
        config: TrainConfig,
        rng: np.random.Generator,
        action_scale: float = 3.0,
        state_dim: int = STATE_DIM,
    ) -> "DdpgNetworks":
        actor = init_mlp(state_dim, config.hidden_dim, 1, OutputActivation.TANH_SCALED, rng, config.max_acceleration)
        critic = init_mlp(state_dim + 1, config.hidden_dim, 1, OutputActivation.LINEAR, rng)
        return cls(
            actor=actor,
            critic=critic,
            actor_target=actor.copy(),
            critic_target=critic.copy(),
            actor_adam=AdamState.for_params(actor, config.actor_learning_rate),
            critic_adam=AdamState.for_params(critic, config.critic_learning_rate),
            action_scale=action_scale,
        )

    def snapshot(self, episode: int = 0) -> AgentSnapshot:
        return AgentSnapshot(
            actor=self.actor.copy(),
            critic=self.critic.copy(),
            actor_target=self.actor_target.copy(),
            critic_target=self.critic_target.copy(),
            episode=episode,
        )


def critic_update(nets: DdpgNetworks, batch: TransitionBatch, gamma: float = 0.99) -> float:
    """
    y_i = r_i + γ·Q'(s_{i+1}, μ'(s_{i+1})) (종료 전이는 y_i = r_i),
    L = (1/N)Σ(y_i − Q(s_i, a_i))² 에 대해 Adam 한 스텝. 갱신 전 손실을 반환합니다.

    Raises:
        NumericError: 목표값이 유한하지 않은 경우 (문제 전이 인덱스 포함)
    """
    n = len(batch)
    if n == 0:
        raise TrainingError("빈 미니배치로는 크리틱을 갱신할 수 없습니다")

    next_actions = predict(nets.actor_target, batch.next_states)[:, 0]
    q_next = predict(nets.critic_target, critic_input(batch.next_states, next_actions, nets.action_scale))[:, 0]
    targets = np.where(batch.terminals, batch.rewards, batch.rewards + gamma * q_next)
    bad = ~np.isfinite(targets)
    if bad.any():
        index = int(np.argmax(bad))
        raise NumericError(f"크리틱 목표값이 유한하지 않습니다 (전이 {index}): {targets[index]}", transition_index=index)

    q, cache = forward(nets.critic, critic_input(batch.states, batch.actions, nets.action_scale))
    errors = targets - q[:, 0]
    loss = float(np.mean(errors ** 2))

    output_gradient = (-2.0 / n) * errors.reshape(-1, 1)
    grads, _ = backward(nets.critic, cache, output_gradient)
    nets.critic, nets.critic_adam = adam_step(nets.critic, grads, nets.critic_adam)
    return loss


def policy_gradient(nets: DdpgNetworks, states: np.ndarray):
    """
    (1/N)Σ ∇_a Q(s, a)|_{a=μ(s)} · ∇_θ μ(s) 와 갱신 전 평균 Q 를 계산합니다.
    크리틱 입력 기울기의 행동 성분을 액터 역전파로 이어 붙입니다.
    """
    n = len(states)
    actions, actor_cache = forward(nets.actor, states)
    q, critic_cache = forward(nets.critic, critic_input(states, actions[:, 0], nets.action_scale))
    _, input_gradient = backward(nets.critic, critic_cache, np.full((n, 1), 1.0 / n))
    dq_da = input_gradient[:, -1:] / nets.action_scale
    actor_grads, _ = backward(nets.actor, actor_cache, dq_da)
    return actor_grads, float(np.mean(q))


def actor_update(nets: DdpgNetworks, batch: TransitionBatch) -> float:
    """샘플 정책 기울기로 액터에 경사 상승 Adam 한 스텝. 크리틱은 건드리지 않습니다. 갱신 전 평균 Q 반환"""
    if len(batch) == 0:
        raise TrainingError("빈 미니배치로는 액터를 갱신할 수 없습니다")
    actor_grads, mean_q = policy_gradient(nets, batch.states)
    nets.actor, nets.actor_adam = adam_step(nets.actor, actor_grads.scaled(-1.0), nets.actor_adam)
    return mean_q


def update_targets(nets: DdpgNetworks, tau: float = 0.001) -> None:
    """두 타깃 네트워크를 소프트 갱신합니다."""
    nets.actor_target = soft_update(nets.actor_target, nets.actor, tau)
    nets.critic_target = soft_update(nets.critic_target, nets.critic, tau)


def actor_policy(actor: MlpParams, scales: NormalizationConfig = NormalizationConfig()) -> Callable[[CfState], float]:
    """노이즈 없는 결정적 정책 (상태 → 가속도)"""
    return lambda state: float(predict(actor, normalize_state(state, scales))[0])


class DdpgTrainer(LoggerMixin):
    """DDPG 학습 루프 (단일 스레드가 네트워크와 버퍼를 소유)"""

    def __init__(
        self,
        config: Optional[TrainConfig] = None,
        reward: Optional[RewardConfig] = None,
        scales: Optional[NormalizationConfig] = None,
        headway_params: Optional[LognormalParams] = None,
    ):
        self.config = config or TrainConfig()
        self.scales = scales or NormalizationConfig()
        self.env = CarFollowingEnv(
            RewardCalculator(reward, headway_params),
            dt=self.config.dt,
            max_acceleration=self.config.max_acceleration,
        )
        self.buffer: Optional[ReplayBuffer] = None

    def evaluate(self, actor: MlpParams, events: Sequence[CfEvent]) -> Tuple[float, int]:
        """노이즈 없는 정책의 평균 스텝 보상(전체 스텝 기준)과 충돌 이벤트 수"""
        policy = actor_policy(actor, self.scales)
        total, steps, collisions = 0.0, 0, 0
        for event in events:
            log = self.env.run_event(policy, event)
            total += log.total_reward
            steps += len(log)
            collisions += int(log.collided)
        return (total / steps if steps else 0.0), collisions

    @handle_exceptions(default_message="DDPG 학습에 실패했습니다")
    def train(
        self,
        events: Sequence[CfEvent],
        eval_events: Optional[Sequence[CfEvent]] = None,
        seed: int = 0,
    ) -> TrainingResult:
        """
        학습 이벤트 전체를 순서대로 주행하는 것을 한 에피소드로 보고 config.episodes 번 반복합니다.
        매 에피소드 후 평가 이벤트의 평균 스텝 보상이 가장 높은 스냅샷을 최종 선택합니다.

        Raises:
            TrainingError: 2 스텝 이상 진행 가능한 학습 이벤트가 없는 경우
        """
        config = self.config
        usable = [event for event in events if len(event) - 1 >= 2]
        if not usable:
            raise TrainingError("2 스텝 이상 진행 가능한 학습 이벤트가 없습니다")
        if len(usable) < len(events):
            self.log_warning(f"너무 짧은 이벤트 {len(events) - len(usable)}개를 학습에서 제외했습니다")
        eval_events = list(eval_events) if eval_events else []
        if not eval_events:
            self.log_warning("평가 이벤트가 없어 학습 이벤트로 체크포인트를 선택합니다")
            eval_events = usable

        init_seq, noise_seq, sample_seq = np.random.SeedSequence(seed).spawn(3)
        noise_rng = np.random.default_rng(noise_seq)
        sample_rng = np.random.default_rng(sample_seq)
        nets = DdpgNetworks.initialize(config, np.random.default_rng(init_seq), self.scales.action_scale)

        initial = nets.snapshot(episode=0)
        result = TrainingResult(best=initial, final=initial)
        if config.episodes == 0:
            return result

        buffer = self.buffer = ReplayBuffer(config.buffer_capacity)
        noise = OuNoise(config.ou_theta, config.ou_sigma, config.ou_mu)
        best_reward = -np.inf
        bound = config.max_acceleration

        for episode in range(1, config.episodes + 1):
            total, steps, loss = 0.0, 0, float("nan")
            for event in usable:
                state = self.env.reset(event)
                state_norm = normalize_state(state, self.scales)
                noise.reset()
                while not state.terminal:
                    mu = float(predict(nets.actor, state_norm)[0])
                    action = float(np.clip(mu + noise.sample(noise_rng), -bound, bound))
                    outcome = self.env.step(state, action, event)
                    next_state = outcome.next_state
                    next_norm = normalize_state(next_state, self.scales)
                    buffer.push(Transition(
                        state=state,
                        action=outcome.action,
                        reward=outcome.reward.total,
                        next_state=next_state,
                        terminal=outcome.terminal,
                        state_norm=state_norm,
                        next_state_norm=next_norm,
                    ))
                    total += outcome.reward.total
                    steps += 1

                    if buffer.is_ready(config.minibatch):
                        batch = buffer.sample_batch(config.minibatch, sample_rng)
                        loss = critic_update(nets, batch, config.gamma)
                        actor_update(nets, batch)
                        update_targets(nets, config.tau)

                    state, state_norm = next_state, next_norm

            train_mean = total / steps if steps else 0.0
            eval_mean, collisions = self.evaluate(nets.actor, eval_events)
            result.curve.append(CurvePoint(episode, train_mean, eval_mean))
            if eval_mean > best_reward:
                best_reward = eval_mean
                result.best = nets.snapshot(episode)
                result.best_episode = episode

            self.log_info(
                f"에피소드 {episode}/{config.episodes} - 학습 평균 보상 {train_mean:.4f}, "
                f"평가 평균 보상 {eval_mean:.4f}, 평가 충돌 {collisions}건, 버퍼 {len(buffer)}, 크리틱 손실 {loss:.5f}"
            )

        result.final = nets.snapshot(config.episodes)
        return result


def train(
    events: Sequence[CfEvent],
    config: TrainConfig,
    eval_events: Optional[Sequence[CfEvent]] = None,
    seed: int = 0,
    reward: Optional[RewardConfig] = None,
    scales: Optional[NormalizationConfig] = None,
    headway_params: Optional[LognormalParams] = None,
) -> TrainingResult:
    """DdpgTrainer 를 만들어 학습하는 편의 함수"""
    return DdpgTrainer(config, reward, scales, headway_params).train(events, eval_events, seed)


def write_curve(curve: Sequence[CurvePoint], path: Union[str, Path]) -> Path:
    """에피소드별 학습/평가 평균 스텝 보상을 CurveColumns 순서로 저장합니다."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(p.episode, p.train_mean_step_reward, p.eval_mean_step_reward) for p in curve],
        columns=list(CurveColumns.ORDER),
    )
    frame.to_csv(path, index=False, float_format="%.10g")
    return path
