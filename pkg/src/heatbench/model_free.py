"""Model-free control: double deep fitted Q iteration with prioritized replay.

The Q-network maps the observed state to one value per grid action.
Targets use the double-Q rule: the online network selects the next
action, the slowly tracking target network values it.  Transitions are
stored with a priority proportional to their temporal-difference error
and replayed with probability priority**alpha.  The target network
follows the online one through soft updates w_tgt <- tau*w + (1-tau)*w_tgt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import ActionGrid, ObservedState, TransitionSample
from .model_based import ExplorationSchedule
from .neural import (AdamOptimizer, MlpParams, MlpSpec, Normalizer, fit_normalizer,
                     forward, forward_batch, identity_normalizer, train_minibatch)

__all__ = [
    "PrioritizedReplay",
    "QPair",
    "MfrlConfig",
    "ModelFreeAgent",
    "q_target",
    "compute_priority",
    "replay_sample",
    "soft_update",
]


class PrioritizedReplay:
    """Bounded ring buffer of transitions with proportional priorities."""

    def __init__(self, capacity: int, alpha: float = 0.6, offset: float = 1e-3):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if not offset > 0.0:
            raise ValueError("priority offset must be > 0")
        self.capacity = capacity
        self.alpha = alpha
        self.offset = offset
        self._samples: list[TransitionSample] = []
        self._priorities = np.zeros(capacity)
        self._next = 0

    def __len__(self) -> int:
        return len(self._samples)

    def add(self, sample: TransitionSample, priority: float) -> None:
        if not priority > 0.0:
            raise ValueError("priority must be > 0")
        if len(self._samples) < self.capacity:
            self._samples.append(sample)
            self._priorities[len(self._samples) - 1] = priority
        else:
            self._samples[self._next] = sample
            self._priorities[self._next] = priority
            self._next = (self._next + 1) % self.capacity

    def get(self, index: int) -> TransitionSample:
        return self._samples[index]

    def priority(self, index: int) -> float:
        return float(self._priorities[index])

    def update_priority(self, index: int, priority: float) -> None:
        if not priority > 0.0:
            raise ValueError("priority must be > 0")
        self._priorities[index] = priority

    def probabilities(self) -> np.ndarray:
        p = self._priorities[:len(self._samples)] ** self.alpha
        return p / p.sum()

    def states(self) -> list[ObservedState]:
        return [s.s for s in self._samples]


def replay_sample(memory: PrioritizedReplay, batch_size: int,
                  rng: np.random.Generator):
    """Draw a batch without replacement, proportional to priority**alpha.

    Returns (samples, indices); the indices allow priority write-back.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if len(memory) < batch_size:
        raise ValueError(f"memory holds {len(memory)} < batch_size {batch_size}")
    indices = rng.choice(len(memory), size=batch_size, replace=False,
                         p=memory.probabilities())
    return [memory.get(int(i)) for i in indices], indices


@dataclass
class QPair:
    """Online and target Q-networks with soft-update rate and discount."""

    online: MlpParams
    target: MlpParams
    tau: float = 0.01
    gamma: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.online.spec.layer_sizes != self.target.spec.layer_sizes:
            raise ValueError("online and target architectures must match")

    @classmethod
    def create(cls, spec: MlpSpec, tau: float = 0.01, gamma: float = 0.95) -> "QPair":
        online = MlpParams.init(spec)
        return cls(online, online.copy(), tau, gamma)


def soft_update(pair: QPair) -> QPair:
    """Move the target weights a fraction tau toward the online weights."""
    for w_t, w_o in zip(pair.target.weights, pair.online.weights):
        w_t *= 1.0 - pair.tau
        w_t += pair.tau * w_o
    for b_t, b_o in zip(pair.target.biases, pair.online.biases):
        b_t *= 1.0 - pair.tau
        b_t += pair.tau * b_o
    return pair


def q_target(sample: TransitionSample, pair: QPair, encode=None,
             selection_by_target: bool = False) -> float:
    """Bootstrap target for one transition.

    Terminal samples return the bare reward.  Otherwise the online
    network picks the next action and the target network values it
    (double-Q); `selection_by_target` switches the argmax to the target
    network instead.
    """
    if sample.terminal:
        return sample.r.total
    enc = encode if encode is not None else lambda obs: obs.features()
    x = enc(sample.s_next)
    selector = pair.target if selection_by_target else pair.online
    best = int(np.argmax(forward(selector, x)))
    return sample.r.total + pair.gamma * float(forward(pair.target, x)[best])


def compute_priority(target: float, q_sa: float, offset: float) -> float:
    """Replay priority: absolute TD error plus a strictly positive offset."""
    if not offset > 0.0:
        raise ValueError("offset must be > 0")
    return abs(target - q_sa) + offset


@dataclass(frozen=True)
class MfrlConfig:
    history_length: int = 3
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    learning_rate: float = 1e-3
    # a short discount horizon keeps the steep below-band penalty from
    # bleeding across the fitted Q surface and inflating the hold threshold;
    # the slow thermal plant makes near-myopic control close to optimal
    gamma: float = 0.70
    tau: float = 0.01
    batch_size: int = 96
    capacity: int = 4096
    warmup_samples: int = 96
    priority_alpha: float = 0.6
    priority_offset: float = 1e-3
    epsilon_initial: float = 0.5
    epsilon_exponent: float = 0.7
    # One call to train_cycle takes one gradient step; this many cycles run
    # at each 24 h boundary.
    train_cycles_per_update: int = 192
    selection_by_target: bool = False
    random_until_warmup: bool = True

    def __post_init__(self):
        if self.warmup_samples < self.batch_size:
            raise ValueError("warmup must cover at least one batch")
        if self.train_cycles_per_update < 1:
            raise ValueError("train_cycles_per_update must be >= 1")


class ModelFreeAgent:
    """Epsilon-greedy double fitted Q iteration with prioritized replay."""

    def __init__(self, cfg: MfrlConfig, grid: ActionGrid,
                 rng: np.random.Generator, seed: int = 0):
        self.cfg = cfg
        self.grid = grid
        self.replay = PrioritizedReplay(cfg.capacity, cfg.priority_alpha,
                                        cfg.priority_offset)
        n_features = cfg.history_length + 2  # temps window + ambient
        spec = MlpSpec((n_features, *cfg.hidden, len(grid)), cfg.activation,
                       init_seed=seed)
        self.pair = QPair.create(spec, cfg.tau, cfg.gamma)
        self.schedule = ExplorationSchedule(cfg.epsilon_initial, cfg.epsilon_exponent)
        self.normalizer: Normalizer | None = None
        self._optimizer = AdamOptimizer(cfg.learning_rate)
        self._rng = rng
        self._started = False
        self.q_trace: list[tuple[int, tuple[float, ...], int]] = []

    def encode(self, obs: ObservedState) -> np.ndarray:
        x = obs.features()
        return self.normalizer.apply(x) if self.normalizer is not None else x

    def q_values(self, obs: ObservedState) -> np.ndarray:
        return forward(self.pair.online, self.encode(obs))

    def act(self, obs: ObservedState, hour: int | None = None,
            epsilon: float | None = None) -> int:
        q = self.q_values(obs)
        # an explicitly passed epsilon overrides the warm-up random phase
        warming = (epsilon is None and self.cfg.random_until_warmup
                   and len(self.replay) < self.cfg.warmup_samples)
        eps = self.schedule.epsilon() if epsilon is None else epsilon
        if warming or (eps > 0.0 and self._rng.random() < eps):
            action = int(self._rng.integers(len(self.grid)))
        else:
            action = int(np.argmax(q))  # first max = lowest-power tie break
        if hour is not None:
            self.q_trace.append((hour, tuple(float(v) for v in q), action))
        return action

    def observe(self, sample: TransitionSample) -> None:
        target = q_target(sample, self.pair, self.encode, self.cfg.selection_by_target)
        q_sa = float(self.q_values(sample.s)[sample.a])
        self.replay.add(sample, compute_priority(target, q_sa, self.cfg.priority_offset))
        if self.normalizer is None and len(self.replay) >= self.cfg.warmup_samples:
            self.normalizer = fit_normalizer(
                np.stack([s.features() for s in self.replay.states()]))

    def _batch_targets(self, samples: list[TransitionSample]) -> np.ndarray:
        x_next = np.stack([self.encode(s.s_next) for s in samples])
        q_online = forward_batch(self.pair.online, x_next)
        q_tgt = forward_batch(self.pair.target, x_next)
        selector = q_tgt if self.cfg.selection_by_target else q_online
        chosen = np.argmax(selector, axis=1)
        bootstrap = q_tgt[np.arange(len(samples)), chosen]
        rewards = np.array([s.r.total for s in samples])
        terminal = np.array([s.terminal for s in samples])
        return np.where(terminal, rewards, rewards + self.pair.gamma * bootstrap)

    def train_cycle(self, rng: np.random.Generator | None = None) -> bool:
        """One replay batch: masked Q step, soft target update, priority write-back.

        Returns False (skip signal) while the replay is below warm-up.
        """
        if len(self.replay) < max(self.cfg.warmup_samples, self.cfg.batch_size):
            return False
        rng = rng if rng is not None else self._rng
        samples, indices = replay_sample(self.replay, self.cfg.batch_size, rng)

        x = np.stack([self.encode(s.s) for s in samples])
        targets = self._batch_targets(samples)
        actions = np.array([s.a for s in samples])
        t_full = np.zeros((len(samples), len(self.grid)))
        mask = np.zeros_like(t_full)
        t_full[np.arange(len(samples)), actions] = targets
        mask[np.arange(len(samples)), actions] = 1.0
        train_minibatch(self.pair.online, x, t_full, self._optimizer, mask)

        soft_update(self.pair)

        new_targets = self._batch_targets(samples)
        q_now = forward_batch(self.pair.online, x)[np.arange(len(samples)), actions]
        for sample_i, mem_i in enumerate(indices):
            self.replay.update_priority(
                int(mem_i),
                compute_priority(float(new_targets[sample_i]), float(q_now[sample_i]),
                                 self.cfg.priority_offset))
        return True

    def daily_update(self) -> int:
        """Advance epsilon and run the configured number of training cycles."""
        if self._started:
            self.schedule.advance()
        self._started = True
        done = 0
        for _ in range(self.cfg.train_cycles_per_update):
            if self.train_cycle():
                done += 1
        return done
