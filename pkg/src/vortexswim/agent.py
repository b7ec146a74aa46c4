"""DQN machinery: replay memory, exploration schedule, TD targets, the
training loop, and greedy evaluation.

The state window (nine stacked observations plus the previous action
index) is fed to the LSTM as a nine-step sequence, oldest observation
first, with the action scalar appended to every step's input vector.  The
value network trains on mean-squared TD error against a hard-copied target
network; gradients flow only through the value network.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import AdamState, NetSpec, QNetwork, adam_step

WINDOW_OBS = 9
OBS_DIM = 6


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool   # True only for genuine terminals (bootstrapping stops)


class ReplayBuffer:
    """Fixed-capacity ring with uniform no-replacement batch sampling."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.fill = 0

    def __len__(self) -> int:
        return self.fill

    def push(self, tr: Transition) -> None:
        k = self.cursor
        self.states[k] = tr.state
        self.actions[k] = tr.action
        self.rewards[k] = tr.reward
        self.next_states[k] = tr.next_state
        self.dones[k] = tr.done
        self.cursor = (k + 1) % self.capacity
        self.fill = min(self.fill + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.fill, size=batch_size, replace=False)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


@dataclass
class Schedule:
    """Exploration and optimization knobs."""

    eps_start: float = 1.0
    eps_floor: float = 0.05
    eps_decay: float = 4.75e-5   # linear decay per control step
    gamma: float = 0.99
    learning_rate: float = 1e-3
    target_sync: int = 100       # gradient steps between hard copies

    def epsilon_at(self, step: int) -> float:
        return max(self.eps_floor, self.eps_start - self.eps_decay * step)


def window_to_sequence(windows: np.ndarray) -> np.ndarray:
    """(B, 55) state windows -> (B, 9, 7) LSTM input sequences.

    The window stores the newest observation first; the network consumes
    time in natural order, so the slices are reversed.  The previous-action
    scalar rides along on every step."""
    windows = np.atleast_2d(windows)
    B = windows.shape[0]
    obs = windows[:, :WINDOW_OBS * OBS_DIM].reshape(B, WINDOW_OBS, OBS_DIM)
    obs = obs[:, ::-1, :]
    act = np.broadcast_to(windows[:, -1][:, None, None], (B, WINDOW_OBS, 1))
    return np.concatenate([obs, act], axis=2)


def select_action(q_values: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy; ties resolve to the lowest index via argmax."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def td_target(rewards: np.ndarray, next_states: np.ndarray, dones: np.ndarray,
              target_net: QNetwork, gamma: float) -> np.ndarray:
    """y = r + gamma max_a' Q(s', a'; target), zero bootstrap on terminals."""
    q_next = target_net.forward(window_to_sequence(next_states))
    return rewards + gamma * q_next.max(axis=1) * (~dones)


def loss_and_gradient(net: QNetwork, states: np.ndarray, actions: np.ndarray,
                      targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared TD error on the chosen-action Q and its BPTT gradient."""
    seq = window_to_sequence(states)
    q, cache = net.forward(seq, need_cache=True)
    B = len(actions)
    qa = q[np.arange(B), actions]
    err = qa - targets
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite training loss {loss}")
    dq = np.zeros_like(q)
    dq[np.arange(B), actions] = 2.0 * err / B
    return loss, net.backward(cache, dq)


@dataclass
class EpisodeRecord:
    episode: int
    steps: int
    cumulative_reward: float
    outcome: str

    HEADER = "episode,steps,cumulative_reward,outcome"

    def to_csv(self) -> str:
        return (f"{self.episode},{self.steps},{self.cumulative_reward!r},"
                f"{self.outcome}")


class DQNAgent:
    """Value/target network pair with replay and counters."""

    def __init__(self, spec: NetSpec, schedule: Schedule,
                 buffer_capacity: int = 5000, batch_size: int = 100,
                 state_dim: int = 55, seed: int = 0):
        self.value = QNetwork(spec, seed=seed)
        self.target = self.value.clone()
        self.adam = AdamState.for_network(self.value)
        self.schedule = schedule
        self.replay = ReplayBuffer(buffer_capacity, state_dim)
        self.batch_size = batch_size
        self.env_steps = 0
        self.grad_steps = 0
        self.episodes_done = 0

    def epsilon(self) -> float:
        return self.schedule.epsilon_at(self.env_steps)

    def q_values(self, window: np.ndarray) -> np.ndarray:
        return self.value.forward(window_to_sequence(window[None, :]))[0]

    def act(self, window: np.ndarray, epsilon: float,
            rng: np.random.Generator) -> int:
        return select_action(self.q_values(window), epsilon, rng)

    def remember(self, state, action, reward, next_state, terminal) -> None:
        self.replay.push(Transition(state=state, action=action, reward=reward,
                                    next_state=next_state, done=terminal))

    def learn(self, rng: np.random.Generator) -> float | None:
        """One gradient step if the buffer can fill a batch."""
        if len(self.replay) < self.batch_size:
            return None
        s, a, r, s2, done = self.replay.sample(self.batch_size, rng)
        y = td_target(r, s2, done, self.target, self.schedule.gamma)
        loss, grad = loss_and_gradient(self.value, s, a, y)
        adam_step(self.value, grad, self.adam, lr=self.schedule.learning_rate)
        self.grad_steps += 1
        if self.grad_steps % self.schedule.target_sync == 0:
            self.target.copy_from(self.value)
        return loss


def episode_seed(master_seed: int, episode: int) -> list[int]:
    return [master_seed, episode]


def train(env, agent: DQNAgent, n_episodes: int, master_seed: int,
          on_episode_end=None, rng_act=None, rng_batch=None
          ) -> list[EpisodeRecord]:
    """Run the training loop; per-episode rewards are the learning curve.

    Environment divergence is a terminal outcome, not an error: the episode
    ends with the exit penalty and training continues.  External RNGs may
    be passed so a resumed run continues their serialized states."""
    if rng_act is None:
        rng_act = np.random.default_rng([master_seed, 0xA])
    if rng_batch is None:
        rng_batch = np.random.default_rng([master_seed, 0xB])
    records = []
    start = agent.episodes_done
    for e in range(start, n_episodes):
        window = env.reset(seed=episode_seed(master_seed, e))
        done = False
        total = 0.0
        steps = 0
        outcome = "timeout"
        while not done:
            eps = agent.epsilon()
            action = agent.act(window, eps, rng_act)
            result = env.step(action)
            agent.env_steps += 1
            agent.remember(window, action, result.reward, result.window,
                           terminal=not result.bootstrap)
            agent.learn(rng_batch)
            window = result.window
            total += result.reward
            steps += 1
            done = result.done
            outcome = result.outcome
        agent.episodes_done = e + 1
        rec = EpisodeRecord(episode=e, steps=steps, cumulative_reward=total,
                            outcome=outcome)
        records.append(rec)
        if on_episode_end is not None:
            on_episode_end(rec, env, agent)
    return records


@dataclass
class Rollout:
    start_x: float
    outcome: str
    steps: int
    final_distance: float
    total_reward: float
    trajectory: list = field(default_factory=list)


def evaluate(env, net: QNetwork, start_xs, max_steps: int | None = None,
             seed: int = 0) -> list[Rollout]:
    """Greedy rollouts from the given start abscissas (units of L)."""
    rollouts = []
    for k, x0 in enumerate(start_xs):
        window = env.reset(seed=[seed, k], init_x=float(x0))
        done = False
        steps = 0
        total = 0.0
        outcome = "timeout"
        while not done:
            q = net.forward(window_to_sequence(window[None, :]))[0]
            result = env.step(int(np.argmax(q)))
            window = result.window
            total += result.reward
            steps += 1
            done = result.done
            outcome = result.outcome
            if max_steps is not None and steps >= max_steps:
                break
        obs = result.observation
        final_distance = float(np.hypot(obs.x, obs.y))
        label = {"captured": "captured", "timeout": "timeout"}.get(
            outcome, "washed_away")
        rollouts.append(Rollout(start_x=float(x0), outcome=label, steps=steps,
                                final_distance=final_distance,
                                total_reward=total,
                                trajectory=list(env.trajectory)))
    return rollouts


def sweep_points(lo: float, hi: float, count: int) -> np.ndarray:
    """Uniformly spaced start points, inclusive of both ends."""
    if count == 1:
        return np.array([lo])
    return np.linspace(lo, hi, count)
