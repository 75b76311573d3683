"""DDPG driver: exploration, replay, target computation and network updates.

The actor outputs tanh values scaled by sqrt(P) so its reachable set covers
the action ball; exploration adds Gaussian noise after scaling and projects
back onto the ball. Targets follow the minibatch rule where the last-indexed
sample takes q = r and every other sample bootstraps through the target
networks; `bootstrap_all` switches to the conventional form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import DelayedCsiEnv, Transition, project_action, random_ball
from .errors import EmptyBatch
from .nn import Adam, Mlp, build_actor, build_critic, soft_update


@dataclass
class DDPGConfig:
    discount: float = 0.95
    tau: float = 0.005
    buffer_capacity: int = 50000
    batch_size: int = 64
    actor_lr: float = 0.001
    critic_lr: float = 0.002
    noise_var_init: float = 0.11
    noise_decay: float = 0.99996
    noise_var_floor: float = 0.05
    episodes: int = 416
    steps_per_episode: int | None = None   # None -> env.cfg.episode_length
    bootstrap_all: bool = False
    checkpoint_every: int = 0              # episodes; 0 disables


class NoiseSchedule:
    """Exploration noise variance, decayed once per action selection."""

    def __init__(self, variance: float, decay: float, floor: float):
        self.variance = variance
        self.decay = decay
        self.floor = floor

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        draw = rng.standard_normal(n) * math.sqrt(self.variance)
        self.variance = max(self.variance * self.decay, self.floor)
        return draw


@dataclass
class Batch:
    s: np.ndarray        # (B, n_states)
    a: np.ndarray        # (B, n_actions)
    r: np.ndarray        # (B,)
    s_next: np.ndarray   # (B, n_states)

    @classmethod
    def from_transitions(cls, transitions: list[Transition]) -> "Batch":
        if not transitions:
            raise EmptyBatch("batch must contain at least one transition")
        return cls(
            s=np.stack([t.s for t in transitions]),
            a=np.stack([t.a for t in transitions]),
            r=np.array([t.r for t in transitions]),
            s_next=np.stack([t.s_next for t in transitions]),
        )

    def __len__(self) -> int:
        return self.s.shape[0]


class ReplayBuffer:
    """FIFO ring of transitions with uniform without-replacement sampling."""

    def __init__(self, capacity: int, n_states: int, n_actions: int):
        self.capacity = capacity
        self._s = np.empty((capacity, n_states))
        self._a = np.empty((capacity, n_actions))
        self._r = np.empty(capacity)
        self._s2 = np.empty((capacity, n_states))
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, transition: Transition) -> None:
        i = self._next
        self._s[i] = transition.s
        self._a[i] = transition.a
        self._r[i] = transition.r
        self._s2[i] = transition.s_next
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        if self._size == 0:
            raise EmptyBatch("cannot sample from an empty buffer")
        idx = rng.choice(self._size, size=min(batch_size, self._size),
                         replace=False)
        return Batch(self._s[idx].copy(), self._a[idx].copy(),
                     self._r[idx].copy(), self._s2[idx].copy())


def select_action(actor: Mlp, observation: np.ndarray, noise: NoiseSchedule,
                  power_budget: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy policy action, projected onto the sqrt(P) ball."""
    radius = math.sqrt(power_budget)
    raw = radius * actor.forward(observation)
    raw = raw + noise.sample(rng, raw.shape[-1])
    return project_action(raw, radius)


def q_targets(batch: Batch, target_actor: Mlp, target_critic: Mlp,
              discount: float, power_budget: float,
              bootstrap_all: bool = False) -> np.ndarray:
    """Per-sample regression targets for the critic.

    Default: q_j = r_j + discount * Q*(s', mu*(s')) for every sample but the
    last of the minibatch, which takes q = r.
    """
    if len(batch) == 0:
        raise EmptyBatch("empty batch")
    radius = math.sqrt(power_budget)
    next_actions = radius * target_actor.forward(batch.s_next)
    next_q = target_critic.forward(
        np.concatenate([batch.s_next, next_actions], axis=1))[:, 0]
    q = batch.r + discount * next_q
    if not bootstrap_all:
        q[-1] = batch.r[-1]
    return q


def critic_update(critic: Mlp, batch: Batch, targets: np.ndarray,
                  opt: Adam) -> float:
    """One Adam step on the mean squared Bellman error; returns the pre-update loss."""
    x = np.concatenate([batch.s, batch.a], axis=1)
    q, cache = critic.forward_cached(x)
    err = q[:, 0] - targets
    loss = float(np.mean(err**2))
    upstream = (2.0 / len(batch)) * err[:, None]
    grads, _ = critic.backward(cache, upstream)
    opt.step(critic.parameters(), grads)
    return loss


def actor_update(actor: Mlp, critic: Mlp, batch: Batch, opt: Adam,
                 power_budget: float) -> float:
    """Deterministic policy-gradient ascent step; returns the gradient norm.

    Chains the critic's action-input gradient through the actor: the critic
    is evaluated at (s, sqrt(P) * mu(s)) and only the action block of its
    input gradient backpropagates into the actor parameters.
    """
    radius = math.sqrt(power_budget)
    mu, actor_cache = actor.forward_cached(batch.s)
    x = np.concatenate([batch.s, radius * mu], axis=1)
    _, critic_cache = critic.forward_cached(x)
    upstream = np.full((len(batch), 1), 1.0 / len(batch))
    _, input_grad = critic.backward(critic_cache, upstream)
    action_grad = radius * input_grad[:, batch.s.shape[1]:]
    ascent, _ = actor.backward(actor_cache, action_grad)
    opt.step(actor.parameters(), [-g for g in ascent])
    return float(math.sqrt(sum(float(np.sum(g**2)) for g in ascent)))


@dataclass
class EpisodeStats:
    episode: int
    mean_reward: float
    mean_sum_rate: float
    actor_loss_proxy: float
    critic_loss: float
    noise_var: float
    handovers: int


@dataclass
class StepRecord:
    episode: int
    step: int
    t_seconds: float
    r_con: float
    r_quant: float
    sum_rate: float
    serving: tuple[int, int, int]
    handover: int


@dataclass
class TrainingLog:
    episodes: list[EpisodeStats] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    agent: "DDPGAgent | None" = None


class DDPGAgent:
    """Actor/critic pair with target copies and Adam optimizers."""

    def __init__(self, n_states: int, n_actions: int, cfg: DDPGConfig,
                 power_budget: float, rng_weights: np.random.Generator):
        self.cfg = cfg
        self.power_budget = power_budget
        self.actor = build_actor(n_states, n_actions, rng_weights)
        self.critic = build_critic(n_states, n_actions, rng_weights)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(cfg.actor_lr)
        self.critic_opt = Adam(cfg.critic_lr)
        self.noise = NoiseSchedule(cfg.noise_var_init, cfg.noise_decay,
                                   cfg.noise_var_floor)

    def policy(self, observation: np.ndarray) -> np.ndarray:
        """Deterministic (noise-free) action, projected to be legal."""
        raw = math.sqrt(self.power_budget) * self.actor.forward(observation)
        return project_action(raw, math.sqrt(self.power_budget))

    def learn(self, batch: Batch) -> tuple[float, float]:
        targets = q_targets(batch, self.target_actor, self.target_critic,
                            self.cfg.discount, self.power_budget,
                            self.cfg.bootstrap_all)
        closs = critic_update(self.critic, batch, targets, self.critic_opt)
        anorm = actor_update(self.actor, self.critic, batch, self.actor_opt,
                             self.power_budget)
        soft_update(self.target_actor, self.actor, self.cfg.tau)
        soft_update(self.target_critic, self.critic, self.cfg.tau)
        return closs, anorm


def train(env: DelayedCsiEnv, cfg: DDPGConfig, seed,
          checkpoint_dir=None, collect_steps: bool = True) -> TrainingLog:
    """Run the training loop: warm-up, exploration, replay and updates.

    The first `env.delay_steps` steps of the run use uniformly random legal
    actions (the satellite has no CSI yet); learning starts on the step after
    that, once the buffer holds a full batch. Deterministic for a fixed seed.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    noise_ss, buffer_ss, weights_ss = ss.spawn(3)
    rng_noise = np.random.default_rng(noise_ss)
    rng_buffer = np.random.default_rng(buffer_ss)

    agent = DDPGAgent(env.n_states, env.n_actions, cfg, env.power_budget,
                      np.random.default_rng(weights_ss))
    buffer = ReplayBuffer(cfg.buffer_capacity, env.n_states, env.n_actions)
    log = TrainingLog()
    steps_per_episode = cfg.steps_per_episode or env.cfg.episode_length

    global_step = 0
    for episode in range(cfg.episodes):
        obs = env.reset()
        rewards, rates, closses, anorms = [], [], [], []
        handovers = 0
        for step_i in range(steps_per_episode):
            if global_step < env.delay_steps:
                action = random_ball(rng_noise, env.n_actions,
                                     env.action_radius)
            else:
                action = select_action(agent.actor, obs, agent.noise,
                                       env.power_budget, rng_noise)
            obs_next, reward, info = env.step(action)
            buffer.add(Transition(obs, action, reward, obs_next))
            if global_step >= env.delay_steps and len(buffer) >= cfg.batch_size:
                batch = buffer.sample(rng_buffer, cfg.batch_size)
                closs, anorm = agent.learn(batch)
                closses.append(closs)
                anorms.append(anorm)
            rewards.append(reward)
            rates.append(info.rate.sum_rate)
            handovers += int(info.handover)
            if collect_steps:
                log.steps.append(StepRecord(
                    episode, step_i, info.t_seconds, info.r_con, reward,
                    info.rate.sum_rate, info.serving, int(info.handover)))
            obs = obs_next
            global_step += 1
        log.episodes.append(EpisodeStats(
            episode=episode,
            mean_reward=float(np.mean(rewards)),
            mean_sum_rate=float(np.mean(rates)),
            actor_loss_proxy=float(np.mean(anorms)) if anorms else 0.0,
            critic_loss=float(np.mean(closses)) if closses else 0.0,
            noise_var=agent.noise.variance,
            handovers=handovers,
        ))
        if checkpoint_dir is not None and cfg.checkpoint_every > 0 \
                and (episode + 1) % cfg.checkpoint_every == 0:
            from .nn import save_networks
            save_networks(f"{checkpoint_dir}/checkpoint_ep{episode + 1:05d}.npz",
                          {"actor": agent.actor, "critic": agent.critic})
    log.agent = agent
    return log


def evaluate_policy(env: DelayedCsiEnv, actor: Mlp | None, episodes: int,
                    rng: np.random.Generator | None = None,
                    steps_per_episode: int | None = None) -> TrainingLog:
    """Frozen rollout: actor actions without noise, or random legal actions
    when `actor` is None. No learning, same logging schema as train()."""
    log = TrainingLog()
    steps_per_episode = steps_per_episode or env.cfg.episode_length
    radius = env.action_radius
    for episode in range(episodes):
        obs = env.reset()
        rewards, rates = [], []
        handovers = 0
        for step_i in range(steps_per_episode):
            if actor is None:
                action = random_ball(rng, env.n_actions, radius)
            else:
                action = project_action(radius * actor.forward(obs), radius)
            obs, reward, info = env.step(action)
            rewards.append(reward)
            rates.append(info.rate.sum_rate)
            handovers += int(info.handover)
            log.steps.append(StepRecord(
                episode, step_i, info.t_seconds, info.r_con, reward,
                info.rate.sum_rate, info.serving, int(info.handover)))
        log.episodes.append(EpisodeStats(
            episode, float(np.mean(rewards)), float(np.mean(rates)),
            0.0, 0.0, 0.0, handovers))
    return log
