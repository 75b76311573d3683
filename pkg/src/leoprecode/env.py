"""Delayed-CSI downlink MDP.

The agent observes the channel from `delay_steps` time steps ago plus the
precoders applied since (state augmentation restores the Markov property),
acts by choosing the next precoder, and is rewarded on the channel/precoder
pair from the start of the delay window:

    r_con(t) = sum-rate of (H(t - T_d), V(t - T_d))
    r(t)     = max(ceil(r_con(t) - eta1), 0) - eta2  [+1 on improvement]

Observation layout: 2 M K reals per block (column-major real parts, then
imaginary parts), one block for the delayed channel followed by the T_d + 1
most recent precoders, oldest first. Total length 2 (T_d + 2) M K.

Action layout: 2 M K reals mapping to the complex M x K precoder with
column-major index m + k M; the trace power constraint becomes a Euclidean
ball of radius sqrt(P), enforced by radial projection.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, ChannelRealization, ChannelSimulator, \
    coherence_time, fspl, noise_power
from .constants import SPEED_OF_LIGHT
from .errors import LengthMismatch, NotInitialized
from .orbits import ConstellationSpec, GroundUser, HandoverPolicy, \
    propagate_one, sample_users, slant_geometry, step_handover
from .rate import RateReport, sum_rate

DELTA_T_MODES = ("coherence", "propagation")
COHERENCE_REF_ELEVATION = math.radians(80.0)


@dataclass
class EnvConfig:
    constellation: ConstellationSpec = field(
        default_factory=ConstellationSpec.default)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    user_count: int = 2
    center_latitude: float = math.radians(54.526)
    center_longitude: float = math.radians(-3.3)
    user_radius: float = 40e3
    user_speed: float = 1.0
    epsilon: float = 0.1
    min_elevation: float = math.radians(10.0)
    power_budget: float = 1.0
    temperature: float = 280.0
    bandwidth: float | None = None       # None -> 0.02 * frequency
    sigma2: float | None = None          # None -> k_B * T * B
    delta_t: float | str = "propagation"  # seconds, "coherence" or "propagation"
    delay_steps: int | None = None       # None -> from initial serving distance
    eta1: float = 4.0
    eta2: float = 2.0
    obs_scale: float | None = None       # None -> reference FSPL / antenna gain
    episode_length: int = 480
    start_time: float = 0.0

    def resolved_sigma2(self) -> float:
        if self.sigma2 is not None:
            return self.sigma2
        bandwidth = self.bandwidth
        if bandwidth is None:
            bandwidth = 0.02 * self.channel.frequency
        return noise_power(self.temperature, bandwidth)


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray


@dataclass(frozen=True)
class StepInfo:
    t_seconds: float
    r_con: float
    reward: float
    rate: RateReport          # achieved on the channel at application time
    serving: tuple[int, int, int]
    serving_distance: float
    handover: bool


def project_action(x: np.ndarray, radius: float) -> np.ndarray:
    """Radial projection onto the origin-centred ball of `radius`.

    radius * x / (||x|| + max(0, radius - ||x||)): identity inside the ball,
    rescaling to the surface outside; idempotent; maps 0 to 0.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    return radius * x / (norm + max(0.0, radius - norm))


def action_to_precoder(a: np.ndarray, m: int, k: int) -> np.ndarray:
    """Reassemble the complex M x K precoder from its flat real encoding."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (2 * m * k,):
        raise LengthMismatch(f"action length {a.shape} vs 2*{m}*{k}")
    re = a[: m * k].reshape((m, k), order="F")
    im = a[m * k:].reshape((m, k), order="F")
    return re + 1j * im


def precoder_to_action(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    return np.concatenate([v.real.ravel(order="F"), v.imag.ravel(order="F")])


def compute_delay_steps(distance: float, delta_t: float) -> int:
    """Observation delay in steps: floor((d / c) / delta_t), at least 1 when d > 0."""
    if delta_t <= 0.0:
        raise ValueError("delta_t must be positive")
    if distance <= 0.0:
        return 0
    return max(1, int(math.floor((distance / SPEED_OF_LIGHT) / delta_t)))


def observation_length(delay_steps: int, m: int, k: int) -> int:
    return 2 * (delay_steps + 2) * m * k


def random_ball(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Uniform draw from the n-ball of `radius`."""
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    return radius * rng.random() ** (1.0 / n) * direction


class DelayedCsiEnv:
    """Sequential simulator tying orbits, channel and rate together.

    One instance owns one trajectory: episodes are contiguous windows of the
    same constellation timeline, and reset() at an episode boundary reseeds
    the channel draws from the current geometry without rewinding time.
    """

    def __init__(self, cfg: EnvConfig, seed):
        self.cfg = cfg
        ss = seed if isinstance(seed, np.random.SeedSequence) \
            else np.random.SeedSequence(seed)
        placement_ss, channel_ss, fill_ss = ss.spawn(3)
        self._rng_fill = np.random.default_rng(fill_ss)

        self.center = GroundUser(cfg.center_latitude, cfg.center_longitude)
        self.users = sample_users(self.center, cfg.user_radius, cfg.user_count,
                                  np.random.default_rng(placement_ss),
                                  cfg.user_speed)
        self.upa = cfg.channel.upa
        self.m = self.upa.m
        self.k = cfg.user_count
        self.sigma2 = cfg.resolved_sigma2()
        self.power_budget = cfg.power_budget
        self.action_radius = math.sqrt(cfg.power_budget)

        self._policy = HandoverPolicy(epsilon=cfg.epsilon,
                                      min_elevation=cfg.min_elevation)
        self._policy = step_handover(self._policy, cfg.constellation,
                                     cfg.start_time, self.center)
        serving = propagate_one(cfg.constellation, self._policy.serving,
                                cfg.start_time)
        d0 = slant_geometry(serving, self.center).distance

        if isinstance(cfg.delta_t, str):
            if cfg.delta_t == "coherence":
                self.delta_t = coherence_time(cfg.channel.frequency,
                                              cfg.constellation.min_altitude,
                                              COHERENCE_REF_ELEVATION)
            elif cfg.delta_t == "propagation":
                self.delta_t = d0 / SPEED_OF_LIGHT
            else:
                raise ValueError(f"unknown delta_t mode {cfg.delta_t!r}")
        else:
            self.delta_t = float(cfg.delta_t)
        self.delay_steps = (cfg.delay_steps if cfg.delay_steps is not None
                            else compute_delay_steps(d0, self.delta_t))

        if cfg.obs_scale is not None:
            self.obs_scale = cfg.obs_scale
        else:
            self.obs_scale = (fspl(cfg.constellation.min_altitude,
                                   cfg.channel.frequency)
                              / cfg.channel.gain_amplitude)

        self.n_actions = 2 * self.m * self.k
        self.n_states = observation_length(self.delay_steps, self.m, self.k)

        self._chan = ChannelSimulator(cfg.channel, self.users,
                                      np.random.default_rng(channel_ss))
        self._step_idx = 0
        self._h_hist: deque[ChannelRealization] = deque()
        self._v_hist: deque[np.ndarray] = deque()
        self._r_con_prev = 0.0
        self._ready = False

    # -- state access -------------------------------------------------------

    @property
    def t_seconds(self) -> float:
        return self.cfg.start_time + self._step_idx * self.delta_t

    @property
    def serving(self) -> tuple[int, int, int]:
        return self._policy.serving

    @property
    def handover_count(self) -> int:
        return self._policy.handover_count

    def current_channel(self) -> np.ndarray:
        return self._h_hist[-1].matrix.copy()

    def delayed_channel(self) -> np.ndarray:
        return self._h_hist[0].matrix.copy()

    # -- MDP interface ------------------------------------------------------

    def reset(self) -> np.ndarray:
        t = self.t_seconds
        serving = propagate_one(self.cfg.constellation, self._policy.serving, t)
        self._chan.refresh(serving, t)
        self._h_hist = deque(
            self._chan.channel_at(t - (self.delay_steps - i) * self.delta_t)
            for i in range(self.delay_steps + 1))
        if not self._ready:
            self._v_hist = deque(
                action_to_precoder(
                    random_ball(self._rng_fill, self.n_actions,
                                self.action_radius), self.m, self.k)
                for _ in range(self.delay_steps + 1))
            self._r_con_prev = 0.0
            self._ready = True
        return self._observation()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, StepInfo]:
        if not self._ready:
            raise NotInitialized("reset() must run before step()")
        legal = project_action(action, self.action_radius)
        v_now = action_to_precoder(legal, self.m, self.k)
        t_applied = self.t_seconds

        delayed = self._h_hist[0].matrix
        v_rate = v_now if self.delay_steps == 0 else self._v_hist[1]
        r_con = sum_rate(delayed, v_rate, self.sigma2).sum_rate
        reward = float(max(math.ceil(r_con - self.cfg.eta1), 0) - self.cfg.eta2)
        if r_con > self._r_con_prev:
            reward += 1.0
        self._r_con_prev = r_con
        achieved = sum_rate(self._h_hist[-1].matrix, v_now, self.sigma2)

        self._step_idx += 1
        t_next = self.t_seconds
        prev_serving = self._policy.serving
        self._policy = step_handover(self._policy, self.cfg.constellation,
                                     t_next, self.center)
        handover = self._policy.serving != prev_serving
        serving = propagate_one(self.cfg.constellation, self._policy.serving,
                                t_next)
        if handover or self._chan.due_for_refresh(t_next):
            self._chan.refresh(serving, t_next)
        self._h_hist.append(self._chan.channel_at(t_next))
        self._h_hist.popleft()
        self._v_hist.append(v_now)
        self._v_hist.popleft()

        info = StepInfo(
            t_seconds=t_applied,
            r_con=r_con,
            reward=reward,
            rate=achieved,
            serving=self._policy.serving,
            serving_distance=slant_geometry(serving, self.center).distance,
            handover=handover,
        )
        return self._observation(), reward, info

    def _observation(self) -> np.ndarray:
        blocks = [self._block(self._h_hist[0].matrix * self.obs_scale)]
        blocks.extend(self._block(v) for v in self._v_hist)
        return np.concatenate(blocks)

    @staticmethod
    def _block(x: np.ndarray) -> np.ndarray:
        return np.concatenate([x.real.ravel(order="F"),
                               x.imag.ravel(order="F")])
