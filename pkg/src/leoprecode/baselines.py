"""Reference precoders: zero-forcing, matched filter (MRT) and a random floor.

Each baseline designs its precoder from either the current channel or the
delayed one, and is always scored against the true current channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import DelayedCsiEnv
from .errors import DimensionMismatch, RankDeficient, ZeroColumn
from .rate import RateReport, sum_rate

KINDS = ("zf", "mrt", "random")
CSI_VIEWS = ("perfect", "delayed")


@dataclass(frozen=True)
class BaselineKind:
    kind: str
    csi: str = "perfect"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.csi not in CSI_VIEWS:
            raise ValueError(f"csi must be one of {CSI_VIEWS}")


def zf_precoder(channel: np.ndarray, power: float) -> np.ndarray:
    """Pseudo-inverse precoder H (H^H H)^-1 with equal per-user power P/K.

    Per-column rescaling preserves the interference nulls; the total
    transmit power is exactly `power`.
    """
    h = np.asarray(channel)
    m, k = h.shape
    if k > m:
        raise DimensionMismatch(f"need K <= M, got K={k}, M={m}")
    svals = np.linalg.svd(h, compute_uv=False)
    if svals[-1] < 1e-12 * svals[0]:
        raise RankDeficient("channel columns are numerically dependent")
    raw = h @ np.linalg.inv(h.conj().T @ h)
    norms = np.linalg.norm(raw, axis=0)
    return raw / norms * np.sqrt(power / k)


def mrt_precoder(channel: np.ndarray, power: float) -> np.ndarray:
    """Matched filter: each column sqrt(P/K) h_k / ||h_k||."""
    h = np.asarray(channel)
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0.0):
        raise ZeroColumn("channel has an all-zero column")
    return h / norms * np.sqrt(power / h.shape[1])


def random_precoder(m: int, k: int, power: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian precoder normalized to full transmit power."""
    v = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return v * np.sqrt(power) / np.linalg.norm(v)


def _design(kind: BaselineKind, h_view: np.ndarray, power: float,
            rng: np.random.Generator | None) -> np.ndarray:
    if kind.kind == "zf":
        return zf_precoder(h_view, power)
    if kind.kind == "mrt":
        return mrt_precoder(h_view, power)
    return random_precoder(h_view.shape[0], h_view.shape[1], power, rng)


def evaluate_baseline(kind: BaselineKind, trace: list[tuple[np.ndarray, np.ndarray]],
                      power: float, sigma2: float,
                      rng: np.random.Generator | None = None) -> list[RateReport]:
    """Score a baseline over an aligned (H(t), H(t - T_d)) channel trace."""
    reports = []
    for h_now, h_delayed in trace:
        view = h_now if kind.csi == "perfect" else h_delayed
        precoder = _design(kind, view, power, rng)
        reports.append(sum_rate(h_now, precoder, sigma2))
    return reports


def collect_channel_trace(env: DelayedCsiEnv,
                          steps: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Roll the environment forward recording (current, delayed) channel pairs.

    The channel process does not depend on the applied precoder, so zero
    actions are driven through the environment.
    """
    env.reset()
    zero = np.zeros(env.n_actions)
    trace = []
    for _ in range(steps):
        trace.append((env.current_channel(), env.delayed_channel()))
        env.step(zero)
    return trace
