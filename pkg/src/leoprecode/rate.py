"""Per-user SINR and sum achievable rate for a multi-user downlink.

Rates are base-2 (bit/s/Hz). The LMMSE helpers mirror the determinant-form
lower bound on mutual information that collapses, via Sylvester's identity
and rank-one signal covariances, to the familiar log2(1 + SINR) expression;
they exist as numerical cross-checks, not as a runtime path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalFailure

POWER_TOL = 1e-9


@dataclass(frozen=True)
class Precoder:
    """Complex M x K transmit precoding matrix under a trace power budget."""

    matrix: np.ndarray
    power_budget: float

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise DimensionMismatch("precoder must be a 2-D matrix")
        power = float(np.sum(np.abs(self.matrix) ** 2))
        if power > self.power_budget + POWER_TOL:
            raise ValueError(
                f"trace(V V^H) = {power:.6g} exceeds budget {self.power_budget:.6g}")

    @property
    def transmit_power(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))


@dataclass(frozen=True)
class RateReport:
    per_user_rate: np.ndarray     # bit/s/Hz
    sinr: np.ndarray

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.per_user_rate))


def _as_matrix(precoder) -> np.ndarray:
    return precoder.matrix if isinstance(precoder, Precoder) else np.asarray(precoder)


def sum_rate(channel: np.ndarray, precoder, sigma2: float) -> RateReport:
    """Sum of log2(1 + |h_k^H v_k|^2 / (sum_{i != k} |h_k^H v_i|^2 + sigma2))."""
    h = np.asarray(channel)
    v = _as_matrix(precoder)
    if h.shape != v.shape:
        raise DimensionMismatch(f"channel {h.shape} vs precoder {v.shape}")
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    gains = np.abs(h.conj().T @ v) ** 2          # (K, K); row k = user k
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    sinr = signal / (interference + sigma2)
    return RateReport(np.log2(1.0 + sinr), sinr)


def lmmse_gain(h: np.ndarray, f_all: list[np.ndarray], k: int,
               sigma2: float) -> np.ndarray:
    """LMMSE combining row h^H F_k / (h^H F_k h + Gamma_k).

    Gamma_k aggregates the other users' covariances plus noise:
    Gamma_k = sum_{i != k} h^H F_i h + sigma2.
    """
    h = np.asarray(h)
    m = h.shape[0]
    for f_mat in f_all:
        if f_mat.shape != (m, m):
            raise DimensionMismatch(f"covariance shape {f_mat.shape} vs ({m}, {m})")
    gamma = sigma2 + sum(
        float(np.real(h.conj() @ f_all[i] @ h))
        for i in range(len(f_all)) if i != k)
    numer = h.conj() @ f_all[k]
    denom = float(np.real(h.conj() @ f_all[k] @ h)) + gamma
    return numer / denom


def lower_bound_identity_check(h: np.ndarray, f_mat: np.ndarray,
                               gamma: float) -> tuple[float, float]:
    """Evaluate log2 det(I + h h^H F / gamma) against log2(1 + h^H F h / gamma).

    The two agree by Sylvester's determinant identity; both values are
    returned so callers can assert their difference.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    h = np.asarray(h)
    m = h.shape[0]
    if f_mat.shape != (m, m):
        raise DimensionMismatch(f"covariance shape {f_mat.shape} vs ({m}, {m})")
    outer = np.outer(h, h.conj()) @ f_mat / gamma
    sign, logabsdet = np.linalg.slogdet(np.eye(m) + outer)
    if not np.isfinite(logabsdet) or sign.real <= 0.0:
        raise NumericalFailure("determinant evaluation is non-finite")
    lhs = float(logabsdet / np.log(2.0))
    rhs = float(np.log2(1.0 + np.real(h.conj() @ f_mat @ h) / gamma))
    return lhs, rhs
