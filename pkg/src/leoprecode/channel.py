"""Time-correlated Rician downlink channels for a satellite UPA.

Each user's channel column is (LOS + NLOS) / FSPL:

    h_LOS  = sqrt(k/(1+k)) * exp(j 2 pi t (vSat + vUE))
             * exp(-j 2 pi f tau_LOS) * u(theta, psi)
    h_NLOS = sqrt(1/(P(1+k))) * sum_p g_p * exp(j 2 pi t (vSat + vUE_p))
             * exp(-j 2 pi f tau_p) * u(theta, psi)

with a common satellite Doppler across paths and shared arrival angles
(negligible angular spread at LEO range). The UPA response factorizes as a
Kronecker product of two ULA steering vectors. Stochastic parameters (path
count, Rician factor, angles, gains, delays, user Dopplers) are frozen over
a refresh epoch; between refreshes only the deterministic Doppler phases
evolve, which is what gives consecutive samples their correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, EARTH_RADIUS, MU_EARTH, SPEED_OF_LIGHT
from .errors import DegenerateGeometry, NoVisibleSatellite
from .orbits import GroundUser, SatelliteState, slant_geometry


@dataclass(frozen=True)
class UpaGeometry:
    """M_x by M_y planar array, element spacing in wavelengths."""

    m_x: int
    m_y: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise ValueError("array dimensions must be >= 1")

    @property
    def m(self) -> int:
        return self.m_x * self.m_y


@dataclass
class ChannelConfig:
    frequency: float = 2e9
    upa: UpaGeometry = UpaGeometry(3, 3)
    path_count_range: tuple[int, int] = (2, 7)
    kappa_range: tuple[float, float] = (81.0, 90.0)   # linear, not dB
    excess_delay_max: float = 1e-6                    # s, NLOS over LOS
    antenna_gain_db: float = 0.0                      # combined tx+rx power gain
    refresh_period: float | None = None               # s; None -> coherence time

    @property
    def gain_amplitude(self) -> float:
        return 10.0 ** (self.antenna_gain_db / 20.0)


def steering_vector(phi: float, n: int,
                    spacing_over_wavelength: float = 0.5) -> np.ndarray:
    """Unit-norm ULA steering vector; entry i is exp(-j 2 pi (d/l) i phi)/sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(n)
    return np.exp(-2j * math.pi * spacing_over_wavelength * idx * phi) / math.sqrt(n)


def upa_response(theta: float, psi: float, geom: UpaGeometry) -> np.ndarray:
    """Planar-array response: a(cos(theta) sin(psi), M_x) kron a(cos(psi), M_y).

    The M_x factor is the outer (slow) Kronecker index.
    """
    ax = steering_vector(math.cos(theta) * math.sin(psi), geom.m_x,
                         geom.spacing_over_wavelength)
    ay = steering_vector(math.cos(psi), geom.m_y, geom.spacing_over_wavelength)
    return np.kron(ax, ay)


def fspl(distance: float, frequency: float) -> float:
    """Free-space path loss 4 pi d f / c as an amplitude divisor (not dB)."""
    if distance <= 0.0 or frequency <= 0.0:
        raise ValueError("distance and frequency must be positive")
    return 4.0 * math.pi * distance * frequency / SPEED_OF_LIGHT


def sat_doppler(speed: float, frequency: float, omega: float) -> float:
    """Satellite Doppler shift (q/c) f cos(omega); common to all paths."""
    if speed < 0.0:
        raise ValueError("speed must be >= 0")
    return speed / SPEED_OF_LIGHT * frequency * math.cos(omega)


def coherence_time(frequency: float, altitude: float, elevation: float) -> float:
    """Channel coherence interval c sqrt(R_E + h) / (f sqrt(mu) cos(elev))."""
    if frequency <= 0.0:
        raise ValueError("frequency must be positive")
    c_el = math.cos(elevation)
    if c_el <= 1e-12:
        raise DegenerateGeometry("coherence time diverges as elevation -> pi/2")
    return (SPEED_OF_LIGHT * math.sqrt(EARTH_RADIUS + altitude)
            / (frequency * math.sqrt(MU_EARTH) * c_el))


def noise_power(temperature: float, bandwidth: float) -> float:
    """Thermal noise power k_B T B in watts."""
    if temperature <= 0.0 or bandwidth <= 0.0:
        raise ValueError("temperature and bandwidth must be positive")
    return BOLTZMANN * temperature * bandwidth


@dataclass
class UserChannelParams:
    """Per-user small-scale parameters, frozen over one refresh epoch."""

    path_count: int
    rician_kappa: float
    theta: float                      # horizontal arrival angle, rad
    psi: float                        # vertical arrival angle, rad
    nlos_gains: np.ndarray            # (P,) complex, unit variance
    los_delay: float                  # s
    nlos_delays: np.ndarray           # (P,) s
    sat_doppler_hz: float             # common across LOS and NLOS paths
    los_user_doppler_hz: float
    nlos_user_dopplers_hz: np.ndarray  # (P,)
    trajectory_angle: float           # rad between satellite velocity and LOS


def los_component(params: UserChannelParams, t: float, f: float,
                  geom: UpaGeometry) -> np.ndarray:
    """Deterministic Rician component; norm is sqrt(kappa / (1 + kappa))."""
    kappa = params.rician_kappa
    phase = (2.0 * math.pi * t * (params.sat_doppler_hz + params.los_user_doppler_hz)
             - 2.0 * math.pi * f * params.los_delay)
    return (math.sqrt(kappa / (1.0 + kappa)) * np.exp(1j * phase)
            * upa_response(params.theta, params.psi, geom))


def nlos_component(params: UserChannelParams, t: float, f: float,
                   geom: UpaGeometry) -> np.ndarray:
    """Diffuse component; expected squared norm is 1 / (1 + kappa)."""
    kappa, p = params.rician_kappa, params.path_count
    phases = (2.0 * math.pi * t * (params.sat_doppler_hz
                                   + params.nlos_user_dopplers_hz)
              - 2.0 * math.pi * f * params.nlos_delays)
    coeff = np.sum(params.nlos_gains * np.exp(1j * phases))
    return (coeff / math.sqrt(p * (1.0 + kappa))
            * upa_response(params.theta, params.psi, geom))


def draw_user_params(rng: np.random.Generator, user: GroundUser,
                     sat: SatelliteState, cfg: ChannelConfig) -> tuple[UserChannelParams, float]:
    """Draw one epoch's parameters from the current geometry.

    Returns (params, fspl_divisor). Raises NoVisibleSatellite when the
    satellite sits below the user's horizon.
    """
    geo = slant_geometry(sat, user)
    if geo.elevation <= 0.0:
        raise NoVisibleSatellite(f"user at {user.latitude:.4f} rad cannot see {sat.id}")

    p_lo, p_hi = cfg.path_count_range
    path_count = int(rng.integers(p_lo, p_hi + 1))
    kappa = float(rng.uniform(*cfg.kappa_range))
    theta = float(rng.uniform(geo.elevation, math.pi - geo.elevation))
    psi = float(rng.uniform(geo.elevation, math.pi - geo.elevation))

    gains = (rng.standard_normal(path_count)
             + 1j * rng.standard_normal(path_count)) / math.sqrt(2.0)

    los_delay = geo.distance / SPEED_OF_LIGHT
    nlos_delays = los_delay + rng.uniform(0.0, cfg.excess_delay_max, path_count)

    speed = float(np.linalg.norm(sat.velocity))
    los_dir = (user.position - sat.position) / geo.distance
    cos_om = float(np.dot(sat.velocity, los_dir)) / speed if speed > 0 else 0.0
    omega = math.acos(max(-1.0, min(1.0, cos_om)))

    ue_scale = user.speed / SPEED_OF_LIGHT * cfg.frequency
    los_ue = ue_scale * math.cos(rng.uniform(0.0, 2.0 * math.pi))
    nlos_ue = ue_scale * np.cos(rng.uniform(0.0, 2.0 * math.pi, path_count))

    params = UserChannelParams(
        path_count=path_count,
        rician_kappa=kappa,
        theta=theta,
        psi=psi,
        nlos_gains=gains,
        los_delay=los_delay,
        nlos_delays=nlos_delays,
        sat_doppler_hz=sat_doppler(speed, cfg.frequency, omega),
        los_user_doppler_hz=los_ue,
        nlos_user_dopplers_hz=nlos_ue,
        trajectory_angle=omega,
    )
    return params, fspl(geo.distance, cfg.frequency)


@dataclass
class ChannelRealization:
    matrix: np.ndarray                  # H, (M, K) complex
    t: float
    frequency: float
    params: list[UserChannelParams]
    fspl: np.ndarray                    # (K,) amplitude divisors
    gain_amplitude: float = 1.0


def _evaluate(params: list[UserChannelParams], fspl_div: np.ndarray, t: float,
              cfg: ChannelConfig) -> ChannelRealization:
    cols = []
    for par, div in zip(params, fspl_div):
        col = (los_component(par, t, cfg.frequency, cfg.upa)
               + nlos_component(par, t, cfg.frequency, cfg.upa))
        cols.append(cfg.gain_amplitude * col / div)
    return ChannelRealization(np.stack(cols, axis=1), t, cfg.frequency,
                              params, fspl_div, cfg.gain_amplitude)


def sample_channel(users: list[GroundUser], sat: SatelliteState, t: float,
                   f: float, geom: UpaGeometry, rng_seed) -> ChannelRealization:
    """One-shot channel draw: fresh parameters from geometry, evaluated at t.

    `rng_seed` may be an int seed or a numpy Generator.
    """
    rng = (rng_seed if isinstance(rng_seed, np.random.Generator)
           else np.random.default_rng(rng_seed))
    cfg = ChannelConfig(frequency=f, upa=geom)
    drawn = [draw_user_params(rng, u, sat, cfg) for u in users]
    params = [d[0] for d in drawn]
    fspl_div = np.array([d[1] for d in drawn])
    return _evaluate(params, fspl_div, t, cfg)


class ChannelSimulator:
    """Epoch-refresh channel process for a fixed user set.

    Parameters are redrawn from current geometry whenever `refresh` is called
    (the environment forces this on handover and at episode boundaries) or
    when the epoch outlives its refresh period. Within an epoch the channel
    at time t follows the frozen parameters with evolving Doppler phases.
    """

    def __init__(self, cfg: ChannelConfig, users: list[GroundUser],
                 rng: np.random.Generator):
        self.cfg = cfg
        self.users = users
        self.rng = rng
        self._params: list[UserChannelParams] | None = None
        self._fspl: np.ndarray | None = None
        self._epoch_start = 0.0
        self._epoch_length = math.inf

    def refresh(self, sat: SatelliteState, t: float) -> None:
        drawn = [draw_user_params(self.rng, u, sat, self.cfg) for u in self.users]
        self._params = [d[0] for d in drawn]
        self._fspl = np.array([d[1] for d in drawn])
        self._epoch_start = t
        self._epoch_length = self._period(sat)

    def _period(self, sat: SatelliteState) -> float:
        if self.cfg.refresh_period is not None:
            return self.cfg.refresh_period
        geo = slant_geometry(sat, self.users[0])
        altitude = float(np.linalg.norm(sat.position)) - EARTH_RADIUS
        # cap the elevation so a zenith pass does not freeze the draw forever
        elevation = min(geo.elevation, math.radians(89.0))
        return coherence_time(self.cfg.frequency, altitude, elevation)

    def due_for_refresh(self, t: float) -> bool:
        return (self._params is None
                or t - self._epoch_start >= self._epoch_length)

    def channel_at(self, t: float) -> ChannelRealization:
        if self._params is None:
            raise RuntimeError("refresh() must run before channel_at()")
        return _evaluate(self._params, self._fspl, t, self.cfg)
