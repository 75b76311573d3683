"""Circular LEO constellation propagation, ground geometry and handover.

Satellites fly circular Keplerian orbits with uniform in-plane phasing and
uniform RAAN spacing per layer (Walker-delta style). Positions are reported
in an Earth-fixed frame; Earth rotation at the sidereal rate is applied by
default and can be switched off for tests. Velocities are the inertial
velocity vectors expressed in Earth-fixed axes, so their norm equals the
circular orbital speed sqrt(mu / (R_E + altitude)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import EARTH_RADIUS, EARTH_ROTATION_RATE, MU_EARTH
from .errors import NoVisibleSatellite

DEFAULT_MIN_ELEVATION = math.radians(80.0)


@dataclass(frozen=True)
class LayerSpec:
    """One constellation shell: orbital planes at a common altitude/inclination."""

    plane_count: int
    sats_per_plane: int
    altitude: float          # m
    inclination: float       # rad
    raan_offset: float = 0.0
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.plane_count < 1 or self.sats_per_plane < 1:
            raise ValueError("plane_count and sats_per_plane must be >= 1")
        if self.altitude <= 0.0:
            raise ValueError("altitude must be positive")
        if not 0.0 <= self.inclination <= math.pi:
            raise ValueError("inclination must lie in [0, pi]")

    @property
    def radius(self) -> float:
        return EARTH_RADIUS + self.altitude

    @property
    def mean_motion(self) -> float:
        return math.sqrt(MU_EARTH / self.radius**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    @property
    def speed(self) -> float:
        return math.sqrt(MU_EARTH / self.radius)


@dataclass(frozen=True)
class ConstellationSpec:
    layers: tuple[LayerSpec, ...]
    earth_rotation: bool = True

    @classmethod
    def default(cls, earth_rotation: bool = True) -> "ConstellationSpec":
        """Four-layer Starlink-like shell set."""
        return cls(
            layers=(
                LayerSpec(72, 22, 550e3, math.radians(53.0)),
                LayerSpec(36, 20, 570e3, math.radians(70.0)),
                LayerSpec(6, 58, 560e3, math.radians(97.6)),
                LayerSpec(72, 22, 540e3, math.radians(53.2)),
            ),
            earth_rotation=earth_rotation,
        )

    @property
    def total_count(self) -> int:
        return sum(l.plane_count * l.sats_per_plane for l in self.layers)

    @property
    def min_altitude(self) -> float:
        return min(l.altitude for l in self.layers)


@dataclass(frozen=True)
class SatelliteState:
    id: tuple[int, int, int]     # (layer, plane, slot)
    position: np.ndarray         # Earth-fixed, m
    velocity: np.ndarray         # inertial velocity in Earth-fixed axes, m/s


@dataclass(frozen=True)
class GroundUser:
    """Fixed-latitude/longitude point on the spherical Earth (co-rotating)."""

    latitude: float              # rad
    longitude: float             # rad
    altitude: float = 0.0        # m
    speed: float = 1.0           # m/s, local terminal motion for Doppler draws

    @property
    def position(self) -> np.ndarray:
        r = EARTH_RADIUS + self.altitude
        clat = math.cos(self.latitude)
        return np.array([
            r * clat * math.cos(self.longitude),
            r * clat * math.sin(self.longitude),
            r * math.sin(self.latitude),
        ])


@dataclass(frozen=True)
class SlantGeometry:
    distance: float              # m
    elevation: float             # rad above local horizon


@dataclass(frozen=True)
class HandoverPolicy:
    """Distance-ratio handover state: switch only when the nearest candidate
    is more than a factor (1 - epsilon) closer than the serving satellite."""

    epsilon: float = 0.0
    serving: tuple[int, int, int] | None = None
    handover_count: int = 0
    min_elevation: float = DEFAULT_MIN_ELEVATION

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")


def _layer_arrays(layer: LayerSpec, layer_idx: int, t: float, earth_rotation: bool):
    """Positions/velocities of every satellite of one layer at time t.

    Returns (ids (n,3) int, pos (n,3), vel (n,3)) with n = planes * slots,
    enumerated plane-major so that flat order matches ascending id order.
    """
    n_pl, n_sl = layer.plane_count, layer.sats_per_plane
    r, mm = layer.radius, layer.mean_motion

    raan = layer.raan_offset + 2.0 * math.pi * np.arange(n_pl) / n_pl
    anomaly = layer.phase_offset + 2.0 * math.pi * np.arange(n_sl) / n_sl + mm * t

    cu, su = np.cos(anomaly), np.sin(anomaly)          # (slots,)
    co, so = np.cos(raan), np.sin(raan)                # (planes,)
    ci, si = math.cos(layer.inclination), math.sin(layer.inclination)

    # orbital-plane basis per plane: p = (cO, sO, 0), q = (-sO ci, cO ci, si)
    px, py = co, so
    qx, qy, qz = -so * ci, co * ci, si

    def combine(a, b):
        # a over slots, b over planes -> (planes, slots)
        return np.outer(b, a)

    pos = np.stack([
        r * (combine(cu, px) + combine(su, qx)),
        r * (combine(cu, py) + combine(su, qy)),
        r * combine(su, np.full(n_pl, qz)),
    ], axis=-1)
    vel = np.stack([
        r * mm * (combine(-su, px) + combine(cu, qx)),
        r * mm * (combine(-su, py) + combine(cu, qy)),
        r * mm * combine(cu, np.full(n_pl, qz)),
    ], axis=-1)

    if earth_rotation:
        a = EARTH_ROTATION_RATE * t
        ca, sa = math.cos(a), math.sin(a)
        rot = np.array([[ca, sa, 0.0], [-sa, ca, 0.0], [0.0, 0.0, 1.0]])
        pos = pos @ rot.T
        vel = vel @ rot.T

    ids = np.empty((n_pl * n_sl, 3), dtype=np.int64)
    ids[:, 0] = layer_idx
    ids[:, 1] = np.repeat(np.arange(n_pl), n_sl)
    ids[:, 2] = np.tile(np.arange(n_sl), n_pl)
    return ids, pos.reshape(-1, 3), vel.reshape(-1, 3)


def constellation_arrays(spec: ConstellationSpec, t: float):
    """All satellite ids/positions/velocities at time t as flat arrays."""
    parts = [_layer_arrays(l, i, t, spec.earth_rotation)
             for i, l in enumerate(spec.layers)]
    ids = np.concatenate([p[0] for p in parts])
    pos = np.concatenate([p[1] for p in parts])
    vel = np.concatenate([p[2] for p in parts])
    return ids, pos, vel


def propagate(spec: ConstellationSpec, t: float) -> list[SatelliteState]:
    """Every satellite's state at time t (deterministic in (spec, t))."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    ids, pos, vel = constellation_arrays(spec, t)
    return [SatelliteState(tuple(int(x) for x in ids[i]), pos[i], vel[i])
            for i in range(ids.shape[0])]


def propagate_one(spec: ConstellationSpec, sat_id: tuple[int, int, int],
                  t: float) -> SatelliteState:
    layer_idx, plane, slot = sat_id
    layer = spec.layers[layer_idx]
    r, mm = layer.radius, layer.mean_motion
    raan = layer.raan_offset + 2.0 * math.pi * plane / layer.plane_count
    u = layer.phase_offset + 2.0 * math.pi * slot / layer.sats_per_plane + mm * t
    cu, su = math.cos(u), math.sin(u)
    co, so = math.cos(raan), math.sin(raan)
    ci, si = math.cos(layer.inclination), math.sin(layer.inclination)
    pos = np.array([
        r * (cu * co - su * ci * so),
        r * (cu * so + su * ci * co),
        r * su * si,
    ])
    vel = np.array([
        r * mm * (-su * co - cu * ci * so),
        r * mm * (-su * so + cu * ci * co),
        r * mm * cu * si,
    ])
    if spec.earth_rotation:
        a = EARTH_ROTATION_RATE * t
        ca, sa = math.cos(a), math.sin(a)
        rot = np.array([[ca, sa, 0.0], [-sa, ca, 0.0], [0.0, 0.0, 1.0]])
        pos = rot @ pos
        vel = rot @ vel
    return SatelliteState((layer_idx, plane, slot), pos, vel)


def slant_geometry(sat: SatelliteState, point: GroundUser) -> SlantGeometry:
    """Euclidean range and elevation of `sat` above `point`'s horizon plane."""
    diff = sat.position - point.position
    distance = float(np.linalg.norm(diff))
    up = point.position / np.linalg.norm(point.position)
    sin_el = float(np.dot(diff, up)) / distance
    return SlantGeometry(distance, math.asin(max(-1.0, min(1.0, sin_el))))


def _slant_arrays(pos: np.ndarray, point: GroundUser):
    diff = pos - point.position[None, :]
    dist = np.linalg.norm(diff, axis=1)
    up = point.position / np.linalg.norm(point.position)
    elev = np.arcsin(np.clip(diff @ up / dist, -1.0, 1.0))
    return dist, elev


def _apply_rule(policy: HandoverPolicy, ids: np.ndarray, dist: np.ndarray,
                elev: np.ndarray) -> HandoverPolicy:
    """Distance-ratio selection over precomputed geometry arrays.

    Candidate = nearest satellite above the elevation mask (ties broken by
    lowest id, which is the enumeration order). The serving satellite is
    replaced only when candidate_distance / serving_distance < 1 - epsilon.
    """
    visible = np.flatnonzero(elev >= policy.min_elevation)
    if visible.size == 0:
        raise NoVisibleSatellite(
            f"no satellite above elevation mask {policy.min_elevation:.3f} rad")
    best = visible[int(np.argmin(dist[visible]))]
    best_id = tuple(int(x) for x in ids[best])

    if policy.serving is None:
        return replace(policy, serving=best_id)
    if best_id == policy.serving:
        return policy
    serving_rows = np.flatnonzero(
        (ids == np.asarray(policy.serving, dtype=ids.dtype)).all(axis=1))
    if serving_rows.size == 0:
        # serving satellite absent from the candidate list: forced switch
        return replace(policy, serving=best_id,
                       handover_count=policy.handover_count + 1)
    serving_dist = float(dist[serving_rows[0]])
    if float(dist[best]) / serving_dist < 1.0 - policy.epsilon:
        return replace(policy, serving=best_id,
                       handover_count=policy.handover_count + 1)
    return policy


def select_and_handover(policy: HandoverPolicy, sats: list[SatelliteState],
                        center: GroundUser) -> HandoverPolicy:
    """Apply the distance-ratio handover rule to an explicit satellite list."""
    ids = np.asarray([s.id for s in sats], dtype=np.int64)
    pos = np.stack([s.position for s in sats])
    dist, elev = _slant_arrays(pos, center)
    return _apply_rule(policy, ids, dist, elev)


def step_handover(policy: HandoverPolicy, spec: ConstellationSpec, t: float,
                  center: GroundUser) -> HandoverPolicy:
    """select_and_handover against the full constellation at time t."""
    ids, pos, _ = constellation_arrays(spec, t)
    dist, elev = _slant_arrays(pos, center)
    return _apply_rule(policy, ids, dist, elev)


def handover_trace(spec: ConstellationSpec, center: GroundUser, epsilon: float,
                   duration: float, step: float,
                   min_elevation: float = DEFAULT_MIN_ELEVATION,
                   start: float = 0.0):
    """Serving-satellite trace rows over [start, start + duration].

    Yields (t, serving_id, distance_m, elevation_rad, handover_flag) per step.
    """
    policy = HandoverPolicy(epsilon=epsilon, min_elevation=min_elevation)
    n_steps = int(round(duration / step))
    for i in range(n_steps + 1):
        t = start + i * step
        prev_count = policy.handover_count
        policy = step_handover(policy, spec, t, center)
        sat = propagate_one(spec, policy.serving, t)
        geo = slant_geometry(sat, center)
        yield t, policy.serving, geo.distance, geo.elevation, int(
            policy.handover_count > prev_count)


def sample_users(center: GroundUser, radius: float, count: int,
                 rng: np.random.Generator, speed: float = 1.0) -> list[GroundUser]:
    """Users uniform on the ground disc of `radius` around `center`."""
    users = []
    for _ in range(count):
        bearing = rng.uniform(0.0, 2.0 * math.pi)
        arc = radius * math.sqrt(rng.uniform()) / EARTH_RADIUS
        lat1, lon1 = center.latitude, center.longitude
        lat2 = math.asin(math.sin(lat1) * math.cos(arc)
                         + math.cos(lat1) * math.sin(arc) * math.cos(bearing))
        lon2 = lon1 + math.atan2(
            math.sin(bearing) * math.sin(arc) * math.cos(lat1),
            math.cos(arc) - math.sin(lat1) * math.sin(lat2))
        users.append(GroundUser(lat2, lon2, 0.0, speed))
    return users
