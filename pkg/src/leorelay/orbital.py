"""Two-body circular-orbit geometry for a CubeSat, ground stations and co-planar relays.

Frame: Earth-centred, z along the rotation axis, x towards the vernal equinox.
Every function accepts scalar or array times and broadcasts over them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from leorelay.constants import DEFAULT_CONSTANTS, PhysicalConstants

TWO_PI = 2.0 * math.pi
J2 = 1.08263e-3
# Mean motion of the Sun along the ecliptic, rad/s (one tropical year).
SUN_RATE = TWO_PI / (365.2422 * 86400.0)

Vec3 = np.ndarray


class DegenerateOrbitError(ValueError):
    """Raised when the CubeSat and relay orbits share the same angular rate."""


@dataclass(frozen=True)
class OrbitSpec:
    altitude: float
    inclination: float = 0.0
    raan: float = 0.0
    initial_phase: float = 0.0
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if not self.altitude > 0:
            raise ValueError(f"altitude must be positive, got {self.altitude}")
        if not 0.0 <= self.inclination <= math.pi:
            raise ValueError(f"inclination must lie in [0, pi], got {self.inclination}")
        if not 0.0 <= self.raan < TWO_PI:
            raise ValueError(f"raan must lie in [0, 2pi), got {self.raan}")

    @property
    def radius(self) -> float:
        return self.constants.earth_radius + self.altitude

    @property
    def angular_velocity(self) -> float:
        return math.sqrt(self.constants.gravitational_parameter / self.radius**3)

    @property
    def period(self) -> float:
        return TWO_PI / self.angular_velocity


@dataclass(frozen=True)
class GroundStation:
    latitude: float
    longitude: float
    min_elevation: float = 0.0
    earth_phase_at_epoch: float = 0.0
    name: str = ""
    constants: PhysicalConstants = field(default=DEFAULT_CONSTANTS, compare=True)

    def __post_init__(self):
        if not -math.pi / 2 <= self.latitude <= math.pi / 2:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -math.pi <= self.longitude <= math.pi:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not 0.0 <= self.min_elevation < math.pi / 2:
            raise ValueError(f"min_elevation must lie in [0, pi/2), got {self.min_elevation}")

    @property
    def rotation_rate(self) -> float:
        return TWO_PI / self.constants.earth_rotation_period


@dataclass(frozen=True)
class NtnConstellation:
    """``count`` relays evenly spaced on ``relay_orbit``.

    Relay ``j`` sits at angle ``initial_phase + 2*pi*j/count`` along the orbit.
    """

    relay_orbit: OrbitSpec
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"relay count must be a positive integer, got {self.count}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.count


@dataclass(frozen=True)
class NtnGeometry:
    d_min: float
    d_max: float
    d_blockage: float
    alpha: float
    delta_omega: float
    period: float
    n_relays: int
    r_cubesat: float
    r_relay: float
    # angle of the CubeSat ahead of relay 0 at t=0, and sign of the relative drift
    phase_offset: float = 0.0
    drift_sign: float = 1.0

    @property
    def continuous(self) -> bool:
        """True when some relay is in view at every instant."""
        return self.d_blockage >= self.d_max

    @property
    def d_visible(self) -> float:
        """Largest distance at which a relay is still in line of sight."""
        return min(self.d_blockage, self.d_max)


def rotation_matrix(raan: float, inclination: float) -> np.ndarray:
    """Matrix taking Earth-frame vectors into the orbital plane frame."""
    cO, sO = math.cos(raan), math.sin(raan)
    ci, si = math.cos(inclination), math.sin(inclination)
    return np.array(
        [
            [cO, sO, 0.0],
            [-ci * sO, ci * cO, si],
            [si * sO, -si * cO, ci],
        ]
    )


def cubesat_position(orbit: OrbitSpec, t) -> Vec3:
    """Earth-frame position(s), shape ``(3,)`` for scalar ``t`` or ``(n, 3)``."""
    t = np.asarray(t, dtype=float)
    u = orbit.angular_velocity * t + orbit.initial_phase
    in_plane = np.stack([orbit.radius * np.cos(u), orbit.radius * np.sin(u), np.zeros_like(u)], axis=-1)
    # M is orthonormal, so its inverse is its transpose
    return in_plane @ rotation_matrix(orbit.raan, orbit.inclination)


def gs_position(gs: GroundStation, t) -> Vec3:
    t = np.asarray(t, dtype=float)
    r_e = gs.constants.earth_radius
    lon = gs.longitude + gs.rotation_rate * t - gs.earth_phase_at_epoch
    cphi = math.cos(gs.latitude)
    return np.stack(
        [
            r_e * cphi * np.cos(lon),
            r_e * cphi * np.sin(lon),
            np.full_like(lon, r_e * math.sin(gs.latitude)),
        ],
        axis=-1,
    )


def distance_gs(orbit: OrbitSpec, gs: GroundStation, t):
    diff = gs_position(gs, t) - cubesat_position(orbit, t)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _effective_inclination(inclination: float) -> float:
    # a retrograde orbit reaches the same latitudes as its prograde mirror
    return min(inclination, math.pi - inclination)


def gs_distance_bounds(orbit: OrbitSpec, gs: GroundStation) -> tuple[float, float]:
    """Smallest and largest CubeSat-to-station distances, ignoring blockage."""
    r_e, r = orbit.constants.earth_radius, orbit.radius
    lat = abs(gs.latitude)
    inc = _effective_inclination(orbit.inclination)
    if lat >= inc:
        c = math.cos(lat - inc)
        d_min = math.sqrt(max(r_e**2 + r**2 - 2 * r_e * r * c, 0.0))
        d_max = math.sqrt(r_e**2 + r**2 + 2 * r_e * r * c)
    else:
        d_min = orbit.altitude
        d_max = 2 * r_e + orbit.altitude
    return d_min, d_max


def gs_blockage_distance(orbit: OrbitSpec, min_elevation: float) -> float:
    """Slant range at which the CubeSat sits exactly at ``min_elevation``."""
    if not 0.0 <= min_elevation < math.pi / 2 + 1e-12:
        raise ValueError(f"min_elevation must lie in [0, pi/2), got {min_elevation}")
    r_e, r = orbit.constants.earth_radius, orbit.radius
    nadir = math.asin(r_e / r * math.cos(min_elevation))
    return math.sqrt(max(r_e**2 + r**2 - 2 * r * r_e * math.sin(min_elevation + nadir), 0.0))


def elevation_at_distance(orbit: OrbitSpec, d):
    """Elevation seen from the surface when the CubeSat is at slant range ``d``."""
    d = np.asarray(d, dtype=float)
    r_e, r = orbit.constants.earth_radius, orbit.radius
    s = (r**2 - r_e**2 - d**2) / (2 * r_e * d)
    return np.arcsin(np.clip(s, -1.0, 1.0))


def ntn_geometry(cubesat: OrbitSpec, constellation: NtnConstellation) -> NtnGeometry:
    relay = constellation.relay_orbit
    if not math.isclose(cubesat.inclination, relay.inclination, abs_tol=1e-12) or not math.isclose(
        cubesat.raan, relay.raan, abs_tol=1e-12
    ):
        raise ValueError("relay orbit must be co-planar with the CubeSat orbit (same inclination and RAAN)")
    if cubesat.constants != relay.constants:
        raise ValueError("CubeSat and relay orbits use different physical constants")
    n = int(constellation.count)
    r_cs, r_ntn = cubesat.radius, relay.radius
    rel = cubesat.angular_velocity - relay.angular_velocity
    if rel == 0.0:
        raise DegenerateOrbitError("CubeSat and relays share the same angular velocity; the relative period is undefined")
    delta_omega = abs(rel)
    period = TWO_PI / (n * delta_omega)

    h_cs, h_ntn = cubesat.altitude, relay.altitude
    r_e = cubesat.constants.earth_radius
    d_min = abs(h_ntn - h_cs)
    d_max = math.sqrt(max(r_cs**2 + r_ntn**2 - 2 * r_cs * r_ntn * math.cos(math.pi / n), 0.0))
    d_b = math.sqrt(
        h_cs**2
        + h_ntn**2
        + 2 * r_e * (h_cs + h_ntn)
        + 2 * math.sqrt(h_cs * h_ntn * (2 * r_e + h_cs) * (2 * r_e + h_ntn))
    )
    if d_b >= d_max:
        # the nearest relay is never occluded; keep alpha exact so N*alpha/pi is 1
        alpha = math.pi / n
    else:
        cos_alpha = (r_cs**2 + r_ntn**2 - d_b**2) / (2 * r_cs * r_ntn)
        alpha = math.acos(min(1.0, max(-1.0, cos_alpha)))
    return NtnGeometry(
        d_min=d_min,
        d_max=d_max,
        d_blockage=d_b,
        alpha=alpha,
        delta_omega=delta_omega,
        period=period,
        n_relays=n,
        r_cubesat=r_cs,
        r_relay=r_ntn,
        phase_offset=cubesat.initial_phase - relay.initial_phase,
        drift_sign=math.copysign(1.0, rel),
    )


def relative_angle(geom: NtnGeometry, t):
    """Signed angle from the CubeSat to its nearest relay, in ``[-pi/N, pi/N)``."""
    t = np.asarray(t, dtype=float)
    spacing = TWO_PI / geom.n_relays
    psi = geom.phase_offset + geom.drift_sign * geom.delta_omega * t
    return np.mod(psi + spacing / 2, spacing) - spacing / 2


def ntn_distance(geom: NtnGeometry, t):
    """Distance to the nearest relay.

    With zero phase offset this is the law-of-cosines form on ``[0, T/2]``
    mirrored about ``T/2`` and repeated with period ``T``.
    """
    psi = relative_angle(geom, t)
    r1, r2 = geom.r_cubesat, geom.r_relay
    # half-angle form of the law of cosines: no cancellation near alignment
    return np.sqrt((r1 - r2) ** 2 + 4 * r1 * r2 * np.sin(0.5 * psi) ** 2)


def min_relays_for_continuous(cubesat: OrbitSpec, relay_altitude: float) -> int:
    """Smallest evenly spaced relay count that keeps one relay always in view."""
    r_e = cubesat.constants.earth_radius
    r_cs = cubesat.radius
    r_ntn = r_e + relay_altitude
    if relay_altitude <= 0:
        raise ValueError("relay orbit must be above the Earth's surface")
    arg = r_e**2 / (r_ntn * r_cs) - math.sqrt((1 - r_e**2 / r_ntn**2) * (1 - r_e**2 / r_cs**2))
    return math.ceil(math.pi / math.acos(arg))


def sso_inclination(altitude: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Inclination of a circular sun-synchronous orbit (J2 nodal precession)."""
    a = constants.earth_radius + altitude
    cos_i = -2 * SUN_RATE * a**3.5 / (3 * J2 * constants.earth_radius**2 * math.sqrt(constants.gravitational_parameter))
    if cos_i < -1:
        raise ValueError(f"no sun-synchronous circular orbit at altitude {altitude} m")
    return math.acos(cos_i)
