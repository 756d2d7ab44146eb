"""Physical constants shared by every geometry and link computation."""
from __future__ import annotations

from dataclasses import dataclass, fields

SOLAR_DAY = 86400.0
SIDEREAL_DAY = 86164.0905


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants. All values are overridable so scenarios can swap Earth models.

    ``earth_rotation_period`` drives the ground-station rotation and the
    ground scenario period; ``day_length`` is the 24 h window used to scale
    download capacity and energy figures.
    """

    speed_of_light: float = 2.998e8
    boltzmann: float = 1.380649e-23
    earth_radius: float = 6.378e6
    gravitational_parameter: float = 3.986e14
    earth_rotation_period: float = SOLAR_DAY
    day_length: float = SOLAR_DAY

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"{f.name} must be strictly positive, got {value!r}")


DEFAULT_CONSTANTS = PhysicalConstants()
