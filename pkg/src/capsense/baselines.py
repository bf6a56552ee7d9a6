"""Closed-form reference quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .params import Scenario, SimulationConfig, downstream_concentration


def absorbing_sphere_rate(diffusion: float, radius: float, concentration: float) -> float:
    """Diffusion-limited capture rate 4 pi D a C of a perfectly absorbing sphere."""
    return 4 * math.pi * diffusion * radius * concentration


def wall_band_shear_force(speed: float, viscosity: float, radius: float, length: float) -> float:
    """Poiseuille wall shear 4 v eta / R over a band of area 2 pi R l."""
    return 4 * speed * viscosity / radius * 2 * math.pi * radius * length


def band_area_and_count(radius: float, length: float) -> tuple[float, int]:
    """Band area and the number of square devices of side ``length`` around it."""
    area = 2 * math.pi * radius * length
    return area, int(round(2 * math.pi * radius / length))


def area_equivalent_radius(radius: float, length: float) -> float:
    """Sphere radius with the band's surface area: 4 pi a^2 = 2 pi R l."""
    return math.sqrt(radius * length / 2)


@dataclass
class BaselineEntry:
    value: float
    unit: str
    formula: str


@dataclass
class BaselineReport:
    entries: dict = field(default_factory=dict)

    def add(self, name, value, unit, formula):
        self.entries[name] = BaselineEntry(value, unit, formula)

    def __getitem__(self, name):
        return self.entries[name].value

    def as_dict(self):
        return {k: e.value for k, e in self.entries.items()}

    def rows(self):
        return [(k, e.value, e.unit, e.formula) for k, e in self.entries.items()]


def baseline_report(config: SimulationConfig) -> BaselineReport:
    v, sc = config.vessel, config.scenario
    D = config.chemical.diffusion_coefficient
    ell = sc.sensor.length
    rep = BaselineReport()
    area, count = band_area_and_count(v.radius, ell)
    rep.add("band_area", area, "m^2", "2 pi R l")
    rep.add("band_sensor_count", count, "1", "round(2 pi R / l)")
    rep.add("band_shear_force", wall_band_shear_force(v.cell_speed, config.fluid.viscosity,
                                                      v.radius, ell), "N", "8 pi eta v l")
    if sc.scenario is Scenario.BAND_ON_WALL:
        a = area_equivalent_radius(v.radius, ell)
        rep.add("equivalent_sphere_rate", absorbing_sphere_rate(D, a, sc.inlet_concentration),
                "1/s", "4 pi D a C, a = sqrt(R l / 2)")
    elif v.cell_speed > 0:
        src = sc.source
        rep.add("source_bound", 2 * math.pi * v.radius * src.length * src.flux, "1/s",
                "2 pi R lambda K")
        for label, h in (("cells", v.hematocrit), ("empty", 0.0)):
            c = downstream_concentration(src, v.radius, v.cell_speed, h)
            rep.add(f"downstream_concentration_{label}", c, "1/m^3", "2 lambda K / (R v (1 - h))")
            rep.add(f"sphere_rate_downstream_{label}", absorbing_sphere_rate(D, 0.5 * ell, c),
                    "1/s", "4 pi D a C_ds")
    return rep
