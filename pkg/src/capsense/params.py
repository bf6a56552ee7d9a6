"""Physical and scenario parameters, validation and derived scalars.

Everything is stored in SI units. The config parser in :mod:`capsense.cli`
accepts micrometres and mm/s and converts on the way in.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace


MICRON = 1e-6
MM_PER_S = 1e-3


class ConfigError(ValueError):
    """Raised with the complete list of invariant violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) if self.errors else "invalid configuration")


class SensorKind(enum.Enum):
    WALL_BAND = "wall_band"
    MOVING_SPHERE = "moving_sphere"


class Scenario(enum.Enum):
    BAND_ON_WALL = 1
    SPHERE_IN_FLOW = 2


@dataclass(frozen=True)
class FluidProps:
    density: float = 1e3
    viscosity: float = 1e-3


@dataclass(frozen=True)
class VesselConfig:
    radius: float = 3 * MICRON
    hematocrit: float = 0.25
    cell_speed: float = 1 * MM_PER_S


@dataclass(frozen=True)
class ChemicalProps:
    diffusion_coefficient: float = 1e-10


@dataclass(frozen=True)
class CellTargets:
    volume: float = 90e-18
    surface: float = 135e-12


@dataclass(frozen=True)
class SensorSpec:
    kind: SensorKind = SensorKind.WALL_BAND
    length: float = 2 * MICRON
    absorption_velocity: float = 1.0
    smoothing_width: float = 0.2 * MICRON


@dataclass(frozen=True)
class SourceSpec:
    length: float = 10 * MICRON
    flux: float = 1e13
    smoothing_width: float = 0.2 * MICRON


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario = Scenario.BAND_ON_WALL
    inlet_concentration: float = 1e17
    with_cells: bool = True
    n_cells: int = 10
    sensor: SensorSpec = field(default_factory=SensorSpec)
    source: SourceSpec | None = None


@dataclass(frozen=True)
class NumericsConfig:
    """Discretisation and run-control knobs (not physics)."""

    dr: float = 0.1 * MICRON
    dz: float = 0.1 * MICRON
    subsample: int = 4
    cfl: float = 0.4
    limiter: str = "upwind"
    min_gap_volumes: int = 6
    period_tol: float = 0.01
    max_periods: int = 60
    # scenario 2: source start offset (in cell spacings) and final distance
    source_start_spacings: float = 3.0
    end_distance: float = 50 * MICRON
    initial_ramp: float = 10 * MICRON
    empty_spacing: float | None = None


@dataclass(frozen=True)
class SimulationConfig:
    fluid: FluidProps = field(default_factory=FluidProps)
    vessel: VesselConfig = field(default_factory=VesselConfig)
    chemical: ChemicalProps = field(default_factory=ChemicalProps)
    cell: CellTargets = field(default_factory=CellTargets)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)

    def with_(self, **changes) -> "SimulationConfig":
        """Return a copy with dotted-path overrides, e.g. ``vessel.cell_speed=2e-3``."""
        cfg = self
        for path, value in changes.items():
            cfg = _replace_path(cfg, path.replace("__", ".").split("."), value)
        return cfg


def _replace_path(obj, parts, value):
    if len(parts) == 1:
        return replace(obj, **{parts[0]: value})
    child = getattr(obj, parts[0])
    return replace(obj, **{parts[0]: _replace_path(child, parts[1:], value)})


@dataclass(frozen=True)
class DerivedQuantities:
    cell_spacing: float
    reynolds: float
    peclet: float
    downstream_concentration: float | None = None


def _positive(errors, name, value):
    if not (value > 0 and math.isfinite(value)):
        errors.append(f"{name} must be > 0 (got {value!r})")


def violations(config: SimulationConfig) -> list[str]:
    """Every invariant violation in ``config``, as human-readable strings."""
    errors: list[str] = []
    f, v, c, s = config.fluid, config.vessel, config.chemical, config.scenario
    _positive(errors, "fluid.density", f.density)
    _positive(errors, "fluid.viscosity", f.viscosity)
    _positive(errors, "vessel.radius", v.radius)
    _positive(errors, "chemical.diffusion_coefficient", c.diffusion_coefficient)
    _positive(errors, "cell.volume", config.cell.volume)
    _positive(errors, "cell.surface", config.cell.surface)
    if s.with_cells:
        if not 0 < v.hematocrit < 1:
            errors.append(
                f"hematocrit must be in (0,1) when cells present (got {v.hematocrit!r})")
        if s.n_cells < 1:
            errors.append(f"scenario.n_cells must be >= 1 (got {s.n_cells!r})")
    elif not 0 <= v.hematocrit < 1:
        errors.append(f"hematocrit must be in [0,1) (got {v.hematocrit!r})")
    if not v.cell_speed >= 0:
        errors.append(f"vessel.cell_speed must be >= 0 (got {v.cell_speed!r})")

    sensor = s.sensor
    _positive(errors, "sensor.length", sensor.length)
    _positive(errors, "sensor.absorption_velocity", sensor.absorption_velocity)
    if not 0 < sensor.smoothing_width < sensor.length:
        errors.append(
            f"sensor.smoothing_width: 0 < w < l violated (w={sensor.smoothing_width!r}, "
            f"l={sensor.length!r})")

    if s.scenario is Scenario.BAND_ON_WALL:
        if sensor.kind is not SensorKind.WALL_BAND:
            errors.append("scenario 1 requires sensor.kind = wall_band")
        if not s.inlet_concentration > 0:
            errors.append(
                f"scenario 1 requires inlet_concentration > 0 (got {s.inlet_concentration!r})")
        if s.source is not None:
            errors.append("scenario 1 must not define a source")
    else:
        if sensor.kind is not SensorKind.MOVING_SPHERE:
            errors.append("scenario 2 requires sensor.kind = moving_sphere")
        if s.inlet_concentration != 0:
            errors.append(
                f"scenario 2 requires inlet_concentration = 0 (got {s.inlet_concentration!r})")
        if s.source is None:
            errors.append("scenario 2 requires a source")
        else:
            _positive(errors, "source.length", s.source.length)
            if not s.source.flux >= 0:
                errors.append(f"source.flux must be >= 0 (got {s.source.flux!r})")
            if not 0 < s.source.smoothing_width < s.source.length:
                errors.append(
                    f"source.smoothing_width: 0 < w < lambda violated "
                    f"(w={s.source.smoothing_width!r}, lambda={s.source.length!r})")

    n = config.numerics
    _positive(errors, "numerics.dr", n.dr)
    _positive(errors, "numerics.dz", n.dz)
    if n.subsample < 1:
        errors.append(f"numerics.subsample must be >= 1 (got {n.subsample!r})")
    if not 0 < n.cfl <= 1:
        errors.append(f"numerics.cfl must be in (0,1] (got {n.cfl!r})")
    if n.limiter not in ("upwind", "vanleer"):
        errors.append(f"numerics.limiter must be 'upwind' or 'vanleer' (got {n.limiter!r})")
    return errors


def validate(config: SimulationConfig) -> SimulationConfig:
    errors = violations(config)
    if errors:
        raise ConfigError(errors)
    return config


def cell_spacing(volume: float, radius: float, hematocrit: float) -> float:
    return volume / (math.pi * radius**2 * hematocrit)


def downstream_concentration(source: SourceSpec, radius: float, speed: float,
                             hematocrit: float) -> float:
    """Concentration that carries the whole source output downstream."""
    if speed <= 0:
        raise ConfigError(["downstream concentration undefined at zero speed"])
    return 2 * source.length * source.flux / (radius * speed * (1 - hematocrit))


def derive(config: SimulationConfig) -> DerivedQuantities:
    v = config.vessel
    s = config.scenario
    h = v.hematocrit if s.with_cells else 0.0
    spacing = cell_spacing(config.cell.volume, v.radius, v.hematocrit) if v.hematocrit > 0 else math.inf
    re = config.fluid.density * v.cell_speed * v.radius / config.fluid.viscosity
    pe = v.cell_speed * s.sensor.length / config.chemical.diffusion_coefficient
    c_ds = None
    if s.scenario is Scenario.SPHERE_IN_FLOW:
        c_ds = downstream_concentration(s.source, v.radius, v.cell_speed, h)
    return DerivedQuantities(spacing, re, pe, c_ds)


def scenario1_config(speed_mm_s=1.0, diffusion=1e-10, with_cells=True, **numerics):
    """Default band-on-wall configuration at the given speed and diffusivity."""
    return SimulationConfig(
        vessel=VesselConfig(cell_speed=speed_mm_s * MM_PER_S),
        chemical=ChemicalProps(diffusion),
        scenario=ScenarioConfig(Scenario.BAND_ON_WALL, 1e17, with_cells, 10, SensorSpec(), None),
        numerics=NumericsConfig(**numerics),
    )


def scenario2_config(speed_mm_s=1.0, diffusion=1e-10, with_cells=True, **numerics):
    """Default moving-sphere configuration at the given speed and diffusivity."""
    return SimulationConfig(
        vessel=VesselConfig(cell_speed=speed_mm_s * MM_PER_S),
        chemical=ChemicalProps(diffusion),
        scenario=ScenarioConfig(Scenario.SPHERE_IN_FLOW, 0.0, with_cells, 20,
                                SensorSpec(kind=SensorKind.MOVING_SPHERE), SourceSpec()),
        numerics=NumericsConfig(**numerics),
    )


D_SMALL = 2e-9
D_LARGE = 1e-10
