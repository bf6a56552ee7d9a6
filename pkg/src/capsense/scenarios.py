"""End-to-end runs of the two sensing scenarios and their summary metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, kernels
from .baselines import baseline_report
from .geometry import build_train, shape_for_speed
from .grid import BandKind, BandTrack, BodySet, Sphere, build_grid, grid_for_period
from .params import (ConfigError, Scenario, SimulationConfig, cell_spacing, derive,
                     downstream_concentration, validate)
from .stokes import (band_force_series, find_pressure_gradient, gradient_for_mean_speed,
                     solve_flow, StokesProblem)
from .transport import (ConcentrationField, TimeSeries, TransportDomain, TransportSolver,
                        stable_step, window_closure)

log = logging.getLogger(__name__)

NEAR_SOURCE_WINDOW = (-25e-6, 25e-6)


class ConvergenceError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SensorMetrics:
    times: np.ndarray
    flux: np.ndarray  # molecules/s per step
    distances: np.ndarray | None = None  # scenario 2: sensor minus source centre (m)
    average_rate: float = 0.0
    max_rate: float = 0.0
    near_source_counts: float | None = None
    force_positions: np.ndarray | None = None  # scenario 1 band centre within one period (m)
    force_series: np.ndarray | None = None  # N

    @property
    def max_force(self) -> float | None:
        return None if self.force_series is None else float(np.max(self.force_series))

    @property
    def force_variation(self) -> float | None:
        if self.force_series is None:
            return None
        mx = float(np.max(self.force_series))
        return (mx - float(np.min(self.force_series))) / mx if mx else 0.0


@dataclass
class RunRecord:
    config: SimulationConfig
    derived: dict
    metrics: SensorMetrics
    diagnostics: dict
    series: TimeSeries = field(repr=False, default_factory=TimeSeries)
    baselines: dict = field(default_factory=dict)

    def summary(self) -> str:
        """Flat ``key = value`` text, stable across runs."""
        lines = [f"version = {__version__}"]

        def walk(prefix, obj):
            for k, v in obj.items():
                key = f"{prefix}{k}"
                if isinstance(v, dict):
                    walk(key + ".", v)
                else:
                    lines.append(f"{key} = {_fmt(v)}")

        walk("config.", asdict(self.config))
        walk("derived.", self.derived)
        m = self.metrics
        walk("metrics.", {"average_rate": m.average_rate, "max_rate": m.max_rate,
                          "near_source_counts": m.near_source_counts,
                          "max_band_force": m.max_force, "band_force_variation": m.force_variation})
        walk("diagnostics.", self.diagnostics)
        walk("baseline.", self.baselines)
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    if hasattr(v, "value") and hasattr(v, "name"):
        return str(v.value)
    return str(v)


# -- shared set-up ------------------------------------------------------------

def _period(config: SimulationConfig) -> float:
    v, n = config.vessel, config.numerics
    if config.scenario.with_cells or n.empty_spacing is None:
        if v.hematocrit <= 0:
            raise ConfigError(["empty vessel with zero hematocrit needs numerics.empty_spacing"])
        return cell_spacing(config.cell.volume, v.radius, v.hematocrit)
    return n.empty_spacing


def _bodies(config, spacing, n_cells, sphere=None):
    v = config.vessel
    if not config.scenario.with_cells:
        return BodySet(None, sphere), None
    shape = shape_for_speed(v.radius, v.cell_speed, config.cell.volume, config.cell.surface)
    return BodySet(build_train(shape, spacing, n_cells), sphere), shape


def _check_speed(config):
    if config.vessel.cell_speed <= 0:
        raise ConfigError(["scenario runs need vessel.cell_speed > 0"])


def _step_size(span, dt_max):
    """Largest step not above ``dt_max`` that divides ``span`` evenly."""
    n = max(int(math.ceil(span / dt_max - 1e-9)), 1)
    return span / n, n


def _diag_common(config, grid, flow_G, steps, dt):
    return {"dr": grid.dr, "dz": grid.dz, "nz": grid.nz, "nr": grid.nr, "G": flow_G,
            "steps": steps, "dt": dt, "limiter": config.numerics.limiter,
            "kernel_backend": kernels.BACKEND}


# -- scenario 1 ---------------------------------------------------------------

def run_scenario1(config: SimulationConfig) -> RunRecord:
    """Absorbing band on the wall; periodic steady state by shift-by-L."""
    validate(config)
    if config.scenario.scenario is not Scenario.BAND_ON_WALL:
        raise ConfigError(["run_scenario1 needs scenario = 1"])
    _check_speed(config)
    v, num, sc = config.vessel, config.numerics, config.scenario
    speed, eta = v.cell_speed, config.fluid.viscosity
    spacing = _period(config)
    per, dz = grid_for_period(v.radius, spacing, num.dr, num.dz)
    bodies, _ = _bodies(config, spacing, 1)
    grid = build_grid(v.radius, spacing, num.dr, dz, bodies, subsample=num.subsample,
                      min_gap_volumes=num.min_gap_volumes)
    if sc.with_cells:
        G, flow = find_pressure_gradient(grid, speed, viscosity=eta)
    else:
        G = 8 * eta * speed / v.radius**2
        flow = solve_flow(grid, speed, G, viscosity=eta)
    sensor = sc.sensor
    forces = band_force_series(flow, sensor.length, sensor.smoothing_width)

    n_cells = sc.n_cells
    domain = TransportDomain.from_flow(flow, n_cells)
    domain.period_cells = grid.nz
    centre = 0.5 * domain.length
    track = BandTrack(centre + 0.5 * spacing, sensor.length, sensor.smoothing_width, speed,
                      BandKind.ABSORBER, sensor.absorption_velocity)
    period = spacing / speed
    dt, nstep = _step_size(period, stable_step(domain, [track], num.cfl, num.limiter))
    solver = TransportSolver(domain, config.chemical.diffusion_coefficient, dt,
                             inlet_concentration=sc.inlet_concentration, tracks=[track],
                             absorption_velocity=sensor.absorption_velocity, limiter=num.limiter,
                             cfl=num.cfl)

    fld = ConcentrationField(np.zeros((domain.nz, domain.nr)))
    history = []
    series = TimeSeries()
    converged = False
    change = math.inf
    closure = 0.0
    for p in range(num.max_periods):
        if p:
            fld = solver.shift(fld)
        series = TimeSeries()
        for _ in range(nstep):
            fld, ledger = solver.step(fld)
            series.append(fld.t, solver.tracks[0].center(fld.t - 0.5 * dt), ledger.absorption, ledger)
        flux = np.array(series.sensor_flux)
        out = np.array([l.outflow for l in series.ledgers])
        history.append((float(flux.mean()), float(out.mean())))
        closure = max(closure, window_closure(series.ledgers))
        if p:
            (a0, o0), (a1, o1) = history[-2], history[-1]
            change = max(abs(a1 - a0) / max(abs(a1), 1e-300),
                         abs(o1 - o0) / max(abs(o1), abs(a1), 1e-300))
            log.info("period %d: rate %.6g /s, change %.3g", p, a1, change)
            if change < num.period_tol:
                converged = True
                break

    diag = _diag_common(config, grid, G, nstep * len(history), dt)
    diag.update({"periods": len(history), "period_change": change, "ledger_closure": closure,
                 "min_concentration": float(fld.c.min()),
                 "surface_concentration": solver.band_surface_concentration(fld, solver.tracks[0])})
    if not converged:
        raise ConvergenceError(
            f"scenario 1 not periodic after {len(history)} periods (change {change:.3g})", diag)
    t, _, flux = series.arrays()
    metrics = SensorMetrics(t, flux, None, float(flux.mean()), float(flux.max()),
                            force_positions=forces.positions, force_series=forces.samples)
    d = derive(config)
    derived = {"cell_spacing": d.cell_spacing, "reynolds": d.reynolds, "peclet": d.peclet}
    return RunRecord(config, derived, metrics, diag, series, baseline_report(config).as_dict())


# -- scenario 2 ---------------------------------------------------------------

def _ramp(z, centre, width):
    u = np.clip((z - (centre - 0.5 * width)) / width, 0.0, 1.0)
    return 0.5 * (1 - np.cos(np.pi * u))


def run_scenario2(config: SimulationConfig) -> RunRecord:
    """Sphere sensor carried between two cells past a wall source band."""
    validate(config)
    if config.scenario.scenario is not Scenario.SPHERE_IN_FLOW:
        raise ConfigError(["run_scenario2 needs scenario = 2"])
    _check_speed(config)
    v, num, sc = config.vessel, config.numerics, config.scenario
    speed, eta = v.cell_speed, config.fluid.viscosity
    spacing = _period(config)
    per, dz = grid_for_period(v.radius, spacing, num.dr, num.dz)
    n_cells = sc.n_cells
    length = n_cells * spacing
    sphere = Sphere(0.5 * length, 0.5 * sc.sensor.length)
    bodies, _ = _bodies(config, spacing, n_cells, sphere)
    grid = build_grid(v.radius, length, num.dr, dz, bodies, subsample=num.subsample,
                      min_gap_volumes=num.min_gap_volumes)
    if sc.with_cells:
        # pressure drop from the sphere-free periodic cell
        cell_bodies, _ = _bodies(config, spacing, 1)
        cell_grid = build_grid(v.radius, spacing, num.dr, dz, cell_bodies, subsample=num.subsample,
                               min_gap_volumes=num.min_gap_volumes)
        G, _ = find_pressure_gradient(cell_grid, speed, viscosity=eta)
        flow = solve_flow(StokesProblem(grid, eta), speed, G)
    else:
        G, flow = gradient_for_mean_speed(grid, speed, viscosity=eta)

    domain = TransportDomain.from_flow(flow, 1, sphere)
    src = sc.source
    h = v.hematocrit if sc.with_cells else 0.0
    c_ds = downstream_concentration(src, v.radius, speed, h)
    z0 = sphere.center_z + num.source_start_spacings * spacing
    track = BandTrack(z0, src.length, src.smoothing_width, speed, BandKind.SOURCE, src.flux)
    t_end = (num.source_start_spacings * spacing + num.end_distance) / speed
    dt, nstep = _step_size(t_end, stable_step(domain, [track], num.cfl, num.limiter))
    solver = TransportSolver(domain, config.chemical.diffusion_coefficient, dt,
                             inlet_concentration=0.0, tracks=[track],
                             absorption_velocity=sc.sensor.absorption_velocity,
                             limiter=num.limiter, cfl=num.cfl)
    c0 = np.where(domain.active, c_ds * _ramp(domain.zc, z0, num.initial_ramp)[:, None], 0.0)
    fld = ConcentrationField(c0)
    series = TimeSeries()
    for _ in range(nstep):
        fld, ledger = solver.step(fld)
        series.append(fld.t, track.center(fld.t), ledger.absorption, ledger)
    t, src_pos, flux = series.arrays()
    distance = sphere.center_z - src_pos
    lo, hi = NEAR_SOURCE_WINDOW
    near = (distance >= lo) & (distance <= hi)
    counts = float(np.sum(flux[near]) * dt)

    diag = _diag_common(config, grid, G, nstep, dt)
    diag.update({"ledger_closure": window_closure(series.ledgers),
                 "min_concentration": float(fld.c.min()), "downstream_concentration": c_ds,
                 "source_bound": 2 * math.pi * v.radius * src.length * src.flux})
    metrics = SensorMetrics(t, flux, distance, float(flux[near].mean()) if near.any() else 0.0,
                            float(flux.max()), counts)
    d = derive(config)
    derived = {"cell_spacing": d.cell_spacing, "reynolds": d.reynolds, "peclet": d.peclet,
               "downstream_concentration": c_ds}
    return RunRecord(config, derived, metrics, diag, series, baseline_report(config).as_dict())


def run(config: SimulationConfig) -> RunRecord:
    if config.scenario.scenario is Scenario.BAND_ON_WALL:
        return run_scenario1(config)
    return run_scenario2(config)


# -- post-processing ------------------------------------------------------------

def sample_counts(flux, dt: float, seed: int) -> np.ndarray:
    """Poisson counts per interval with mean ``flux * dt``."""
    flux = np.asarray(flux, dtype=float)
    if np.any(flux < 0) or not np.all(np.isfinite(flux)):
        raise ValueError("flux series must be finite and non-negative")
    return np.random.default_rng(seed).poisson(flux * dt)


@dataclass
class ComparisonRow:
    metric: str
    with_cells: float | None
    empty: float | None
    relative_difference: float | None
    flagged: bool


def compare_models(with_cells: RunRecord, empty: RunRecord, threshold: float = 0.5):
    """Metric-by-metric comparison of the full and the cell-free model."""
    a, b = with_cells.config, empty.config
    if (a.scenario.scenario is not b.scenario.scenario or a.vessel.cell_speed != b.vessel.cell_speed
            or a.chemical != b.chemical or a.scenario.sensor != b.scenario.sensor
            or a.scenario.source != b.scenario.source):
        raise ValueError("records differ in more than the presence of cells")
    names = ["average_rate", "max_rate", "near_source_counts", "max_force"]
    rows = []
    for name in names:
        x = getattr(with_cells.metrics, name)
        y = getattr(empty.metrics, name)
        if x is None or y is None:
            continue
        ref = max(abs(x), abs(y))
        rel = (y - x) / ref if ref else 0.0
        rows.append(ComparisonRow(name, x, y, rel, abs(rel) > threshold))
    return rows
