"""Command-line runner: config parsing, single runs, sweeps and tables."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import logging
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .params import (ChemicalProps, CellTargets, ConfigError, FluidProps, MICRON, MM_PER_S,
                     NumericsConfig, Scenario, ScenarioConfig, SensorKind, SensorSpec,
                     SimulationConfig, SourceSpec, VesselConfig, validate)

log = logging.getLogger("capsense")

WORKERS_ENV = "CAPSENSE_WORKERS"


def _float(text):
    return float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text}")
    return int(v)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _bools(text):
    return tuple(_bool(x) for x in text.split(",") if x.strip())


# key -> (parser, scale to SI, required)
KEYS = {
    "radius_um": (_float, MICRON, True),
    "density_kg_m3": (_float, 1.0, True),
    "viscosity_pa_s": (_float, 1.0, True),
    "hematocrit": (_float, 1.0, True),
    "cell_speed_mm_s": (_float, MM_PER_S, True),
    "cell_volume_um3": (_float, MICRON**3, True),
    "cell_surface_um2": (_float, MICRON**2, True),
    "diffusion_m2_s": (_float, 1.0, True),
    "scenario": (_int, None, True),
    "with_cells": (_bool, None, True),
    "n_cells": (_int, None, True),
    "inlet_concentration_per_m3": (_float, 1.0, True),
    "sensor_length_um": (_float, MICRON, True),
    "absorption_velocity_m_s": (_float, 1.0, True),
    "smoothing_width_um": (_float, MICRON, True),
    "source_length_um": (_float, MICRON, False),
    "source_flux_per_s_m2": (_float, 1.0, False),
    "source_smoothing_width_um": (_float, MICRON, False),
    "sweep_speeds_mm_s": (_floats, None, False),
    "sweep_diffusions_m2_s": (_floats, None, False),
    "sweep_cells": (_bools, None, False),
    "seed": (_int, None, False),
    # numerics
    "dr_um": (_float, MICRON, False),
    "dz_um": (_float, MICRON, False),
    "subsample": (_int, None, False),
    "cfl": (_float, 1.0, False),
    "limiter": (str, None, False),
    "min_gap_volumes": (_int, None, False),
    "period_tol": (_float, 1.0, False),
    "max_periods": (_int, None, False),
    "source_start_spacings": (_float, 1.0, False),
    "end_distance_um": (_float, MICRON, False),
    "initial_ramp_um": (_float, MICRON, False),
    "empty_spacing_um": (_float, MICRON, False),
}

NUMERIC_FIELDS = {"dr_um": "dr", "dz_um": "dz", "subsample": "subsample", "cfl": "cfl",
                  "limiter": "limiter", "min_gap_volumes": "min_gap_volumes",
                  "period_tol": "period_tol", "max_periods": "max_periods",
                  "source_start_spacings": "source_start_spacings",
                  "end_distance_um": "end_distance", "initial_ramp_um": "initial_ramp",
                  "empty_spacing_um": "empty_spacing"}


@dataclass
class ParsedConfig:
    config: SimulationConfig
    speeds: tuple = (0.2, 1.0, 2.0)  # mm/s
    diffusions: tuple = (1e-10, 2e-9)
    cells: tuple = (True, False)
    seed: int = 0
    text: str = ""


def read_pairs(text: str) -> tuple[dict, list]:
    pairs, errors = {}, []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {n}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            errors.append(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs, errors


def parse_config(text: str) -> ParsedConfig:
    """Parse flat ``key = value`` text into a validated configuration."""
    pairs, errors = read_pairs(text)
    values = {}
    for key, raw in pairs.items():
        if key not in KEYS:
            errors.append(f"unknown key {key!r}")
            continue
        parser, scale, _ = KEYS[key]
        try:
            v = parser(raw)
        except ValueError:
            errors.append(f"{key}: cannot parse value {raw!r}")
            continue
        values[key] = v * scale if isinstance(scale, float) else v
    for key, (_, _, required) in KEYS.items():
        if required and key not in pairs:
            errors.append(f"missing required key {key!r}")
    scenario = values.get("scenario")
    if scenario is not None and scenario not in (1, 2):
        errors.append(f"scenario must be 1 or 2 (got {scenario})")
    if scenario == 2:
        errors += _missing_source(values)
    if errors:
        raise ConfigError(errors)

    cfg = build_config(values)
    parsed = ParsedConfig(cfg, text=text)
    if "sweep_speeds_mm_s" in values:
        parsed.speeds = values["sweep_speeds_mm_s"]
    if "sweep_diffusions_m2_s" in values:
        parsed.diffusions = values["sweep_diffusions_m2_s"]
    if "sweep_cells" in values:
        parsed.cells = values["sweep_cells"]
    parsed.seed = values.get("seed", 0)
    return parsed


SOURCE_KEYS = ("source_length_um", "source_flux_per_s_m2", "source_smoothing_width_um")


def _missing_source(values):
    return [f"missing required key {k!r} for scenario 2" for k in SOURCE_KEYS if k not in values]


def build_config(values: dict, scenario: int | None = None) -> SimulationConfig:
    scenario = Scenario(scenario or values["scenario"])
    kind = SensorKind.WALL_BAND if scenario is Scenario.BAND_ON_WALL else SensorKind.MOVING_SPHERE
    sensor = SensorSpec(kind, values["sensor_length_um"], values["absorption_velocity_m_s"],
                        values["smoothing_width_um"])
    source = None
    inlet = values["inlet_concentration_per_m3"]
    if scenario is Scenario.SPHERE_IN_FLOW:
        missing = _missing_source(values)
        if missing:
            raise ConfigError(missing)
        source = SourceSpec(*(values[k] for k in SOURCE_KEYS))
        inlet = 0.0
    numerics = NumericsConfig(**{f: values[k] for k, f in NUMERIC_FIELDS.items() if k in values})
    cfg = SimulationConfig(
        FluidProps(values["density_kg_m3"], values["viscosity_pa_s"]),
        VesselConfig(values["radius_um"], values["hematocrit"], values["cell_speed_mm_s"]),
        ChemicalProps(values["diffusion_m2_s"]),
        CellTargets(values["cell_volume_um3"], values["cell_surface_um2"]),
        ScenarioConfig(scenario, inlet, values["with_cells"], values["n_cells"], sensor, source),
        numerics,
    )
    return validate(cfg)


def default_config_text() -> str:
    return resources.files("capsense").joinpath("data/default.cfg").read_text()


def reference_path():
    return resources.files("capsense").joinpath("data/reference_results.csv")


def config_hash(config: SimulationConfig) -> str:
    return hashlib.sha256(repr(config).encode()).hexdigest()[:16]


def header_lines(config: SimulationConfig):
    return [f"capsense {__version__}", f"config_hash {config_hash(config)}"]


# -- manifest and runs ----------------------------------------------------------

@dataclass
class RunManifest:
    config_path: str | None
    out_dir: Path
    speeds: tuple = ()
    diffusions: tuple = ()
    cells: tuple = ()
    sweep: bool = False
    no_cells: bool = False
    scenario: int | None = None
    resolution: float | None = None  # m
    seed: int = 0
    resume: bool = False
    overwrite: bool = False


def _point_name(cfg: SimulationConfig) -> str:
    sc = cfg.scenario
    return (f"s{sc.scenario.value}_v{cfg.vessel.cell_speed / MM_PER_S:g}"
            f"_D{cfg.chemical.diffusion_coefficient:g}_{'cells' if sc.with_cells else 'empty'}")


def manifest_points(parsed: ParsedConfig, manifest: RunManifest) -> list[SimulationConfig]:
    base = parsed.config
    if manifest.scenario is not None and manifest.scenario != base.scenario.scenario.value:
        values = _values_from(parsed)
        base = build_config(values, manifest.scenario)
    if manifest.resolution is not None:
        base = base.with_(**{"numerics.dr": manifest.resolution, "numerics.dz": manifest.resolution})
    cells = (False,) if manifest.no_cells else manifest.cells
    if not manifest.sweep:
        cfgs = [base.with_(**{"scenario.with_cells": False}) if manifest.no_cells else base]
    else:
        cfgs = [base.with_(**{"vessel.cell_speed": v * MM_PER_S, "chemical.diffusion_coefficient": D,
                              "scenario.with_cells": c})
                for D in manifest.diffusions for c in cells for v in manifest.speeds]
    return [validate(c) for c in cfgs]


def _values_from(parsed: ParsedConfig) -> dict:
    pairs, _ = read_pairs(parsed.text)
    values = {}
    for key, raw in pairs.items():
        parser, scale, _ = KEYS[key]
        v = parser(raw)
        values[key] = v * scale if isinstance(scale, float) else v
    return values


def write_point(record, out: Path, seed: int):
    """Summary, time series and plot-ready CSVs for one run."""
    from .scenarios import sample_counts

    out.mkdir(parents=True, exist_ok=True)
    cfg = record.config
    head = header_lines(cfg)
    summary = "".join(f"# {h}\n" for h in head) + record.summary()
    (out / "summary.txt").write_text(summary)
    record.series.write_csv(out / "series.csv", head)
    m = record.metrics
    if m.force_series is not None:
        _write_columns(out / "band_force.csv", head, ("band_position", "force"),
                       (m.force_positions, m.force_series))
    if m.distances is not None:
        _write_columns(out / "flux_vs_distance.csv", head, ("distance", "sensor_flux"),
                       (m.distances, m.flux))
    dt = float(record.diagnostics["dt"])
    counts = sample_counts(m.flux, dt, seed)
    _write_columns(out / "counts.csv", head, ("t", "counts"), (m.times, counts))


def _write_columns(path, head, names, cols):
    with open(path, "w", newline="") as fh:
        for h in head:
            fh.write(f"# {h}\n")
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([f"{x:.9e}" if isinstance(x, (float, np.floating)) else str(x) for x in row])


def _run_point(args):
    cfg, out, seed = args
    from .scenarios import run

    record = run(cfg)
    write_point(record, Path(out), seed)
    return _record_row(record)


def _record_row(record) -> dict:
    cfg, m = record.config, record.metrics
    return {
        "scenario": cfg.scenario.scenario.value,
        "speed_mm_s": cfg.vessel.cell_speed / MM_PER_S,
        "diffusion": cfg.chemical.diffusion_coefficient,
        "model": "cells" if cfg.scenario.with_cells else "empty",
        "pressure_gradient": record.diagnostics.get("G"),
        "max_band_force_pN": None if m.max_force is None else m.max_force * 1e12,
        "average_rate": m.average_rate,
        "max_rate": m.max_rate,
        "near_source_counts": m.near_source_counts,
    }


def _row_from_summary(path: Path) -> dict:
    vals = {}
    for line in path.read_text().splitlines():
        if line.startswith("#") or "=" not in line:
            continue
        k, v = (s.strip() for s in line.split("=", 1))
        vals[k] = v

    def num(key):
        v = vals.get(key)
        return None if v in (None, "None") else float(v)

    return {
        "scenario": int(vals["config.scenario.scenario"]),
        "speed_mm_s": float(vals["config.vessel.cell_speed"]) / MM_PER_S,
        "diffusion": float(vals["config.chemical.diffusion_coefficient"]),
        "model": "cells" if vals["config.scenario.with_cells"] == "True" else "empty",
        "pressure_gradient": num("diagnostics.G"),
        "max_band_force_pN": None if num("metrics.max_band_force") is None
        else num("metrics.max_band_force") * 1e12,
        "average_rate": num("metrics.average_rate"),
        "max_rate": num("metrics.max_rate"),
        "near_source_counts": num("metrics.near_source_counts"),
    }


# -- tables ---------------------------------------------------------------------

SECTIONS = {"large": 1e-10, "small": 2e-9}
BAND_ROWS = [
    ("pressure gradient (Pa/m)", None, "pressure_gradient", "cells"),
    ("maximum force on sensor band (pN)", None, "max_band_force_pN", "cells"),
    ("... without cells", None, "max_band_force_pN", "empty"),
    ("average count rate (1/s)", "large", "average_rate", "cells"),
    ("... without cells", "large", "average_rate", "empty"),
    ("average count rate (1/s)", "small", "average_rate", "cells"),
    ("... without cells", "small", "average_rate", "empty"),
]
SPHERE_ROWS = [
    ("maximum count rate (1/s)", "large", "max_rate", "cells"),
    ("... without cells", "large", "max_rate", "empty"),
    ("counts while near source", "large", "near_source_counts", "cells"),
    ("... without cells", "large", "near_source_counts", "empty"),
    ("maximum count rate (1/s)", "small", "max_rate", "cells"),
    ("... without cells", "small", "max_rate", "empty"),
    ("counts while near source", "small", "near_source_counts", "cells"),
    ("... without cells", "small", "near_source_counts", "empty"),
]


def load_reference(path=None) -> dict:
    path = path or reference_path()
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {(r["table"], r["section"], r["quantity"], r["model"], float(r["speed_mm_s"])):
            float(r["value"]) for r in rows}


def _section_of(D):
    for name, value in SECTIONS.items():
        if abs(D - value) <= 1e-9 * value:
            return name
    return f"D={D:g}"


def emit_tables(rows: list[dict], reference: dict | None = None) -> dict[str, str]:
    """CSV text of the band and sphere tables present in ``rows``.

    Missing sweep points appear as ``NA``. With ``reference``, published values
    and relative differences follow the computed columns.
    """
    tables = {}
    for scen, name, layout in ((1, "band", BAND_ROWS), (2, "sphere", SPHERE_ROWS)):
        mine = [r for r in rows if r["scenario"] == scen]
        if not mine:
            continue
        speeds = sorted({r["speed_mm_s"] for r in mine})
        index = {}
        for r in mine:
            sec = _section_of(r["diffusion"])
            for key in ("pressure_gradient", "max_band_force_pN", "average_rate", "max_rate",
                        "near_source_counts"):
                index[(sec, key, r["model"], r["speed_mm_s"])] = r[key]
                index[(None, key, r["model"], r["speed_mm_s"])] = index.get(
                    (None, key, r["model"], r["speed_mm_s"])) or r[key]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["quantity", "section"] + [f"{v:g}" for v in speeds]
        if reference is not None:
            head += [f"published {v:g}" for v in speeds] + [f"rel diff {v:g}" for v in speeds]
        w.writerow(head)
        for label, sec, key, model in layout:
            vals = [index.get((sec, key, model, v)) for v in speeds]
            line = [label, sec or ""] + [_cell(x) for x in vals]
            if reference is not None:
                refs = [reference.get((name, sec or "", key, model, v)) for v in speeds]
                diffs = [None if (x is None or r is None or r == 0) else (x - r) / r
                         for x, r in zip(vals, refs)]
                line += [_cell(r) for r in refs] + [_cell(d, "{:+.3f}") for d in diffs]
            w.writerow(line)
        tables[name] = buf.getvalue()
    return tables


def _cell(x, fmt="{:.6g}"):
    return "NA" if x is None else fmt.format(x)


# -- entry point ----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="capsense", description=__doc__)
    p.add_argument("--config", help="flat key = value config file (default: bundled parameters)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sweep", action="store_true", help="run every speed x diffusivity x model point")
    p.add_argument("--scenario", type=int, choices=(1, 2), help="override the config scenario")
    p.add_argument("--no-cells", action="store_true", help="cell-free vessel only")
    p.add_argument("--resolution", type=float, metavar="UM", help="grid spacing in micrometres")
    p.add_argument("--seed", type=int, help="seed for the Poisson count samples")
    p.add_argument("--resume", action="store_true", help="skip sweep points already written")
    p.add_argument("--overwrite", action="store_true", help="reuse a non-empty output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(manifest: RunManifest, parsed: ParsedConfig) -> int:
    out = manifest.out_dir
    if out.exists() and any(out.iterdir()) and not (manifest.overwrite or manifest.resume):
        print(f"error: output directory {out} is not empty (use --overwrite or --resume)",
              file=sys.stderr)
        return 2
    if manifest.overwrite and out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    points = manifest_points(parsed, manifest)
    jobs, done_rows = [], []
    for cfg in points:
        pdir = out / "points" / _point_name(cfg)
        if manifest.resume and (pdir / "summary.txt").exists():
            done_rows.append((cfg, _row_from_summary(pdir / "summary.txt")))
            continue
        jobs.append((cfg, str(pdir), manifest.seed))

    workers = max(int(os.environ.get(WORKERS_ENV, "1")), 1)
    status = 0
    rows = dict((_point_name(c), r) for c, r in done_rows)
    if workers == 1 or len(jobs) <= 1:
        results = [_safe(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_safe, jobs))
    for (cfg, _, _), (row, err) in zip(jobs, results):
        if err:
            print(f"error: {_point_name(cfg)}: {err}", file=sys.stderr)
            status = 1
        else:
            rows[_point_name(cfg)] = row
    ordered = [rows[_point_name(c)] for c in points if _point_name(c) in rows]
    tables = emit_tables(ordered, load_reference())
    head = "".join(f"# {h}\n" for h in header_lines(parsed.config))
    for name, text in tables.items():
        (out / f"table_{name}.csv").write_text(head + text)
    return status


def _safe(job):
    try:
        return _run_point(job), None
    except Exception as exc:  # noqa: BLE001 - reported per point
        module = type(exc).__module__.replace("capsense.", "")
        return None, f"[{module}] {type(exc).__name__}: {exc}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text() if args.config else default_config_text()
        parsed = parse_config(text)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = RunManifest(
        args.config, Path(args.out), parsed.speeds, parsed.diffusions, parsed.cells, args.sweep,
        args.no_cells, args.scenario,
        None if args.resolution is None else args.resolution * MICRON,
        parsed.seed if args.seed is None else args.seed, args.resume, args.overwrite)
    try:
        return run(manifest, parsed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
