import filecmp

import pytest

from capsense.cli import (default_config_text, emit_tables, load_reference, main, parse_config)
from capsense.params import ConfigError

CHEAP = """
with_cells = false
n_cells = 3
dr_um = 0.25
dz_um = 0.25
min_gap_volumes = 2
diffusion_m2_s = 2e-9
seed = 11
"""


def cheap_config(tmp_path):
    text = default_config_text()
    for key in ("with_cells", "n_cells", "diffusion_m2_s"):
        text = "\n".join(l for l in text.splitlines() if not l.startswith(key))
    path = tmp_path / "cheap.cfg"
    path.write_text(text + CHEAP)
    return path


def test_default_config_parses():
    parsed = parse_config(default_config_text())
    assert parsed.config.vessel.radius == pytest.approx(3e-6)
    assert parsed.config.vessel.cell_speed == pytest.approx(1e-3)
    assert parsed.speeds == (0.2, 1.0, 2.0)


def test_empty_config_lists_missing_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config("")
    assert len(exc.value.errors) > 10
    assert all("missing required key" in e for e in exc.value.errors)


def test_bad_values_reported():
    text = default_config_text().replace("radius_um = 3", "radius_um = -3")
    text += "\nbogus = 1\nhematocrit_x\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    msg = str(exc.value)
    assert "unknown key 'bogus'" in msg and "expected 'key = value'" in msg
    text = default_config_text().replace("radius_um = 3", "radius_um = -3")
    with pytest.raises(ConfigError, match="vessel.radius must be > 0"):
        parse_config(text)


def test_scenario2_needs_source():
    text = "\n".join(l for l in default_config_text().splitlines() if not l.startswith("source_"))
    text = text.replace("scenario = 1", "scenario = 2")
    with pytest.raises(ConfigError, match="source_flux_per_s_m2"):
        parse_config(text)


def test_emit_tables_gaps():
    rows = [{"scenario": 1, "speed_mm_s": 1.0, "diffusion": 1e-10, "model": "cells",
             "pressure_gradient": 8e5, "max_band_force_pN": 51.0, "average_rate": 500.0,
             "max_rate": 520.0, "near_source_counts": None}]
    tables = emit_tables(rows, load_reference())
    band = tables["band"].splitlines()
    assert band[0].startswith("quantity,section,1,published 1,rel diff 1")
    assert any(l.startswith("average count rate") and "NA" in l for l in band)
    assert "sphere" not in tables


def test_cli_determinism_and_guards(tmp_path, capsys):
    cfg = cheap_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(a)]) == 0
    assert main(["--config", str(cfg), "--out", str(b)]) == 0
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for name in ("summary.txt", "series.csv", "counts.csv", "band_force.csv"):
        pa = next(a.rglob(name))
        pb = b / pa.relative_to(a)
        assert pa.read_bytes() == pb.read_bytes()
    assert main(["--config", str(cfg), "--out", str(a)]) == 2
    assert "not empty" in capsys.readouterr().err
    assert main(["--config", str(cfg), "--out", str(a), "--resume"]) == 0
    assert (a / "table_band.csv").read_bytes() == (b / "table_band.csv").read_bytes()


def test_cli_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("radius_um = 3\n")
    assert main(["--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "missing required key" in capsys.readouterr().err
