import math

import pytest

from capsense.baselines import (absorbing_sphere_rate, area_equivalent_radius, band_area_and_count,
                                baseline_report, wall_band_shear_force)
from capsense.params import scenario1_config, scenario2_config


def test_sphere_rate():
    a = area_equivalent_radius(3e-6, 2e-6)
    assert a == pytest.approx(1.732e-6, rel=1e-3)
    assert absorbing_sphere_rate(1e-10, a, 1e17) == pytest.approx(217.7, rel=1e-3)
    assert absorbing_sphere_rate(1e-10, 1e-6, 0.0) == 0.0


def test_shear_force():
    assert wall_band_shear_force(1e-3, 1e-3, 3e-6, 2e-6) == pytest.approx(50.27e-12, rel=1e-3)
    assert wall_band_shear_force(0.2e-3, 1e-3, 3e-6, 2e-6) == pytest.approx(10.05e-12, rel=1e-3)
    assert wall_band_shear_force(0.0, 1e-3, 3e-6, 2e-6) == 0.0


def test_band_area_and_count():
    area, n = band_area_and_count(3e-6, 2e-6)
    assert area == pytest.approx(37.7e-12, rel=1e-3) and n == 9
    assert band_area_and_count(3e-6, 2 * math.pi * 3e-6)[1] == 1
    assert band_area_and_count(3e-6, 4e-6)[0] == pytest.approx(2 * area)


def test_unit_round_trip():
    um = 1e-6
    f = wall_band_shear_force(1e-3, 1e-3, 3 * um, 2 * um)
    g = wall_band_shear_force(1e-3, 1e-3, (3 * um / um) * um, (2 * um / um) * um)
    assert f == pytest.approx(g, rel=1e-12)


def test_report_contents():
    rep = baseline_report(scenario1_config())
    assert rep["band_sensor_count"] == 9
    assert rep["equivalent_sphere_rate"] == pytest.approx(217.7, rel=1e-3)
    rep2 = baseline_report(scenario2_config())
    assert rep2["source_bound"] == pytest.approx(1885, rel=1e-3)
    for label in ("cells", "empty"):
        assert 80 < rep2[f"sphere_rate_downstream_{label}"] < 125
    assert all(len(row) == 4 for row in rep2.rows())
