import math

import pytest

from capsense.params import (ConfigError, SimulationConfig, derive, downstream_concentration,
                             scenario1_config, scenario2_config, validate, violations)


def test_defaults_are_valid():
    cfg = scenario1_config()
    assert validate(cfg) is cfg
    assert validate(validate(cfg)) == validate(cfg)


def test_zero_hematocrit_with_cells_rejected():
    cfg = scenario1_config().with_(**{"vessel.hematocrit": 0.0})
    with pytest.raises(ConfigError) as exc:
        validate(cfg)
    assert any("hematocrit must be in (0,1) when cells present" in e for e in exc.value.errors)


def test_smoothing_wider_than_band_rejected():
    cfg = scenario1_config().with_(**{"scenario.sensor.smoothing_width": 3e-6})
    assert any("w < l violated" in e for e in violations(cfg))


def test_all_violations_reported_together():
    cfg = scenario1_config().with_(**{"vessel.radius": -1.0, "fluid.viscosity": 0.0,
                                      "chemical.diffusion_coefficient": -2.0})
    errs = violations(cfg)
    assert len(errs) >= 3
    assert any("vessel.radius" in e and "-1.0" in e for e in errs)


def test_scenario_invariants():
    cfg = scenario2_config().with_(**{"scenario.inlet_concentration": 1.0})
    assert any("inlet_concentration = 0" in e for e in violations(cfg))
    cfg = scenario2_config().with_(**{"scenario.source": None})
    assert any("requires a source" in e for e in violations(cfg))


def test_cell_spacing_and_reynolds():
    d = derive(scenario1_config())
    assert d.cell_spacing == pytest.approx(12.732e-6, rel=1e-4)
    assert d.cell_spacing * math.pi * (3e-6) ** 2 * 0.25 == pytest.approx(90e-18, rel=1e-14)
    assert d.reynolds == pytest.approx(3e-3, rel=1e-12)
    assert d.peclet == pytest.approx(1e-3 * 2e-6 / 1e-10)


def test_downstream_concentration():
    d = derive(scenario2_config())
    assert d.downstream_concentration == pytest.approx(8.89e16, rel=1e-3)
    empty = derive(scenario2_config(with_cells=False))
    assert empty.downstream_concentration == pytest.approx(d.downstream_concentration * 0.75)


def test_derive_homogeneous_in_speed():
    a = derive(scenario2_config(1.0))
    b = derive(scenario2_config(2.0))
    assert b.reynolds == pytest.approx(2 * a.reynolds)
    assert b.peclet == pytest.approx(2 * a.peclet)
    assert b.downstream_concentration == pytest.approx(0.5 * a.downstream_concentration)


def test_downstream_concentration_zero_speed():
    with pytest.raises(ConfigError, match="downstream concentration undefined at zero speed"):
        derive(scenario2_config(0.0))


def test_with_dotted_paths():
    cfg = SimulationConfig().with_(**{"numerics.dr": 5e-8})
    assert cfg.numerics.dr == 5e-8
