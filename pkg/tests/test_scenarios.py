import dataclasses

import numpy as np
import pytest

from capsense.params import ConfigError, scenario1_config, scenario2_config
from capsense.scenarios import (ConvergenceError, compare_models, run, run_scenario1,
                                run_scenario2, sample_counts)


def small(cfg, **extra):
    opts = {"numerics.dr": 2.5e-7, "numerics.dz": 2.5e-7, "numerics.min_gap_volumes": 2,
            "scenario.n_cells": 3}
    opts.update(extra)
    return cfg.with_(**opts)


@pytest.fixture(scope="module")
def band_pair():
    cells = run(small(scenario1_config(1.0, 2e-9, True)))
    empty = run(small(scenario1_config(1.0, 2e-9, False)))
    return cells, empty


def test_sample_counts():
    assert np.all(sample_counts(np.zeros(100), 0.01, 1) == 0)
    n = 100_000
    x = sample_counts(np.full(n, 100.0), 0.01, 7)
    assert abs(x.mean() - 1.0) < 3 * np.sqrt(1.0 / n)
    assert np.array_equal(x, sample_counts(np.full(n, 100.0), 0.01, 7))
    with pytest.raises(ValueError):
        sample_counts([-1.0], 0.1, 0)


def test_band_runs(band_pair):
    cells, empty = band_pair
    for rec in band_pair:
        m = rec.metrics
        assert m.max_rate >= m.average_rate > 0
        assert rec.diagnostics["period_change"] < 0.01
        assert rec.diagnostics["ledger_closure"] < 5e-3
        assert rec.diagnostics["min_concentration"] >= 0
    assert empty.metrics.force_variation < 1e-6
    assert cells.metrics.force_variation > 0.05
    assert "metrics.average_rate = " in cells.summary()
    assert cells.summary() == cells.summary()


def test_compare_models(band_pair):
    cells, empty = band_pair
    rows = compare_models(cells, empty)
    names = [r.metric for r in rows]
    assert names == ["average_rate", "max_rate", "max_force"]
    same = compare_models(cells, cells)
    assert all(r.relative_difference == 0 and not r.flagged for r in same)
    other = dataclasses.replace(empty, config=empty.config.with_(**{"vessel.cell_speed": 2e-3}))
    with pytest.raises(ValueError, match="differ"):
        compare_models(cells, other)


def test_convergence_failure_reported():
    cfg = small(scenario1_config(1.0, 1e-10, True), **{"numerics.max_periods": 2})
    with pytest.raises(ConvergenceError) as exc:
        run_scenario1(cfg)
    assert "period_change" in exc.value.diagnostics


def test_wrong_scenario():
    with pytest.raises(ConfigError):
        run_scenario2(scenario1_config())
    with pytest.raises(ConfigError):
        run_scenario1(scenario2_config())


def test_sphere_run_small():
    cfg = small(scenario2_config(2.0, 2e-9, False), **{"scenario.n_cells": 12})
    rec = run(cfg)
    m = rec.metrics
    upstream = m.distances < -10e-6
    assert np.max(m.flux[upstream]) < 0.02 * m.max_rate
    assert m.near_source_counts > 0
    assert m.max_rate >= m.average_rate
    assert rec.diagnostics["ledger_closure"] < 5e-3
