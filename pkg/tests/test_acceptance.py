"""Acceptance checks at default resolution.

The sweep fixture runs all 24 parameter points (a few minutes). Every
criterion prints one PASS/FAIL line before asserting.
"""
import filecmp
import math
import time

import numpy as np
import pytest

from capsense.baselines import (absorbing_sphere_rate, area_equivalent_radius,
                                wall_band_shear_force)
from capsense.cli import load_reference, main
from capsense.geometry import (GAP_TABLE, build_train, shape_for_speed, solve_shape,
                               volume_and_surface_quadrature)
from capsense.grid import BodySet, build_grid, grid_for_period
from capsense.params import D_LARGE, D_SMALL, downstream_concentration, scenario1_config, \
    scenario2_config
from capsense.scenarios import run
from capsense.stokes import (Frame, StokesProblem, find_pressure_gradient, force_on_band,
                             solve_flow)

pytestmark = pytest.mark.slow

R, ETA, V, S = 3e-6, 1e-3, 90e-18, 135e-12
SPEEDS = (0.2, 1.0, 2.0)
DIFFS = {"large": D_LARGE, "small": D_SMALL}
REF = load_reference()


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
        return ok
    return emit


@pytest.fixture(scope="session")
def sweep():
    """RunRecord and wall time for every scenario x speed x D x model point."""
    out = {}
    for scen, make in ((1, scenario1_config), (2, scenario2_config)):
        for sec, D in DIFFS.items():
            for cells in (True, False):
                for v in SPEEDS:
                    t0 = time.perf_counter()
                    rec = run(make(v, D, cells))
                    out[(scen, sec, cells, v)] = (rec, time.perf_counter() - t0)
    return out


def ref(table, sec, qty, model, v):
    return REF[(table, sec, qty, model, float(v))]


def test_1_geometry(report):
    t0 = time.perf_counter()
    worst = 0.0
    for speed, gap in GAP_TABLE:
        shape = solve_shape(R, gap, V, S)
        vq, sq = volume_and_surface_quadrature(shape)
        zeta = np.linspace(0, shape.total_length, 20001)
        rmax = float(np.max(shape.outer_radius(zeta)))
        worst = max(worst, abs(shape.volume / V - 1), abs(shape.surface / S - 1))
        ok_r = rmax == pytest.approx(R - gap, rel=1e-12, abs=0)
        ok_q = abs(vq / shape.volume - 1) < 1e-9 and abs(sq / shape.surface - 1) < 1e-9
        if not (ok_r and ok_q):
            break
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and ok_r and ok_q and dt < 1.0
    report(1, ok, f"max V/S error {worst:.1e}, radius and quadrature ok={ok_r and ok_q}, {dt:.2f} s")
    assert ok


def test_2_empty_vessel_flow(report):
    errs = []
    for dr in (2e-7, 1e-7, 5e-8):
        g = build_grid(R, 4 * dr, dr, dr)
        t0 = time.perf_counter()
        flow = solve_flow(g, 1e-3, 8 * ETA * 1e-3 / R**2, viscosity=ETA, frame=Frame.LAB)
        slow = time.perf_counter() - t0
        exact = 2e-3 * (1 - g.rc**2 / R**2)
        errs.append(math.sqrt(np.sum(g.rc * (flow.uz[0] - exact) ** 2) / np.sum(g.rc * exact**2)))
    orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
    g = build_grid(R, 12.7e-6, 1e-7, 1e-7)
    problem = StokesProblem(g, ETA)
    forces, worst = [], 0.0
    for v, target in zip(SPEEDS, (10.0, 50.0, 100.0)):
        t0 = time.perf_counter()
        flow = problem.solve(v * 1e-3, 8 * ETA * v * 1e-3 / R**2)
        slow = max(slow, time.perf_counter() - t0)
        f = force_on_band(flow, 0.5 * g.length, 2e-6).axial * 1e12
        forces.append(f)
        worst = max(worst, abs(f / target - 1))
    ok = errs[1] < 0.01 and min(orders) >= 1.8 and worst < 0.02 and slow < 60
    report(2, ok, f"L2 error {errs[1]:.2e} at 0.1 um, orders {orders[0]:.2f}/{orders[1]:.2f}, "
                  f"band forces {[round(f, 2) for f in forces]} pN (worst {worst:.1%})")
    assert ok


def test_3_zero_force_gradient(report, sweep):
    ok, parts = True, []
    for v in SPEEDS:
        rec, _ = sweep[(1, "large", True, v)]
        G = rec.diagnostics["G"]
        target = ref("band", "", "pressure_gradient", "cells", v)
        ok &= abs(G / target - 1) <= 0.25
        parts.append(f"{G:.3g} ({G / target - 1:+.0%})")
    # linearity in the cell speed at frozen geometry
    rec, _ = sweep[(1, "large", True, 1.0)]
    L = rec.derived["cell_spacing"]
    _, dz = grid_for_period(R, L, 1e-7, 1e-7)
    shape = shape_for_speed(R, 1e-3, V, S)
    problem = StokesProblem(build_grid(R, L, 1e-7, dz, BodySet(build_train(shape, L, 1))), ETA)
    g1, _ = find_pressure_gradient(problem, 1e-3)
    g3, _ = find_pressure_gradient(problem, 3e-3)
    lin = abs(g3 / (3 * g1) - 1)
    ok &= lin < 1e-8
    report(3, ok, f"G* {parts} Pa/m, linearity error {lin:.1e}")
    assert ok


def test_4_band_force_with_cells(report, sweep):
    ok, parts = True, []
    for v in SPEEDS:
        m = sweep[(1, "large", True, v)][0].metrics
        fmax, var = m.max_force * 1e12, m.force_variation
        target = ref("band", "", "max_band_force_pN", "cells", v)
        good = abs(fmax / target - 1) <= 0.20 and 0.15 <= var <= 0.35
        ok &= good
        parts.append(f"v={v}: {fmax:.1f} pN ({fmax / target - 1:+.0%}), variation {var:.1%}"
                     f"{'' if good else ' X'}")
    report(4, ok, "; ".join(parts))
    assert ok


def test_5_band_count_rates(report, sweep):
    ok, bad = True, []
    for sec in DIFFS:
        for cells in (True, False):
            model = "cells" if cells else "empty"
            rates = []
            for v in SPEEDS:
                rec, secs = sweep[(1, sec, cells, v)]
                x = rec.metrics.average_rate
                target = ref("band", sec, "average_rate", model, v)
                rates.append(x)
                good = (max(x / target, target / x) <= 1.5) if cells else abs(x / target - 1) <= 0.25
                good &= secs <= 1800
                if not good:
                    bad.append(f"{sec}/{model}/v={v}: {x:.0f} vs {target:g}")
                ok &= good
            if not all(b > a for a, b in zip(rates, rates[1:])):
                ok = False
                bad.append(f"{sec}/{model} not increasing {rates}")
    report(5, ok, "all 12 rates within tolerance" if ok else "; ".join(bad))
    assert ok


def test_6_sphere_metrics(report, sweep):
    ok, bad = True, []
    empty_higher = 0
    bound = 2 * math.pi * R * 10e-6 * 1e13
    steady = 0.0
    for sec in DIFFS:
        for v in SPEEDS:
            mc = sweep[(2, sec, True, v)][0].metrics
            me = sweep[(2, sec, False, v)][0].metrics
            for qty, x in (("max_rate", mc.max_rate), ("near_source_counts", mc.near_source_counts)):
                target = ref("sphere", sec, qty, "cells", v)
                if max(x / target, target / x) > 1.5:
                    ok = False
                    bad.append(f"{sec}/{qty}/v={v}: {x:.3g} vs {target:g}")
            empty_higher += me.near_source_counts > mc.near_source_counts
            steady = max(steady, mc.average_rate, me.average_rate)
    if empty_higher < 5:
        ok = False
        bad.append(f"cell-free counts higher in {empty_higher}/6 points")
    if steady > bound:
        ok = False
        bad.append(f"near-source mean rate {steady:.0f} > {bound:.0f}")
    report(6, ok, "all sphere checks pass" if ok else "; ".join(bad))
    assert ok


def test_7_conservation(report, sweep):
    closure = max(r.diagnostics["ledger_closure"] for r, _ in sweep.values())
    lowest = min(r.diagnostics["min_concentration"] for r, _ in sweep.values())
    change = max(r.diagnostics["period_change"] for (s, *_), (r, _) in sweep.items() if s == 1)
    ok = closure < 5e-3 and lowest >= 0 and change < 0.01
    report(7, ok, f"worst window closure {closure:.1e}, min c {lowest:.3g}, "
                  f"worst period change {change:.2%}")
    assert ok


def _sig(x, n):
    return float(f"{x:.{n}g}")


def test_8_baselines(report):
    a = area_equivalent_radius(R, 2e-6)
    rate = absorbing_sphere_rate(D_LARGE, a, 1e17)
    ok = abs(rate / 218 - 1) <= 0.10 and _sig(rate, 1) == 200
    down = [absorbing_sphere_rate(D_LARGE, 1e-6, downstream_concentration(
        scenario2_config().scenario.source, R, 1e-3, h)) for h in (0.25, 0.0)]
    ok &= any(_sig(x, 1) == 100 for x in down)
    forces = [wall_band_shear_force(v * 1e-3, ETA, R, 2e-6) * 1e12 for v in SPEEDS]
    ok &= [_sig(f, 2) for f in forces] == [10.0, 50.0, 100.0]
    report(8, ok, f"sphere {rate:.1f}/s, downstream {down[0]:.1f}/{down[1]:.1f}/s, "
                  f"shear {[round(f, 2) for f in forces]} pN")
    assert ok


def test_9_determinism(report, tmp_path):
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    codes = [main(["--out", str(d), "--seed", "42"]) for d in dirs]
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    same = all((dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in files)
    cmp = filecmp.dircmp(*dirs)
    ok = codes == [0, 0] and bool(files) and same and not cmp.left_only and not cmp.right_only
    report(9, ok, f"{len(files)} files byte-identical={same}")
    assert ok


# -- scenario invariants over the same sweep ----------------------------------------

def test_sphere_counts_monotone(sweep):
    for cells in (True, False):
        for sec in DIFFS:
            counts = [sweep[(2, sec, cells, v)][0].metrics.near_source_counts for v in SPEEDS]
            assert counts[0] > counts[1] > counts[2]
        for v in SPEEDS:
            assert (sweep[(2, "small", cells, v)][0].metrics.near_source_counts
                    > sweep[(2, "large", cells, v)][0].metrics.near_source_counts)


def test_sphere_flux_upstream_of_source(sweep):
    for (scen, *_), (rec, _) in sweep.items():
        if scen != 2:
            continue
        m = rec.metrics
        assert np.max(m.flux[m.distances < -10e-6]) < 1e-3 * m.max_rate


def test_sphere_peak_position_large_molecules(sweep):
    for v in SPEEDS:
        peak = {}
        for cells in (True, False):
            m = sweep[(2, "large", cells, v)][0].metrics
            peak[cells] = m.distances[np.argmax(m.flux)]
        assert peak[False] <= peak[True], f"v={v}: peaks {peak}"


def test_band_metrics_cell_count_invariant(sweep):
    base, _ = sweep[(1, "small", True, 1.0)]
    more = run(scenario1_config(1.0, D_SMALL, True).with_(**{"scenario.n_cells": 14}))
    assert more.metrics.average_rate == pytest.approx(base.metrics.average_rate, rel=0.02)
    assert more.metrics.max_rate == pytest.approx(base.metrics.max_rate, rel=0.02)


def test_band_surface_concentration_low_flux(sweep):
    rec, _ = sweep[(1, "large", True, 0.2)]
    assert rec.diagnostics["surface_concentration"] < 1e-4 * 1e17
