import numpy as np
import pytest

from capsense.grid import BodySet, build_grid
from capsense.stokes import (FlowError, Frame, StokesProblem, band_force_series, find_pressure_gradient,
                             force_on_band, force_on_cell, gradient_for_mean_speed, solve_flow,
                             wall_shear)

R, ETA = 3e-6, 1e-3


def poiseuille_error(dr, v=1e-3):
    g = build_grid(R, 4 * dr, dr, dr)
    flow = solve_flow(g, v, 8 * ETA * v / R**2, viscosity=ETA, frame=Frame.LAB)
    exact = 2 * v * (1 - g.rc**2 / R**2)
    u = flow.uz[0]
    w = g.rc
    return np.sqrt(np.sum(w * (u - exact) ** 2) / np.sum(w * exact**2)), flow


def test_poiseuille_accuracy_and_order():
    e1, flow = poiseuille_error(2e-7)
    e2, _ = poiseuille_error(1e-7)
    e3, _ = poiseuille_error(5e-8)
    assert e2 < 0.01
    assert np.log2(e1 / e2) >= 1.8 and np.log2(e2 / e3) >= 1.8
    assert flow.mean_speed() == pytest.approx(1e-3, rel=1e-2)


def test_plug_flow_without_forcing():
    g = build_grid(R, 1e-6, 1e-7, 1e-7)
    flow = solve_flow(g, 1e-3, 0.0)
    assert np.allclose(flow.uz, -1e-3, rtol=1e-10)
    assert np.allclose(flow.ur, 0.0, atol=1e-15)


def test_empty_band_shear_matches_closed_form():
    g = build_grid(R, 12e-6, 1e-7, 1e-7)
    for v, expect in [(0.2e-3, 10.05e-12), (1e-3, 50.27e-12), (2e-3, 100.5e-12)]:
        flow = solve_flow(g, v, 8 * ETA * v / R**2)
        f = force_on_band(flow, 6e-6, 2e-6).axial
        assert f == pytest.approx(expect, rel=2e-3)
        assert flow.to_lab().mean_speed() == pytest.approx(v, rel=2e-3)


def test_wall_shear_balances_drive():
    g = build_grid(R, 2e-6, 1e-7, 1e-7)
    G = 8 * ETA * 1e-3 / R**2
    flow = solve_flow(g, 1e-3, G)
    total = np.sum(wall_shear(flow)) * 2 * np.pi * R * g.dz
    assert total == pytest.approx(G * np.pi * R**2 * g.length, rel=1e-9)


def test_cell_flow_properties(cell_grid):
    problem = StokesProblem(cell_grid, ETA)
    a = problem.solve(1e-3, 5e5)
    b = problem.solve(2e-3, 1e6)
    mask = problem.layout.open_z
    assert np.max(np.abs(b.uz[:-1][mask] - 2 * a.uz[:-1][mask])) < 1e-8 * np.max(np.abs(b.uz))
    div = a.divergence()
    Fz, _ = a.face_fluxes()
    assert np.max(np.abs(div)) < 1e-10 * np.max(np.abs(Fz))
    # without a pressure drop the moving wall drags the cell backward
    assert force_on_cell(problem.solve(1e-3, 0.0), 0).axial < 0


def test_zero_force_gradient(cell_grid):
    problem = StokesProblem(cell_grid, ETA)
    G1, flow = find_pressure_gradient(problem, 1e-3)
    G2, _ = find_pressure_gradient(problem, 2e-3)
    assert 9.1e5 * 0.75 <= G1 <= 9.1e5 * 1.25
    assert G2 == pytest.approx(2 * G1, rel=1e-8)
    rep = force_on_cell(flow, 0)
    assert abs(rep.axial) < 1e-3 * 6 * np.pi * ETA * 1e-3 * 2.1e-6
    series = band_force_series(flow, 2e-6)
    assert series.maximum >= series.minimum > 0
    assert 0 < series.variation < 1


def test_errors(cell_grid):
    g = build_grid(R, 2e-6, 1e-7, 1e-7)
    flow = solve_flow(g, 1e-3, 0.0)
    with pytest.raises(FlowError, match="no cells"):
        force_on_cell(flow, 0)
    with pytest.raises(FlowError, match="needs a cell train"):
        find_pressure_gradient(g, 1e-3)
    with pytest.raises(FlowError, match="outside the domain"):
        force_on_band(flow, 5e-6, 0.5e-6)
    with pytest.raises(FlowError, match="longer than"):
        force_on_band(flow, 1e-6, 2e-6)
    with pytest.raises(FlowError, match="comoving"):
        flow.to_lab().face_fluxes()


def test_mean_speed_gradient():
    g = build_grid(R, 2e-6, 1e-7, 1e-7)
    G, flow = gradient_for_mean_speed(g, 1e-3)
    assert abs(flow.mean_speed()) < 1e-12
    assert G == pytest.approx(8 * ETA * 1e-3 / R**2, rel=2e-2)
