import math
import warnings

import numpy as np
import pytest

from capsense.geometry import (GAP_TABLE, CellShape, GapRangeWarning, GeometryError,
                               build_train, gap_for_speed, join_points, profile_radius,
                               shape_for_speed, solve_shape, volume_and_surface,
                               volume_and_surface_quadrature, write_profile)

R, V, S = 3e-6, 90e-18, 135e-12


@pytest.mark.parametrize("speed,gap", GAP_TABLE)
def test_solve_shape_hits_targets(speed, gap):
    shape = solve_shape(R, gap, V, S)
    assert shape.volume == pytest.approx(V, rel=1e-9)
    assert shape.surface == pytest.approx(S, rel=1e-9)
    assert shape.r == pytest.approx(R - gap, rel=1e-15)
    zeta = np.linspace(0, shape.total_length, 4001)
    assert np.max(shape.outer_radius(zeta)) == pytest.approx(R - gap, rel=1e-12)


def test_closed_form_matches_quadrature():
    shape = solve_shape(R, 0.9e-6, V, S)
    vq, sq = volume_and_surface_quadrature(shape)
    assert vq == pytest.approx(shape.volume, rel=1e-9)
    assert sq == pytest.approx(shape.surface, rel=1e-9)


def test_profile_is_c1_at_joins():
    shape = solve_shape(R, 1.0e-6, V, S)
    for p_left, t_left, p_right, t_right in join_points(shape):
        assert np.allclose(p_left, p_right, atol=1e-15)
        assert np.allclose(t_left, t_right, atol=1e-9)


def test_infeasible_targets():
    with pytest.raises(GeometryError, match="infeasible"):
        solve_shape(R, 0.9e-6, V, 40e-12)
    with pytest.raises(GeometryError, match="infeasible"):
        solve_shape(R, 3.5e-6, V, S)


def test_gap_interpolation_and_clamp():
    assert gap_for_speed(1e-3) == pytest.approx(0.9e-6)
    assert gap_for_speed(1.5e-3) == pytest.approx(0.95e-6)
    with pytest.warns(GapRangeWarning):
        gap, clamped = gap_for_speed(5e-3, return_flag=True)
    assert clamped and gap == pytest.approx(1.0e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert gap_for_speed(0.2e-3, return_flag=True) == (pytest.approx(0.7e-6), False)


def test_volume_surface_errors():
    with pytest.raises(GeometryError):
        volume_and_surface(1.0, 1.0, 2.0)


def test_profile_radius_outside():
    shape = solve_shape(R, 0.9e-6, V, S)
    assert profile_radius(shape, 0.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(GeometryError):
        profile_radius(shape, shape.total_length * 1.1)


def test_train_and_overlap(tmp_path):
    shape = shape_for_speed(R, 1e-3, V, S)
    train = build_train(shape, 12.7e-6, 3)
    assert train.n_cells == 3
    mid = train.front_positions[1] - 0.5 * shape.total_length
    assert train.contains(mid, 0.5 * shape.r)
    assert not train.contains(mid, R * 0.99)
    with pytest.raises(GeometryError, match="overlap"):
        build_train(shape, 0.5 * shape.total_length, 2)
    path = write_profile(shape, tmp_path / "p.csv", 50)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 2 and open(path).readline().strip() == "z_m,y_m"


def test_cylinder_limit():
    # s -> 0 reduces the rear to a half-torus of radius r/2 on a capsule
    v, s = volume_and_surface(1.0, 2.0, 0.0)
    expect_v = 2 / 3 * math.pi + math.pi * 2.0 + math.pi**2 * 0.5 * 0.25
    assert v == pytest.approx(expect_v)
