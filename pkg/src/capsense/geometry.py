"""Rigid axisymmetric red-cell profile and the periodic train of cells.

Profile, measured as ``zeta`` = distance rearward from the nose:

* front quarter circle of radius ``r`` centred on the axis at ``zeta = r``
* straight segment at radius ``r`` of length ``a``
* rear rim: half circle of radius ``q = (r - s)/2`` centred at
  ``(r + a, r - q)``, bulging rearward
* concave dimple: quarter circle of radius ``s`` centred on the axis at
  ``zeta = r + a``, curving forward to meet the axis

The body is the set ``inner(zeta) <= y <= outer(zeta)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate


PI = math.pi

# cell speed (m/s) -> gap between cell and wall (m), vessel radius 3 um
GAP_TABLE = ((0.2e-3, 0.7e-6), (1e-3, 0.9e-6), (2e-3, 1.0e-6))


class GeometryError(ValueError):
    pass


class GapRangeWarning(UserWarning):
    pass


def gap_for_speed(speed: float, *, return_flag: bool = False):
    """Gap between cell and vessel wall for a cell speed, linearly interpolated.

    Speeds outside the tabulated range are clamped; with ``return_flag`` the
    result is ``(gap, clamped)``.
    """
    if speed < 0:
        raise GeometryError(f"cell speed must be non-negative (got {speed!r})")
    speeds = [p[0] for p in GAP_TABLE]
    gaps = [p[1] for p in GAP_TABLE]
    clamped = not speeds[0] <= speed <= speeds[-1]
    if clamped:
        warnings.warn(f"cell speed {speed} m/s outside gap table; clamping", GapRangeWarning,
                      stacklevel=2)
    gap = float(np.interp(speed, speeds, gaps))
    return (gap, clamped) if return_flag else gap


def volume_and_surface(r: float, a: float, s: float) -> tuple[float, float]:
    """Closed-form volume and surface area of the body of revolution."""
    if s > r:
        raise GeometryError(f"s must not exceed r (s={s!r}, r={r!r})")
    if s < 0 or a < 0 or r <= 0:
        raise GeometryError(f"invalid parameters r={r!r}, a={a!r}, s={s!r}")
    q = 0.5 * (r - s)
    c = r - q
    volume = 2 / 3 * PI * r**3 + PI * r * r * a - 2 / 3 * PI * s**3 + PI**2 * c * q * q
    surface = 2 * PI * r * r + 2 * PI * r * a + 2 * PI**2 * c * q + 2 * PI * s * s
    return volume, surface


def _jacobian(r, a, s):
    q = 0.5 * (r - s)
    dv_da = PI * r * r
    dv_ds = -2 * PI * s * s - 0.5 * PI**2 * (2 * r * q - 3 * q * q)
    ds_da = 2 * PI * r
    ds_ds = 4 * PI * s - PI**2 * s
    return np.array([[dv_da, dv_ds], [ds_da, ds_ds]])


@dataclass(frozen=True)
class CellShape:
    r: float
    a: float
    s: float

    @property
    def q(self) -> float:
        return 0.5 * (self.r - self.s)

    @property
    def total_length(self) -> float:
        return self.r + self.a + self.q

    @property
    def volume(self) -> float:
        return volume_and_surface(self.r, self.a, self.s)[0]

    @property
    def surface(self) -> float:
        return volume_and_surface(self.r, self.a, self.s)[1]

    def outer_radius(self, zeta):
        """Outer profile radius at rearward offset ``zeta`` (array friendly, 0 outside)."""
        zeta = np.asarray(zeta, dtype=float)
        r, a, q = self.r, self.a, self.q
        out = np.zeros_like(zeta)
        m = (zeta >= 0) & (zeta < r)
        out[m] = np.sqrt(np.maximum(r * r - (r - zeta[m]) ** 2, 0.0))
        m = (zeta >= r) & (zeta <= r + a)
        out[m] = r
        m = (zeta > r + a) & (zeta <= r + a + q)
        x = zeta[m] - (r + a)
        out[m] = (r - q) + np.sqrt(np.maximum(q * q - x * x, 0.0))
        return out

    def inner_radius(self, zeta):
        """Lower edge of the body (dimple or rim underside); 0 where the body reaches the axis."""
        zeta = np.asarray(zeta, dtype=float)
        r, a, s, q = self.r, self.a, self.s, self.q
        out = np.zeros_like(zeta)
        m = (zeta >= r + a - s) & (zeta <= r + a)
        x = zeta[m] - (r + a)
        out[m] = np.sqrt(np.maximum(s * s - x * x, 0.0))
        m = (zeta > r + a) & (zeta <= r + a + q)
        x = zeta[m] - (r + a)
        out[m] = (r - q) - np.sqrt(np.maximum(q * q - x * x, 0.0))
        return out

    def contains(self, zeta, y):
        zeta = np.asarray(zeta, dtype=float)
        y = np.abs(np.asarray(y, dtype=float))
        inside_span = (zeta >= 0) & (zeta <= self.total_length)
        return inside_span & (y <= self.outer_radius(zeta)) & (y >= self.inner_radius(zeta))

    def profile_points(self, n: int = 400) -> np.ndarray:
        """Ordered (zeta, y) polyline of the generating curve, nose to axis."""
        r, a, s, q = self.r, self.a, self.s, self.q
        k = max(n // 4, 2)
        th = np.linspace(0, PI / 2, k)
        front = np.column_stack([r - r * np.cos(th), r * np.sin(th)])
        seg = np.column_stack([np.linspace(r, r + a, k), np.full(k, r)])
        th = np.linspace(PI / 2, -PI / 2, k)
        rim = np.column_stack([r + a + q * np.cos(th), (r - q) + q * np.sin(th)])
        th = np.linspace(PI / 2, PI, k)
        dimple = np.column_stack([r + a + s * np.cos(th), s * np.sin(th)])
        return np.vstack([front, seg[1:], rim[1:], dimple[1:]])


def profile_radius(shape: CellShape, zeta: float) -> float:
    """Outer radius of ``shape`` at offset ``zeta`` from the nose."""
    if not 0 <= zeta <= shape.total_length * (1 + 1e-12):
        raise GeometryError(f"z={zeta!r} outside the cell (length {shape.total_length!r})")
    return float(shape.outer_radius(np.array([zeta]))[0])


def _unit(vz, vy):
    n = math.hypot(vz, vy)
    return (vz / n, vy / n)


def join_points(shape: CellShape):
    """Point and unit tangent on each side of the three joins.

    Each piece is evaluated from its own arc parametrisation, traversed from
    the nose toward the axis. Returns ``[(p_left, t_left, p_right, t_right)]``.
    """
    r, a, s, q = shape.r, shape.a, shape.s, shape.q
    c = r - q

    def front(t):
        return (r - r * math.cos(t), r * math.sin(t)), _unit(r * math.sin(t), r * math.cos(t))

    def segment(u):
        return (r + u * a, r), (1.0, 0.0)

    def rim(t):  # t runs from pi/2 down to -pi/2
        return (r + a + q * math.cos(t), c + q * math.sin(t)), _unit(q * math.sin(t), -q * math.cos(t))

    def dimple(t):  # t runs from pi/2 up to pi
        return (r + a + s * math.cos(t), s * math.sin(t)), _unit(-s * math.sin(t), s * math.cos(t))

    pairs = [(front(PI / 2), segment(0.0)), (segment(1.0), rim(PI / 2)),
             (rim(-PI / 2), dimple(PI / 2))]
    return [(lp, lt, rp, rt) for (lp, lt), (rp, rt) in pairs]


def volume_and_surface_quadrature(shape: CellShape, tol: float = 1e-13):
    """Adaptive-quadrature volume and surface of the same profile (oracle)."""
    r, a, s, q = shape.r, shape.a, shape.s, shape.q
    opts = dict(epsabs=0.0, epsrel=tol, limit=200)
    outer2 = lambda z: float(shape.outer_radius(np.array([z]))[0]) ** 2
    inner2 = lambda z: float(shape.inner_radius(np.array([z]))[0]) ** 2
    bps = [r, r + a - s, r + a]
    vol = 0.0
    for lo, hi in [(0, r), (r, r + a), (r + a, r + a + q)]:
        if hi > lo:
            vol += integrate.quad(outer2, lo, hi, points=[b for b in bps if lo < b < hi], **opts)[0]
    for lo, hi in [(r + a - s, r + a), (r + a, r + a + q)]:
        if hi > lo:
            vol -= integrate.quad(inner2, lo, hi, **opts)[0]
    vol *= PI

    # surface: integrate 2 pi y |dx/dt| over each arc's parameter
    def arc(cz, cy, rad, t0, t1):
        if rad == 0:
            return 0.0
        return integrate.quad(lambda t: 2 * PI * (cy + rad * math.sin(t)) * rad, t0, t1, **opts)[0]

    surf = arc(r, 0.0, r, 0.0, PI / 2)  # front: y = r sin t
    surf += 2 * PI * r * a
    surf += abs(arc(r + a, r - q, q, -PI / 2, PI / 2))
    surf += arc(r + a, 0.0, s, 0.0, PI / 2)
    return vol, surf


def solve_shape(vessel_radius: float, gap: float, volume: float, surface: float,
                *, tol: float = 1e-10, max_iter: int = 100) -> CellShape:
    """Find (a, s) matching the volume and surface for ``r = R - gap``."""
    r = vessel_radius - gap
    if not 0 < r < vessel_radius:
        raise GeometryError("targets infeasible for this gap: r = R - gap must be in (0, R)")
    # feasibility bracket: at s -> 0 and s = r with a set by the volume, the
    # surface must bracket the target
    def a_for(s):
        return (volume - volume_and_surface(r, 0.0, s)[0]) / (PI * r * r)

    s_hi_surface = volume_and_surface(r, max(a_for(r), 0.0), r)[1]
    s_lo_surface = volume_and_surface(r, max(a_for(0.0), 0.0), 0.0)[1]
    if a_for(r) <= 0 or not (s_lo_surface <= surface <= s_hi_surface):
        raise GeometryError("targets infeasible for this gap")

    target = np.array([volume, surface])
    x = np.array([volume / (PI * r * r), 0.5 * r])
    scale = np.array([volume, surface])
    res = None
    for _ in range(max_iter):
        res = np.array(volume_and_surface(r, x[0], x[1])) - target
        if np.max(np.abs(res / scale)) < tol:
            break
        step = np.linalg.solve(_jacobian(r, x[0], x[1]), -res)
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            if trial[0] > 0 and 0 < trial[1] <= r:
                tres = np.array(volume_and_surface(r, trial[0], trial[1])) - target
                if np.linalg.norm(tres / scale) < np.linalg.norm(res / scale):
                    break
            lam *= 0.5
        x = trial
    else:
        raise GeometryError(f"shape solve did not converge, relative residual {res / scale}")
    a, s = float(x[0]), float(x[1])
    if not (a > 0 and 0 < s < r):
        raise GeometryError("targets infeasible for this gap")
    return CellShape(r, a, s)


@dataclass(frozen=True)
class CellTrain:
    shape: CellShape
    spacing: float
    front_positions: tuple[float, ...]

    @property
    def n_cells(self) -> int:
        return len(self.front_positions)

    @property
    def domain_length(self) -> float:
        return self.spacing * self.n_cells

    def cell_index(self, z):
        """Index of the cell slot containing ``z`` (slot k spans [kL, (k+1)L))."""
        return np.clip(np.floor(np.asarray(z) / self.spacing).astype(int), 0, self.n_cells - 1)

    def contains(self, z, y):
        z = np.asarray(z, dtype=float)
        k = self.cell_index(z)
        nose = np.asarray(self.front_positions)[k]
        return self.shape.contains(nose - z, y)

    def contains_cell(self, k: int, z, y):
        return self.shape.contains(self.front_positions[k] - np.asarray(z, dtype=float), y)

    def outer_radius(self, z):
        z = np.asarray(z, dtype=float)
        nose = np.asarray(self.front_positions)[self.cell_index(z)]
        return self.shape.outer_radius(nose - z)


def build_train(shape: CellShape, spacing: float, n_cells: int) -> CellTrain:
    """Cells at equal spacing, each centred in its slot of ``[0, n*L]``.

    Cells move toward +z, so the nose is the +z end of each cell.
    """
    if n_cells < 1:
        raise GeometryError("n_cells must be >= 1")
    if shape.total_length >= spacing:
        raise GeometryError(
            f"cells overlap: length {shape.total_length:.4g} >= spacing {spacing:.4g}")
    fronts = tuple(k * spacing + 0.5 * (spacing + shape.total_length) for k in range(n_cells))
    return CellTrain(shape, spacing, fronts)


def shape_for_speed(vessel_radius, speed, volume, surface) -> CellShape:
    gap = gap_for_speed(min(max(speed, GAP_TABLE[0][0]), GAP_TABLE[-1][0]))
    return solve_shape(vessel_radius, gap, volume, surface)


def write_profile(shape: CellShape, path, n: int = 400):
    pts = shape.profile_points(n)
    np.savetxt(path, pts, delimiter=",", header="z_m,y_m", comments="")
    return path
