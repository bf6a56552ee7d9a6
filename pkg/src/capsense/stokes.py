"""Steady creeping flow in the frame moving with the cells.

MAC discretisation on the :class:`~capsense.grid.AxiGrid`, periodic in z,
with the mean axial pressure drop ``G`` entering as a body force. Velocity
links that cross a body surface use the true distance to the surface
(cut-cell, Shortley-Weller style), so the no-slip location is captured to
second order while mass fluxes stay on the staircase of active volumes.

Internally everything is scaled to micrometres with unit viscosity; see
:class:`StokesProblem` for the conversions.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import AxiGrid

log = logging.getLogger(__name__)

L0 = 1e-6  # length scale of the scaled system (m)
MIN_THETA = 0.02
WALL = -2


class FlowError(RuntimeError):
    pass


class Frame(enum.Enum):
    COMOVING = "comoving"
    LAB = "lab"


def _crossing(bodies, z0, r0, z1, r1, n_iter=40):
    """Fraction of the way from a fluid point to an interior point where the body starts."""
    lo = np.zeros_like(z0)
    hi = np.ones_like(z0)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        inside = bodies.contains(z0 + mid * (z1 - z0), r0 + mid * (r1 - r0))
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return hi


@dataclass
class Layout:
    active: np.ndarray  # (nz, nr)
    open_z: np.ndarray  # (nz, nr), face i between cells i-1 (periodic) and i
    open_r: np.ndarray  # (nz, nr + 1)
    iz: np.ndarray
    ir: np.ndarray
    ip: np.ndarray
    n_uz: int
    n_ur: int
    n_p: int


def _layout(grid: AxiGrid) -> Layout:
    nz, nr = grid.nz, grid.nr
    bodies = grid.bodies
    zf, rc, rf, zc = grid.zf[:-1], grid.rc, grid.rf, grid.zc
    face_z_in = bodies.contains(*np.meshgrid(zf, rc, indexing="ij"))
    face_r_in = bodies.contains(*np.meshgrid(zc, rf, indexing="ij"))

    def faces(active):
        oz = active & np.roll(active, 1, axis=0) & ~face_z_in
        orr = np.zeros((nz, nr + 1), dtype=bool)
        orr[:, 1:nr] = active[:, 1:] & active[:, :-1] & ~face_r_in[:, 1:nr]
        return oz, orr

    active = grid.center_fluid.copy()
    oz, orr = faces(active)
    # connected components through open faces; keep the largest (periodic in z)
    labels = -np.ones((nz, nr), dtype=int)
    n_act = int(active.sum())
    if n_act:
        idx = -np.ones((nz, nr), dtype=int)
        idx[active] = np.arange(n_act)
        rows, cols = [], []
        w = np.nonzero(oz)
        rows.append(idx[w]); cols.append(idx[(w[0] - 1) % nz, w[1]])
        w = np.nonzero(orr)
        rows.append(idx[w[0], w[1]]); cols.append(idx[w[0], w[1] - 1])
        rows = np.concatenate(rows); cols = np.concatenate(cols)
        adj = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n_act, n_act))
        ncomp, lab = sp.csgraph.connected_components(adj, directed=False)
        keep = np.argmax(np.bincount(lab))
        labels[active] = lab
        active = active & (labels == keep)
        oz, orr = faces(active)

    iz = -np.ones((nz, nr), dtype=int)
    ir = -np.ones((nz, nr + 1), dtype=int)
    ip = -np.ones((nz, nr), dtype=int)
    n_uz = int(oz.sum()); n_ur = int(orr.sum()); n_p = int(active.sum())
    iz[oz] = np.arange(n_uz)
    ir[orr] = n_uz + np.arange(n_ur)
    ip[active] = n_uz + n_ur + np.arange(n_p)
    return Layout(active, oz, orr, iz, ir, ip, n_uz, n_ur, n_p)


@dataclass
class BoundaryLinks:
    """Viscous links from open u_z nodes to no-slip points (for force accounting)."""

    row: np.ndarray  # unknown index of the u_z node
    coef: np.ndarray  # scaled conductance
    wall: np.ndarray  # True for links to the moving vessel wall
    owner: np.ndarray  # body index, WALL for the vessel wall


class StokesProblem:
    """Assembled and factorised saddle-point system for one grid.

    Scaled units: lengths in um, viscosity 1, velocity in m/s. Then pressure
    scales by ``eta / L0`` and force by ``eta * L0``; the mean gradient enters
    as ``G * L0**2 / eta``.
    """

    def __init__(self, grid: AxiGrid, viscosity: float):
        self.grid = grid
        self.viscosity = viscosity
        self.layout = _layout(grid)
        if self.layout.n_p == 0:
            raise FlowError("grid has no fluid volumes")
        self._assemble()
        n = self.matrix.shape[0]
        log.debug("factorising Stokes system with %d unknowns", n)
        try:
            self.lu = spla.splu(self.matrix.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise FlowError(f"singular Stokes system: {exc}") from exc

    # -- assembly -----------------------------------------------------------
    def _assemble(self):
        g, lay = self.grid, self.layout
        nz, nr = g.nz, g.nr
        dz, dr = g.dz / L0, g.dr / L0
        rc = g.rc / L0
        rf = g.rf / L0
        R = g.radius / L0
        length = g.length / L0
        bodies = g.bodies
        two_pi = 2 * np.pi

        rows, cols, vals = [], [], []
        n_u = lay.n_uz + lay.n_ur
        f_wall = np.zeros(n_u + lay.n_p)  # rhs per unit wall speed
        f_grad = np.zeros(n_u + lay.n_p)  # rhs per unit scaled gradient
        b_row, b_coef, b_wall, b_owner = [], [], [], []

        def add(r, c, v):
            rows.append(r); cols.append(c); vals.append(v)

        # ---- axial momentum
        fi, fj = np.nonzero(lay.open_z)
        P = lay.iz[fi, fj]
        diag = np.zeros(P.size)
        zP = fi * dz
        rP = rc[fj]
        f_grad[P] = two_pi * rc[fj] * dr * dz
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if di:
                area = two_pi * rc[fj] * dr
                h = np.full(P.size, dz)
                ni, nj = (fi + di) % nz, fj
                valid = np.ones(P.size, dtype=bool)
            else:
                face_r = rf[fj + 1] if dj > 0 else rf[fj]
                area = two_pi * face_r * dz
                h = np.full(P.size, dr)
                ni, nj = fi, fj + dj
                valid = (nj >= 0) & (nj < nr)
            nbr = np.full(P.size, -1)
            nbr[valid] = lay.iz[ni[valid], nj[valid]]
            coef = area / h
            m = valid & (nbr >= 0)
            add(P[m], nbr[m], -coef[m]); diag[m] += coef[m]
            # wall
            if dj > 0:
                mw = fj == nr - 1
                cw = two_pi * R * dz / (0.5 * dr)
                diag[mw] += cw
                f_wall[P[mw]] += cw * -1.0
                b_row.append(P[mw]); b_coef.append(np.full(mw.sum(), cw))
                b_wall.append(np.ones(mw.sum(), bool)); b_owner.append(np.full(mw.sum(), WALL))
            mb = valid & (nbr < 0)
            if mb.any():
                z1 = zP[mb] + di * dz
                r1 = rP[mb] + dj * dr
                z1w = np.mod(z1, length)
                inside = bodies.contains(z1w * L0, r1 * L0)
                theta = np.ones(mb.sum())
                if inside.any():
                    k = np.nonzero(inside)[0]
                    z0k = np.mod(zP[mb][k], length)
                    theta[k] = _crossing(bodies, z0k * L0, rP[mb][k] * L0,
                                         (z0k + di * dz) * L0, r1[k] * L0)
                theta = np.maximum(theta, MIN_THETA)
                cb = coef[mb] / theta
                diag[mb] += cb
                zb = np.mod(zP[mb] + theta * di * dz, length)
                rb = rP[mb] + theta * dj * dr
                b_row.append(P[mb]); b_coef.append(cb)
                b_wall.append(np.zeros(mb.sum(), bool))
                b_owner.append(bodies.owner(zb * L0, rb * L0))
        add(P, P, diag)
        # pressure gradient: + A (p_E - p_W)
        A = two_pi * rc[fj] * dr
        add(P, lay.ip[fi, fj], A)
        add(P, lay.ip[(fi - 1) % nz, fj], -A)

        # ---- radial momentum
        fi, fj = np.nonzero(lay.open_r)
        P = lay.ir[fi, fj]
        diag = two_pi * dr * dz / rf[fj]  # hoop term
        zP = fi * dz + 0.5 * dz
        rP = rf[fj]
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if di:
                area = two_pi * rf[fj] * dr
                h = np.full(P.size, dz)
                ni, nj = (fi + di) % nz, fj
            else:
                cell_r = rc[fj] if dj > 0 else rc[fj - 1]
                area = two_pi * cell_r * dz
                h = np.full(P.size, dr)
                ni, nj = fi, fj + dj
            coef = area / h
            edge = (nj <= 0) | (nj >= nr)  # axis or wall: u_r = 0 at the node
            nbr = np.full(P.size, -1)
            ok = ~edge
            nbr[ok] = lay.ir[ni[ok], nj[ok]]
            m = nbr >= 0
            add(P[m], nbr[m], -coef[m]); diag[m] += coef[m]
            diag[edge] += coef[edge]
            mb = ~edge & (nbr < 0)
            if mb.any():
                z1 = np.mod(zP[mb] + di * dz, length)
                r1 = rP[mb] + dj * dr
                inside = bodies.contains(z1 * L0, r1 * L0)
                theta = np.ones(mb.sum())
                if inside.any():
                    k = np.nonzero(inside)[0]
                    z0k = zP[mb][k]
                    theta[k] = _crossing(bodies, z0k * L0, rP[mb][k] * L0,
                                         (z0k + di * dz) * L0, r1[k] * L0)
                diag[mb] += coef[mb] / np.maximum(theta, MIN_THETA)
        add(P, P, diag)
        A = two_pi * rf[fj] * dz
        add(P, lay.ip[fi, fj], A)
        add(P, lay.ip[fi, fj - 1], -A)

        # ---- continuity: -(net outflow) = 0
        ci, cj = np.nonzero(lay.active)
        C = lay.ip[ci, cj]
        Az = two_pi * rc[cj] * dr
        for face_i, sign in ((ci, 1.0), ((ci + 1) % nz, -1.0)):
            col = lay.iz[face_i, cj]
            m = col >= 0
            add(C[m], col[m], sign * Az[m])
        for face_j, sign in ((cj, 1.0), (cj + 1, -1.0)):
            col = lay.ir[ci, face_j]
            m = col >= 0
            Ar = two_pi * rf[face_j] * dz
            add(C[m], col[m], sign * Ar[m])

        n = n_u + lay.n_p
        M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
        # pin one pressure: drop its column and continuity row
        self.pin = int(lay.ip[lay.active][0])
        keep = np.ones(n, dtype=bool)
        keep[self.pin] = False
        self.keep = keep
        self.matrix = M[keep][:, keep]
        self.full_matrix = M
        self.f_wall = f_wall
        self.f_grad = f_grad
        self.links = BoundaryLinks(np.concatenate(b_row), np.concatenate(b_coef),
                                   np.concatenate(b_wall), np.concatenate(b_owner))

    # -- solving --------------------------------------------------------------
    def scaled_gradient(self, G: float) -> float:
        return G * L0**2 / self.viscosity

    def solve_vector(self, speed: float, G: float) -> np.ndarray:
        """Scaled solution vector for wall speed ``-speed`` and pressure drop ``G`` (Pa/m)."""
        rhs = speed * self.f_wall + self.scaled_gradient(G) * self.f_grad
        x = np.zeros(rhs.size)
        x[self.keep] = self.lu.solve(rhs[self.keep])
        res = self.full_matrix @ x - rhs
        scale = max(np.max(np.abs(rhs)), 1e-300)
        if not np.all(np.isfinite(x)) or np.max(np.abs(res)) > 1e-6 * scale:
            raise FlowError(f"Stokes solve failed, residual {np.max(np.abs(res)):.3e}")
        return x

    def field(self, x: np.ndarray, speed: float, G: float, frame=Frame.COMOVING) -> "FlowField":
        g, lay = self.grid, self.layout
        uz = np.zeros((g.nz + 1, g.nr))
        uz[:-1][lay.open_z] = x[lay.iz[lay.open_z]]
        uz[-1] = uz[0]
        ur = np.zeros((g.nz, g.nr + 1))
        ur[lay.open_r] = x[lay.ir[lay.open_r]]
        p = np.full((g.nz, g.nr), np.nan)
        p[lay.active] = x[lay.ip[lay.active]] * self.viscosity / L0
        flow = FlowField(g, uz, ur, p, G, speed, Frame.COMOVING, problem=self, vector=x)
        return flow.to_lab() if frame is Frame.LAB else flow

    def solve(self, speed: float, G: float, frame=Frame.COMOVING) -> "FlowField":
        return self.field(self.solve_vector(speed, G), speed, G, frame)

    # -- forces ---------------------------------------------------------------
    def axial_forces(self, x: np.ndarray, speed: float, G: float):
        """Axial forces (N) on each body and the wall from the discrete momentum balance.

        Returns ``(bodies, wall, shear, pressure, drive)`` where ``bodies`` maps
        body index to total force and the other dicts break it down.
        """
        g, lay, links = self.grid, self.layout, self.links
        nz, nr = g.nz, g.nr
        dz, dr = g.dz / L0, g.dr / L0
        rc = g.rc / L0
        Gs = self.scaled_gradient(G)
        fscale = self.viscosity * L0
        u_b = np.where(links.wall, -speed, 0.0)
        f = links.coef * (x[links.row] - u_b)
        shear, pressure, drive = {}, {}, {}
        wall_force = float(np.sum(f[links.wall])) * fscale
        for k in np.unique(links.owner[~links.wall]):
            shear[int(k)] = float(np.sum(f[(links.owner == k) & ~links.wall])) * fscale
        # pressure on closed axial faces and the mean-gradient share of body volume
        closed = ~lay.open_z
        ci, cj = np.nonzero(closed)
        owner = g.bodies.owner(ci * g.dz, g.rc[cj])
        A = 2 * np.pi * rc[cj] * dr
        pW = np.where(lay.active[(ci - 1) % nz, cj], x[lay.ip[(ci - 1) % nz, cj]], 0.0)
        pE = np.where(lay.active[ci, cj], x[lay.ip[ci, cj]], 0.0)
        fp = A * (pW - pE)
        fv = A * dz * Gs
        for k in np.unique(owner):
            m = owner == k
            pressure[int(k)] = float(np.sum(fp[m])) * fscale
            drive[int(k)] = float(np.sum(fv[m])) * fscale
        keys = set(shear) | set(pressure)
        total = {k: shear.get(k, 0.0) + pressure.get(k, 0.0) + drive.get(k, 0.0) for k in keys}
        return total, wall_force, shear, pressure, drive

    def drive_volume(self) -> float:
        """pi R^2 times the period length, in m^3."""
        return np.pi * self.grid.radius**2 * self.grid.length


@dataclass
class FlowField:
    grid: AxiGrid
    uz: np.ndarray  # (nz + 1, nr) m/s
    ur: np.ndarray  # (nz, nr + 1) m/s
    p: np.ndarray  # (nz, nr) Pa, periodic part
    G: float
    speed: float
    frame: Frame = Frame.COMOVING
    problem: StokesProblem | None = field(default=None, repr=False)
    vector: np.ndarray | None = field(default=None, repr=False)

    def to_lab(self) -> "FlowField":
        if self.frame is Frame.LAB:
            return self
        uz = self.uz.copy()
        open_z = np.vstack([self.problem.layout.open_z, self.problem.layout.open_z[:1]]) \
            if self.problem is not None else np.ones_like(uz, dtype=bool)
        uz[open_z] += self.speed
        return FlowField(self.grid, uz, self.ur.copy(), self.p.copy(), self.G, self.speed, Frame.LAB,
                         self.problem, self.vector)

    @property
    def active(self):
        return self.problem.layout.active

    def face_fluxes(self):
        """Volumetric fluxes (m^3/s) through axial and radial faces, comoving frame."""
        if self.frame is not Frame.COMOVING:
            raise FlowError("face fluxes are defined in the comoving frame")
        g = self.grid
        Fz = self.uz * (2 * np.pi * g.rc * g.dr)[None, :]
        Fr = self.ur * (2 * np.pi * g.rf * g.dz)[None, :]
        return Fz, Fr

    def divergence(self):
        """Net volumetric outflow (m^3/s) of every active volume."""
        Fz, Fr = self.face_fluxes()
        div = Fz[1:] - Fz[:-1] + Fr[:, 1:] - Fr[:, :-1]
        return np.where(self.active, div, 0.0)

    def mean_speed(self) -> float:
        """Cross-section averaged axial velocity of the fluid (frame of the field)."""
        g = self.grid
        w = 2 * np.pi * g.rc * g.dr
        return float(np.mean(self.uz[:-1] @ w) / (np.pi * g.radius**2))

    def to_csv(self, path):
        g = self.grid
        Z, R = np.meshgrid(g.zc, g.rc, indexing="ij")
        uzc = 0.5 * (self.uz[1:] + self.uz[:-1])
        urc = 0.5 * (self.ur[:, 1:] + self.ur[:, :-1])
        data = np.column_stack([Z.ravel(), R.ravel(), uzc.ravel(), urc.ravel(), self.p.ravel()])
        np.savetxt(path, data, delimiter=",", header="z,r,u_z,u_r,p", comments="", fmt="%.10e")
        return path


# -- module-level operations --------------------------------------------------

def _problem(grid_or_problem, viscosity):
    if isinstance(grid_or_problem, StokesProblem):
        return grid_or_problem
    return StokesProblem(grid_or_problem, viscosity)


def solve_flow(grid_or_problem, speed: float, G: float, *, viscosity: float = 1e-3,
               frame: Frame = Frame.COMOVING) -> FlowField:
    """Solve with the wall at ``-speed`` (comoving frame) and mean pressure drop ``G`` (Pa/m)."""
    return _problem(grid_or_problem, viscosity).solve(speed, G, frame)


def _cell_force(problem, x, speed, G, index):
    total = problem.axial_forces(x, speed, G)[0]
    return total.get(index, 0.0)


def find_pressure_gradient(grid_or_problem, speed: float, *, viscosity: float = 1e-3,
                           cell_index: int | None = None):
    """Mean pressure drop at which the chosen cell feels no net axial force.

    The force is affine in ``G``, so a solve at ``G = 0`` and one probe fix
    ``G*``; a third solve verifies it. Returns ``(G*, flow)``.
    """
    problem = _problem(grid_or_problem, viscosity)
    bodies = problem.grid.bodies
    if bodies.train is None:
        raise FlowError("pressure-gradient search needs a cell train")
    if cell_index is None:
        cell_index = bodies.n_cells // 2
    probe = 8 * problem.viscosity * max(speed, 1e-3) / problem.grid.radius**2
    f0 = _cell_force(problem, problem.solve_vector(speed, 0.0), speed, 0.0, cell_index)
    f1 = _cell_force(problem, problem.solve_vector(speed, probe), speed, probe, cell_index)
    if abs(f1 - f0) <= 1e-12 * max(abs(f0), abs(f1), 1e-30):
        raise FlowError("pressure probes give equal cell forces; cannot fit G*")
    G = -f0 * probe / (f1 - f0)
    x = problem.solve_vector(speed, G)
    residual = _cell_force(problem, x, speed, G, cell_index)
    scale = 6 * np.pi * problem.viscosity * speed * bodies.train.shape.r
    if abs(residual) > 1e-3 * scale:
        raise FlowError(f"net cell force {residual:.3e} N at G* exceeds tolerance {1e-3 * scale:.3e} N")
    log.info("G* = %.6g Pa/m (probe forces %.4g, %.4g N)", G, f0, f1)
    return G, problem.field(x, speed, G)


def gradient_for_mean_speed(grid_or_problem, speed: float, *, viscosity: float = 1e-3):
    """Pressure drop that makes the lab-frame mean speed equal ``speed``.

    In the comoving frame that is zero net volumetric flux; the flux is affine
    in ``G`` so two solves fix it. Returns ``(G, flow)``.
    """
    problem = _problem(grid_or_problem, viscosity)
    probe = 8 * problem.viscosity * max(speed, 1e-3) / problem.grid.radius**2
    q0 = problem.field(problem.solve_vector(speed, 0.0), speed, 0.0).mean_speed()
    q1 = problem.field(problem.solve_vector(speed, probe), speed, probe).mean_speed()
    if abs(q1 - q0) <= 1e-12 * max(abs(q0), abs(q1), 1e-30):
        raise FlowError("pressure probes give equal fluxes; cannot fit G")
    G = -q0 * probe / (q1 - q0)
    return G, problem.solve(speed, G)


@dataclass
class TractionReport:
    """Axial force (N) split into viscous shear and pressure, over ``area`` (m^2).

    For a band series, ``positions`` are band centres and ``samples`` the
    shear force at each; ``axial`` is then the maximum sample.
    """

    axial: float
    shear: float
    pressure: float
    area: float
    positions: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def maximum(self) -> float:
        return float(np.max(self.samples)) if self.samples.size else self.axial

    @property
    def minimum(self) -> float:
        return float(np.min(self.samples)) if self.samples.size else self.axial

    @property
    def variation(self) -> float:
        """Peak-to-trough change relative to the peak."""
        mx = self.maximum
        return (mx - self.minimum) / mx if mx else 0.0


def wall_shear(flow: FlowField) -> np.ndarray:
    """Axial shear traction (Pa) the fluid exerts on the wall, per axial volume.

    Uses the same half-cell wall link as the momentum equations, so summed
    over the wall it balances the driving pressure drop exactly.
    """
    g = flow.grid
    u_w = 0.0 if flow.frame is Frame.LAB else -flow.speed
    viscosity = flow.problem.viscosity if flow.problem is not None else 1e-3
    tau = viscosity * (flow.uz[:-1, -1] - u_w) / (0.5 * g.dr)
    # stresses sit on axial faces; average to volume centres
    return 0.5 * (tau + np.roll(tau, -1))


def _periodic_weights(flow, center, length, smoothing_width):
    from .grid import BandTrack, band_cell_weights

    g = flow.grid
    if not 0.0 <= center <= g.length:
        raise FlowError(f"band centre {center:.4g} m outside the domain [0, {g.length:.4g}] m")
    if length + smoothing_width >= g.length:
        raise FlowError("band longer than the periodic domain")
    w = np.zeros(g.nz)
    for shift in (-g.length, 0.0, g.length):
        w += band_cell_weights(BandTrack(center + shift, length, smoothing_width, 0.0), g.zf)
    return w


def force_on_band(flow: FlowField, center: float, length: float,
                  smoothing_width: float = 0.2e-6) -> TractionReport:
    """Shear force on a wall band of ``length`` centred at ``center`` (periodic wrap)."""
    g = flow.grid
    w = _periodic_weights(flow, center, length, smoothing_width)
    f = float(np.sum(wall_shear(flow) * w) * 2 * np.pi * g.radius * g.dz)
    return TractionReport(f, f, 0.0, 2 * np.pi * g.radius * length,
                          np.array([center]), np.array([f]))


def band_force_series(flow: FlowField, length: float, smoothing_width: float = 0.2e-6,
                      n_positions: int | None = None) -> TractionReport:
    """Band force as the band slides over one period of the (periodic) domain."""
    g = flow.grid
    n = n_positions or g.nz
    centers = (np.arange(n) + 0.5) * g.length / n
    forces = np.array([force_on_band(flow, c, length, smoothing_width).axial for c in centers])
    mx = float(forces.max())
    return TractionReport(mx, mx, 0.0, 2 * np.pi * g.radius * length, centers, forces)


def force_on_cell(flow: FlowField, index: int) -> TractionReport:
    """Axial force on cell ``index`` from the discrete momentum balance."""
    bodies = flow.grid.bodies
    if bodies.train is None or flow.problem is None:
        raise FlowError("no cells in this flow domain")
    if not 0 <= index < bodies.n_cells:
        raise FlowError(f"cell index {index} out of range 0..{bodies.n_cells - 1}")
    x = flow.vector
    total, _, shear, pressure, drive = flow.problem.axial_forces(x, flow.speed, flow.G)
    sh = shear.get(index, 0.0)
    pr = pressure.get(index, 0.0) + drive.get(index, 0.0)
    shape = bodies.train.shape
    return TractionReport(sh + pr, sh, pr, shape.surface)
