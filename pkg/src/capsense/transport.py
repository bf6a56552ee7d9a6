"""Advection-diffusion of the chemical on a frozen comoving flow.

Finite volumes on the same staircase of active volumes as the flow. Each
step treats diffusion and the Robin absorbers implicitly and advection
explicitly (upwind, optionally van Leer limited)::

    (V/dt + L + A(t)) c' = V/dt c - adv(c) + inlet + sources(t)

``L`` and the static absorbers are factorised once. The moving absorbing
band only changes a handful of diagonal entries, which the Woodbury
identity folds in from precomputed columns of the inverse.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .grid import BandKind, BandTrack, Sphere, band_cell_weights
from .stokes import Frame, _crossing

log = logging.getLogger(__name__)


class TransportError(RuntimeError):
    pass


@dataclass
class ConcentrationField:
    c: np.ndarray  # (nz, nr) molecules/m^3, zero in inactive volumes
    t: float = 0.0

    def copy(self) -> "ConcentrationField":
        return ConcentrationField(self.c.copy(), self.t)


@dataclass(frozen=True)
class FluxLedger:
    """Molecule budget of one step (all rates in molecules/s)."""

    t: float
    dt: float
    inflow: float
    outflow: float
    absorption: float
    emission: float
    mass_rate: float

    @property
    def closure(self) -> float:
        return self.inflow + self.emission - self.outflow - self.absorption - self.mass_rate

    @property
    def scale(self) -> float:
        return max(abs(self.inflow), abs(self.outflow), abs(self.absorption), abs(self.emission),
                   abs(self.mass_rate))


def window_closure(ledgers, window: int = 100) -> float:
    """Worst relative closure over consecutive windows of ``window`` steps."""
    worst = 0.0
    rows = np.array([(l.inflow, l.outflow, l.absorption, l.emission, l.mass_rate, l.dt)
                     for l in ledgers])
    if rows.size == 0:
        return 0.0
    for start in range(0, max(len(rows) - window, 0) + 1, window):
        blk = rows[start:start + window]
        dt = blk[:, 5:6]
        tot = np.sum(blk[:, :5] * dt, axis=0)
        closure = tot[0] + tot[3] - tot[1] - tot[2] - tot[4]
        scale = np.max(np.abs(blk[:, :5] * dt).sum(axis=0))
        if scale > 0:
            worst = max(worst, abs(closure) / scale)
    return worst


@dataclass
class TransportDomain:
    """Non-periodic transport domain: inlet at z = 0, outlet at z = nz dz."""

    nz: int
    nr: int
    dz: float
    dr: float
    radius: float
    active: np.ndarray  # (nz, nr) bool
    open_z: np.ndarray  # (nz + 1, nr) bool
    open_r: np.ndarray  # (nz, nr + 1) bool
    Fz: np.ndarray  # (nz + 1, nr) m^3/s
    Fr: np.ndarray  # (nz, nr + 1) m^3/s
    sphere: Sphere | None = None
    speed: float = 0.0
    period_cells: int | None = None

    @property
    def zc(self):
        return (np.arange(self.nz) + 0.5) * self.dz

    @property
    def rc(self):
        return (np.arange(self.nr) + 0.5) * self.dr

    @property
    def zf(self):
        return np.arange(self.nz + 1) * self.dz

    @property
    def rf(self):
        return np.arange(self.nr + 1) * self.dr

    @property
    def length(self):
        return self.nz * self.dz

    @property
    def volumes(self):
        v = 2 * np.pi * self.rc * self.dr * self.dz
        return np.broadcast_to(v, (self.nz, self.nr)).copy()

    @classmethod
    def from_flow(cls, flow, periods: int = 1, sphere: Sphere | None = None) -> "TransportDomain":
        """Unroll a periodic comoving flow over ``periods`` copies of its domain."""
        if flow.frame is not Frame.COMOVING:
            raise TransportError("transport runs on the comoving flow")
        g, lay = flow.grid, flow.problem.layout
        Fz, Fr = flow.face_fluxes()
        active = np.tile(lay.active, (periods, 1))
        open_z = np.vstack([np.tile(lay.open_z, (periods, 1)), lay.open_z[:1]])
        open_r = np.tile(lay.open_r, (periods, 1))
        Fz = np.vstack([np.tile(Fz[:-1], (periods, 1)), Fz[:1]])
        Fr = np.tile(Fr, (periods, 1))
        return cls(g.nz * periods, g.nr, g.dz, g.dr, g.radius, active, open_z, open_r,
                   np.ascontiguousarray(Fz), np.ascontiguousarray(Fr), sphere, flow.speed,
                   g.nz if g.bodies.train is not None or periods > 1 else None)

    @classmethod
    def quiescent(cls, nz, nr, dz, dr, radius, closed_ends=False) -> "TransportDomain":
        """Empty vessel with no flow (diffusion tests)."""
        active = np.ones((nz, nr), dtype=bool)
        open_z = np.ones((nz + 1, nr), dtype=bool)
        if closed_ends:
            open_z[0] = open_z[-1] = False
        open_r = np.zeros((nz, nr + 1), dtype=bool)
        open_r[:, 1:-1] = True
        return cls(nz, nr, dz, dr, radius, active, open_z, open_r,
                   np.zeros((nz + 1, nr)), np.zeros((nz, nr + 1)))

    def divergence(self):
        d = self.Fz[1:] - self.Fz[:-1] + self.Fr[:, 1:] - self.Fr[:, :-1]
        return np.where(self.active, d, 0.0)


def stable_step(domain: TransportDomain, tracks=(), cfl: float = 0.4,
                limiter: str = "upwind") -> float:
    """Largest admissible step: ``cfl`` times the explicit advection limit
    (halved with the limiter), and at most half a smoothing width of band travel."""
    ratio = kernels.max_outflow_ratio(domain.Fz, domain.Fr, domain.volumes, domain.active)
    limit = cfl * (0.5 if limiter == "vanleer" else 1.0)
    bound = limit / ratio if ratio > 0 else math.inf
    for t in tracks:
        if t.speed:
            bound = min(bound, t.smoothing_width / (2 * abs(t.speed)))
    return bound


class TransportSolver:
    """Time stepper for one domain, diffusivity, step size and set of bands."""

    def __init__(self, domain: TransportDomain, diffusion: float, dt: float, *,
                 inlet_concentration: float | None = 0.0, tracks=(), absorption_velocity=1.0,
                 limiter: str = "upwind", cfl: float = 0.4):
        self.domain = d = domain
        self.D = diffusion
        self.dt = dt
        self.inlet = inlet_concentration
        self.tracks = list(tracks)
        self.k = absorption_velocity
        self.limiter = limiter == "vanleer"
        self.volumes = d.volumes
        self._adv = np.zeros((d.nz, d.nr))

        flux_scale = max(np.max(np.abs(d.Fz)), np.max(np.abs(d.Fr)), 1e-300)
        if np.max(np.abs(d.divergence())) > 1e-8 * flux_scale:
            raise TransportError("flow field is not divergence-free on the transport grid")

        self.dt_max = stable_step(d, self.tracks, cfl, limiter)
        if dt > self.dt_max * (1 + 1e-9):
            raise TransportError(f"dt = {dt:.4g} s exceeds the stability/band bound {self.dt_max:.4g} s")

        self.index = -np.ones((d.nz, d.nr), dtype=int)
        self.index[d.active] = np.arange(int(d.active.sum()))
        self.n = int(d.active.sum())
        self._assemble()
        self.lu = spla.splu(self.matrix.tocsc(), permc_spec="MMD_AT_PLUS_A")
        self._z_lo = self._z_hi = 0
        self._zcols = np.zeros((0, self.n))
        self._wall_rows = self._wall_cells()

    # -- set-up ---------------------------------------------------------------
    def _assemble(self):
        d, D, idx = self.domain, self.D, self.index
        rows, cols, vals = [], [], []
        diag = np.zeros(self.n)
        two_pi = 2 * np.pi
        # axial faces between volumes
        fi, fj = np.nonzero(d.open_z[1:-1] & d.active[1:] & d.active[:-1])
        fi = fi + 1
        g = D * two_pi * d.rc[fj] * d.dr / d.dz
        a, b = idx[fi - 1, fj], idx[fi, fj]
        rows += [a, b]; cols += [b, a]; vals += [-g, -g]
        np.add.at(diag, a, g); np.add.at(diag, b, g)
        # radial faces
        fi, fj = np.nonzero(d.open_r[:, 1:-1] & d.active[:, 1:] & d.active[:, :-1])
        fj = fj + 1
        g = D * two_pi * d.rf[fj] * d.dz / d.dr
        a, b = idx[fi, fj - 1], idx[fi, fj]
        rows += [a, b]; cols += [b, a]; vals += [-g, -g]
        np.add.at(diag, a, g); np.add.at(diag, b, g)
        # Dirichlet inlet half a volume away
        self.g_in = np.zeros(d.nr)
        if self.inlet is not None:
            m = d.open_z[0] & d.active[0]
            self.g_in[m] = D * two_pi * d.rc[m] * d.dr / (0.5 * d.dz)
            np.add.at(diag, idx[0, m], self.g_in[m])
        # static sphere absorber
        self.sphere_rows, self.sphere_coef = self._sphere_links()
        np.add.at(diag, self.sphere_rows, self.sphere_coef)
        self.laplacian_diag = diag.copy()
        vol = self.volumes[d.active]
        diag = diag + vol / self.dt
        rows.append(np.arange(self.n)); cols.append(np.arange(self.n)); vals.append(diag)
        self.matrix = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                    shape=(self.n, self.n)).tocsr()
        self.vol_dt = vol / self.dt

    @staticmethod
    def _robin(k, h):
        # surface rate k in series with the half-volume diffusive conductance h
        return k * h / (k + h)

    def _sphere_links(self):
        d = self.domain
        s = d.sphere
        if s is None:
            return np.zeros(0, dtype=int), np.zeros(0)
        Z, R = np.meshgrid(d.zc, d.rc, indexing="ij")
        inside = s.contains(Z, R)
        rows, coefs = [], []
        two_pi = 2 * np.pi
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ai, aj = np.nonzero(d.active)
            ni, nj = ai + di, aj + dj
            ok = (ni >= 0) & (ni < d.nz) & (nj >= 0) & (nj < d.nr)
            ai, aj, ni, nj = ai[ok], aj[ok], ni[ok], nj[ok]
            hit = inside[ni, nj]
            ai, aj, ni, nj = ai[hit], aj[hit], ni[hit], nj[hit]
            if ai.size == 0:
                continue
            theta = _crossing(s, Z[ai, aj], R[ai, aj], Z[ni, nj], R[ni, nj])
            if di:
                area = two_pi * d.rc[aj] * d.dr
                dist = np.maximum(theta, 0.02) * d.dz
            else:
                area = two_pi * d.rf[aj + (dj > 0)] * d.dz
                dist = np.maximum(theta, 0.02) * d.dr
            rows.append(self.index[ai, aj])
            coefs.append(self._robin(self.k, self.D / dist) * area)
        if not rows:
            raise TransportError("sphere sensor does not touch any active volume")
        return np.concatenate(rows), np.concatenate(coefs)

    def _wall_cells(self):
        d = self.domain
        top = d.active[:, -1]
        rows = np.where(top, self.index[:, -1], -1)
        return rows

    # -- band terms -----------------------------------------------------------
    def _band_terms(self, t):
        """(columns, coefficients) of the absorbing bands and the source vector at time t."""
        d = self.domain
        wall_area = 2 * np.pi * d.radius * d.dz
        h = self.D / (0.5 * d.dr)
        absorb = np.zeros(d.nz)
        source = np.zeros(d.nz)
        for tr in self.tracks:
            w = band_cell_weights(tr, d.zf, t)
            if tr.kind is BandKind.ABSORBER:
                absorb += self._robin(tr.strength, h) * wall_area * w
            else:
                source += tr.strength * wall_area * w
        return absorb, source

    def _ensure_columns(self, lo, hi):
        """Make sure inverse columns for wall volumes in [lo, hi) are cached."""
        if self._z_hi > self._z_lo and lo >= self._z_lo and hi <= self._z_hi:
            return
        new_lo = lo if self._z_hi == self._z_lo else min(lo, self._z_lo)
        new_hi = hi if self._z_hi == self._z_lo else max(hi, self._z_hi)
        block = np.zeros((new_hi - new_lo, self.n))
        for col in range(new_lo, new_hi):
            if self._z_lo <= col < self._z_hi and self._z_hi > self._z_lo:
                block[col - new_lo] = self._zcols[col - self._z_lo]
                continue
            row = self._wall_rows[col]
            if row < 0:
                raise TransportError(f"absorbing band over a blocked wall volume at column {col}")
            e = np.zeros(self.n)
            e[row] = 1.0
            block[col - new_lo] = self.lu.solve(e)
        self._zcols, self._z_lo, self._z_hi = block, new_lo, new_hi

    def _solve(self, rhs, absorb):
        x = self.lu.solve(rhs)
        cols = np.nonzero(absorb > 0)[0]
        if cols.size == 0:
            return x
        lo, hi = int(cols[0]), int(cols[-1]) + 1
        self._ensure_columns(lo, hi)
        Zb = self._zcols[lo - self._z_lo:hi - self._z_lo]  # (m, n) view
        rows = self._wall_rows[lo:hi]
        a = absorb[lo:hi]
        small = np.eye(hi - lo) + a[:, None] * Zb[:, rows].T
        y = np.linalg.solve(small, a * x[rows])
        return x - Zb.T @ y

    # -- stepping -------------------------------------------------------------
    def step(self, fld: ConcentrationField) -> tuple[ConcentrationField, FluxLedger]:
        d, dt = self.domain, self.dt
        c = fld.c
        c_in = self.inlet if self.inlet is not None else 0.0
        inflow_adv, outflow = kernels.advective_outflow(c, d.Fz, d.Fr, d.active, c_in, self.limiter,
                                                         self._adv)
        tm = fld.t + 0.5 * dt
        absorb, source = self._band_terms(tm)
        act = d.active
        rhs = self.vol_dt * c[act] - self._adv[act]
        top = self._wall_rows
        emit = self._scatter_wall(source)
        rhs += emit
        if self.inlet is not None:
            m = self.g_in > 0
            rhs[self.index[0, m]] += self.g_in[m] * self.inlet
        x = self._solve(rhs, absorb)

        scale = max(np.max(np.abs(c)), c_in, 1e-300)
        lowest = float(np.min(x)) if x.size else 0.0
        if lowest < -1e-12 * scale or not np.all(np.isfinite(x)):
            raise TransportError(f"negative concentration {lowest:.3e} at t = {fld.t + dt:.6g} s")
        new = np.zeros_like(c)
        new[act] = x

        inflow = inflow_adv
        if self.inlet is not None:
            m = self.g_in > 0
            inflow += float(np.sum(self.g_in[m] * (self.inlet - new[0, m])))
        valid = top >= 0
        absorption = float(np.sum(absorb[valid] * x[top[valid]]))
        if self.sphere_rows.size:
            absorption += float(np.sum(self.sphere_coef * x[self.sphere_rows]))
        vol = self.volumes[act]
        mass_rate = float(np.sum(vol * (x - c[act]))) / dt
        ledger = FluxLedger(fld.t + dt, dt, inflow, outflow, absorption, float(source.sum()),
                            mass_rate)
        return ConcentrationField(new, fld.t + dt), ledger

    def _scatter_wall(self, per_column):
        out = np.zeros(self.n)
        rows = self._wall_rows
        m = (per_column != 0) & (rows >= 0)
        if np.any((per_column != 0) & (rows < 0)):
            raise TransportError("source band over a blocked wall volume")
        np.add.at(out, rows[m], per_column[m])
        return out

    # -- shift-by-L -----------------------------------------------------------
    def shift(self, fld: ConcentrationField, fill: float | None = None) -> ConcentrationField:
        """Translate the field one period downstream and re-base the bands upstream."""
        d = self.domain
        P = d.period_cells
        if not P or d.speed <= 0:
            raise TransportError("shift needs a periodic domain and a moving wall")
        period = P * d.dz / d.speed
        n = fld.t / period
        if abs(n - round(n)) > 1e-6 or round(n) < 1:
            raise TransportError(f"shift at t = {fld.t:.6g} s is not a multiple of the period {period:.6g} s")
        fill = (self.inlet or 0.0) if fill is None else fill
        c = np.zeros_like(fld.c)
        c[P:] = fld.c[:-P]
        c[:P] = fill
        c[~d.active] = 0.0
        self.tracks = [t.rebased(P * d.dz) for t in self.tracks]
        return ConcentrationField(c, fld.t)

    # -- diagnostics ----------------------------------------------------------
    def band_flux(self, fld: ConcentrationField, track: BandTrack, t: float | None = None) -> float:
        """Absorption rate (molecules/s) of a wall band for the field ``fld``."""
        d = self.domain
        t = fld.t if t is None else t
        w = band_cell_weights(track, d.zf, t)
        h = self.D / (0.5 * d.dr)
        coef = self._robin(track.strength, h) * 2 * np.pi * d.radius * d.dz * w
        return float(np.sum(coef * fld.c[:, -1]))

    def sphere_flux(self, fld: ConcentrationField) -> float:
        if not self.sphere_rows.size:
            raise TransportError("domain has no sphere sensor")
        x = fld.c[self.domain.active]
        return float(np.sum(self.sphere_coef * x[self.sphere_rows]))

    def band_surface_concentration(self, fld: ConcentrationField, track: BandTrack,
                                   t: float | None = None) -> float:
        """Band-weighted mean concentration on the absorbing wall surface."""
        d = self.domain
        t = fld.t if t is None else t
        w = band_cell_weights(track, d.zf, t)
        h = self.D / (0.5 * d.dr)
        surf = fld.c[:, -1] * h / (track.strength + h)
        return float(np.sum(surf * w) / np.sum(w))

    def mass(self, fld: ConcentrationField) -> float:
        return float(np.sum(self.volumes * fld.c))

    def outlet_flux(self, fld: ConcentrationField) -> float:
        return float(np.sum(self.domain.Fz[-1] * fld.c[-1]))


def sensor_flux(solver: TransportSolver, fld: ConcentrationField, track: BandTrack | None = None,
                t: float | None = None) -> float:
    """Rate at which the sensor absorbs molecules: a wall band, or the sphere when ``track`` is None."""
    if track is None:
        return solver.sphere_flux(fld)
    if track.kind is not BandKind.ABSORBER:
        raise TransportError("sensor flux is defined for absorbing bands")
    return solver.band_flux(fld, track, t)


def shift_solution(solver: TransportSolver, fld: ConcentrationField,
                   fill: float | None = None) -> ConcentrationField:
    return solver.shift(fld, fill)


@dataclass
class TimeSeries:
    """Per-step sensor record, written as CSV."""

    t: list = field(default_factory=list)
    band_position: list = field(default_factory=list)
    sensor_flux: list = field(default_factory=list)
    ledgers: list = field(default_factory=list)

    COLUMNS = ("t", "band_position", "sensor_flux", "inflow", "outflow", "absorption", "emission",
               "mass_rate")

    def append(self, t, position, flux, ledger: FluxLedger):
        self.t.append(t)
        self.band_position.append(position)
        self.sensor_flux.append(flux)
        self.ledgers.append(ledger)

    def __len__(self):
        return len(self.t)

    def arrays(self):
        return np.array(self.t), np.array(self.band_position), np.array(self.sensor_flux)

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for t, z, f, l in zip(self.t, self.band_position, self.sensor_flux, self.ledgers):
                w.writerow([f"{t:.9e}", f"{z:.9e}", f"{f:.9e}", f"{l.inflow:.9e}",
                            f"{l.outflow:.9e}", f"{l.absorption:.9e}", f"{l.emission:.9e}",
                            f"{l.mass_rate:.9e}"])
        return path


def write_field(domain: TransportDomain, fld: ConcentrationField, path, header_lines=()):
    """Dump (z, r, c) at volume centres."""
    Z, R = np.meshgrid(domain.zc, domain.rc, indexing="ij")
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        np.savetxt(fh, np.column_stack([Z.ravel(), R.ravel(), fld.c.ravel()]), delimiter=",",
                   header="z,r,c", comments="", fmt="%.10e")
    return path
