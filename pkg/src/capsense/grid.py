"""Staggered axisymmetric (z, r) grid and the moving wall-band tracks.

Control volume ``(i, j)`` spans ``z in [i dz, (i+1) dz]`` and
``r in [j dr, (j+1) dr]``. Axial faces sit at ``z = i dz`` (``nz + 1`` of
them per row), radial faces at ``r = j dr`` (``nr + 1`` per column).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CellTrain


FLUID, CUT, SOLID = 0, 1, 2


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Sphere:
    center_z: float
    radius: float

    def contains(self, z, r):
        z = np.asarray(z, dtype=float)
        r = np.asarray(r, dtype=float)
        return (z - self.center_z) ** 2 + r * r <= self.radius**2


@dataclass(frozen=True)
class BodySet:
    """Union of the cell train and the optional sensor sphere."""

    train: CellTrain | None = None
    sphere: Sphere | None = None

    @property
    def n_cells(self) -> int:
        return 0 if self.train is None else self.train.n_cells

    @property
    def sphere_index(self) -> int:
        return self.n_cells

    def contains(self, z, r):
        z = np.asarray(z, dtype=float)
        r = np.asarray(r, dtype=float)
        inside = np.zeros(np.broadcast(z, r).shape, dtype=bool)
        if self.train is not None:
            inside |= self.train.contains(z, r)
        if self.sphere is not None:
            inside |= self.sphere.contains(z, r)
        return inside

    def owner(self, z, r):
        """Body a boundary point is attributed to: cell slot, sphere, or -1."""
        z = np.asarray(z, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.full(np.broadcast(z, r).shape, -1, dtype=int)
        if self.train is not None:
            out[...] = self.train.cell_index(z)
        if self.sphere is not None:
            s = self.sphere
            near = (z - s.center_z) ** 2 + r * r <= (s.radius * 1.5) ** 2
            out[near] = self.sphere_index
        return out

    def max_radius(self) -> float:
        rmax = 0.0
        if self.train is not None:
            rmax = max(rmax, self.train.shape.r)
        if self.sphere is not None:
            rmax = max(rmax, self.sphere.radius)
        return rmax


@dataclass
class AxiGrid:
    nz: int
    nr: int
    dz: float
    dr: float
    radius: float
    bodies: BodySet
    classification: np.ndarray  # (nz, nr) FLUID/CUT/SOLID by subsampling
    fluid_fraction: np.ndarray  # (nz, nr)
    aperture_z: np.ndarray  # (nz + 1, nr)
    aperture_r: np.ndarray  # (nz, nr + 1)
    center_fluid: np.ndarray  # (nz, nr) centre outside every body
    meta: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.nz * self.dz

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
    def volumes(self):
        """Annular control-volume volumes, shape (nz, nr)."""
        v = 2 * np.pi * self.rc * self.dr * self.dz
        return np.broadcast_to(v, (self.nz, self.nr)).copy()

    def fluid_volume(self) -> float:
        return float(np.sum(self.volumes * self.fluid_fraction))

    def to_text(self) -> str:
        lines = [f"nz = {self.nz}", f"nr = {self.nr}", f"dz = {self.dz!r}", f"dr = {self.dr!r}"]
        codes = "FCS"
        for j in range(self.nr - 1, -1, -1):
            lines.append("".join(codes[k] for k in self.classification[:, j]))
        return "\n".join(lines) + "\n"


def _fractions_2d(bodies, z0, z1, r0, r1, n):
    """Fluid fraction of each (z, r) box by an n x n midpoint subsample."""
    t = (np.arange(n) + 0.5) / n
    zs = z0[:, None] + np.outer(z1 - z0, t)[:, :]
    rs = r0[:, None] + np.outer(r1 - r0, t)
    # weight radial subsamples by r so the fraction is a volume fraction
    zz = np.repeat(zs[:, :, None], n, axis=2)
    rr = np.repeat(rs[:, None, :], n, axis=1)
    inside = bodies.contains(zz, rr)
    w = rr
    return 1.0 - np.sum(inside * w, axis=(1, 2)) / np.sum(w, axis=(1, 2))


def build_grid(radius: float, length: float, dr: float, dz: float, bodies: BodySet | None = None,
               *, subsample: int = 4, min_gap_volumes: int = 6) -> AxiGrid:
    """Grid over ``[0, length] x [0, radius]`` classified against ``bodies``.

    ``dr`` and ``dz`` are adjusted so they divide ``radius`` and ``length``.
    """
    bodies = bodies or BodySet()
    nr = max(int(round(radius / dr)), 1)
    nz = max(int(round(length / dz)), 1)
    dr = radius / nr
    dz = length / nz
    if abs(nr * dr - radius) > 1e-12 * radius:
        raise GridError("dr does not divide the vessel radius")
    rmax = bodies.max_radius()
    if rmax > 0:
        gap = radius - rmax
        if gap <= 0:
            raise GridError("bodies block the whole cross-section")
        if gap / dr < min_gap_volumes - 1e-9:
            raise GridError(
                f"resolution too coarse for the gap {gap:.4g} m: need dr <= {gap / min_gap_volumes:.4g} m")

    zf = np.arange(nz + 1) * dz
    rf = np.arange(nr + 1) * dr
    zc = 0.5 * (zf[1:] + zf[:-1])
    rc = 0.5 * (rf[1:] + rf[:-1])
    Z, Rr = np.meshgrid(zc, rc, indexing="ij")
    center_fluid = ~bodies.contains(Z, Rr)

    frac = np.where(center_fluid, 1.0, 0.0)
    aperture_z = np.ones((nz + 1, nr))
    aperture_r = np.ones((nz, nr + 1))
    if bodies.train is not None or bodies.sphere is not None:
        # boxes whose corners and centre disagree are cut; the thin rim can
        # hide between sample points, so neighbours of a centre change count too
        corner_in = bodies.contains(*np.meshgrid(zf, rf, indexing="ij"))
        any_c = corner_in[:-1, :-1] | corner_in[1:, :-1] | corner_in[:-1, 1:] | corner_in[1:, 1:]
        all_c = corner_in[:-1, :-1] & corner_in[1:, :-1] & corner_in[:-1, 1:] & corner_in[1:, 1:]
        cf = center_fluid
        near = (any_c & ~all_c) | (all_c & cf) | (~any_c & ~cf)
        near[1:] |= cf[1:] != cf[:-1]
        near[:-1] |= cf[:-1] != cf[1:]
        near[:, 1:] |= cf[:, 1:] != cf[:, :-1]
        near[:, :-1] |= cf[:, :-1] != cf[:, 1:]
        idx = np.nonzero(near)
        if idx[0].size:
            f = _fractions_2d(bodies, zf[idx[0]], zf[idx[0] + 1], rf[idx[1]], rf[idx[1] + 1],
                              subsample)
            frac[idx] = f

        t = (np.arange(subsample) + 0.5) / subsample
        # axial faces: sample along r
        pts_r = rf[:-1, None] + dr * t[None, :]
        zz = np.broadcast_to(zf[:, None, None], (nz + 1, nr, subsample))
        rr = np.broadcast_to(pts_r[None, :, :], (nz + 1, nr, subsample))
        w = rr
        aperture_z = 1.0 - np.sum(bodies.contains(zz, rr) * w, axis=2) / np.sum(w, axis=2)
        pts_z = zf[:-1, None] + dz * t[None, :]
        zz = np.broadcast_to(pts_z[:, None, :], (nz, nr + 1, subsample))
        rr = np.broadcast_to(rf[None, :, None], (nz, nr + 1, subsample))
        aperture_r = 1.0 - np.mean(bodies.contains(zz, rr), axis=2)

    classification = np.full((nz, nr), CUT, dtype=np.int8)
    classification[frac >= 1.0] = FLUID
    classification[frac <= 0.0] = SOLID
    # faces between two solid volumes are closed; faces of pure-fluid volumes open
    solid = classification == SOLID
    fluid = classification == FLUID
    aperture_z[1:-1][solid[1:] & solid[:-1]] = 0.0
    aperture_z[1:-1][fluid[1:] & fluid[:-1]] = 1.0
    aperture_r[:, 1:-1][solid[:, 1:] & solid[:, :-1]] = 0.0
    aperture_r[:, 1:-1][fluid[:, 1:] & fluid[:, :-1]] = 1.0
    return AxiGrid(nz, nr, dz, dr, radius, bodies, classification, frac, aperture_z, aperture_r,
                   center_fluid)


class BandKind(enum.Enum):
    ABSORBER = "absorber"
    SOURCE = "source"


@dataclass(frozen=True)
class BandTrack:
    """Wall band sliding backward at the cell speed in the comoving frame."""

    center0: float
    length: float
    smoothing_width: float
    speed: float
    kind: BandKind = BandKind.ABSORBER
    strength: float = 1.0  # absorption velocity k (m/s) or source flux K (1/s/m^2)

    def center(self, t: float) -> float:
        return self.center0 - self.speed * t

    def rebased(self, dz: float) -> "BandTrack":
        return BandTrack(self.center0 + dz, self.length, self.smoothing_width, self.speed,
                         self.kind, self.strength)

    def support(self, t: float) -> tuple[float, float]:
        c = self.center(t)
        half = 0.5 * (self.length + self.smoothing_width)
        return c - half, c + half


def band_weight(track: BandTrack, z, t: float = 0.0):
    """Smoothed indicator of the band: 1 inside, 0 outside, cosine ramps of
    width ``w`` centred on each edge (0.5 exactly at the edge)."""
    z = np.asarray(z, dtype=float)
    x = np.abs(z - track.center(t))
    half = 0.5 * track.length
    w = track.smoothing_width
    u = np.clip((x - (half - 0.5 * w)) / w, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * u))


def band_cell_weights(track: BandTrack, z_edges, t: float = 0.0):
    """Exact cell averages of :func:`band_weight` over intervals ``[z_edges[i], z_edges[i+1]]``."""
    z_edges = np.asarray(z_edges, dtype=float)
    F = _band_antiderivative(track, z_edges, t)
    return np.diff(F) / np.diff(z_edges)


def _band_antiderivative(track, z, t):
    # integral of the weight from -inf to z
    c = track.center(t)
    half = 0.5 * track.length
    w = track.smoothing_width

    def ramp_int(x):
        # integral over [c - half - w/2, c - half - w/2 + x] of the rising ramp
        x = np.clip(x, 0.0, w)
        return 0.5 * x - 0.5 * w / np.pi * np.sin(np.pi * x / w)

    lo = c - half - 0.5 * w
    hi = c + half - 0.5 * w
    x = z - lo
    total = ramp_int(x)
    total = total + np.clip(z - (lo + w), 0.0, hi - (lo + w))
    # falling ramp mirrors the rising one
    y = z - hi
    total = total + np.clip(y, 0.0, w) - ramp_int(y)
    return total


def band_integral(track: BandTrack) -> float:
    """Integral of the weight over all z (equals the band length)."""
    lo, hi = track.support(0.0)
    return float(_band_antiderivative(track, np.array([hi + 1.0]), 0.0)[0]
                 - _band_antiderivative(track, np.array([lo - 1.0]), 0.0)[0])


def grid_for_period(radius, spacing, dr, dz):
    """Axial cell count so that one period is an integer number of volumes."""
    per = max(int(round(spacing / dz)), 1)
    return per, spacing / per


def nearest_gap_rows(grid: AxiGrid) -> int:
    rmax = grid.bodies.max_radius()
    return int(math.floor((grid.radius - rmax) / grid.dr + 1e-9))
