"""Pure numpy advection kernels; the compiled module mirrors these exactly."""
import numpy as np


def _vanleer(theta):
    a = np.abs(theta)
    return (theta + a) / (1.0 + a)


def advective_outflow(c, Fz, Fr, active, c_in, limiter, out):
    """Net advective outflow (per second) of every volume into ``out``.

    ``Fz`` holds volumetric fluxes on the ``nz + 1`` axial faces (face 0 is
    the inlet, face ``nz`` the outlet), ``Fr`` on the ``nr + 1`` radial faces.
    The inlet carries ``c_in`` when flow enters; the outlet carries the last
    volume's value in either direction (zero-gradient). Returns
    ``(inlet_inflow, outlet_outflow)``.
    """
    nz, nr = c.shape
    cz = np.empty((nz + 1, nr))
    pos = Fz[1:-1] > 0
    cz[1:-1] = np.where(pos, c[:-1], c[1:])
    cz[0] = np.where(Fz[0] > 0, c_in, c[0])
    cz[-1] = c[-1]
    cr = np.zeros((nz, nr + 1))
    posr = Fr[:, 1:-1] > 0
    cr[:, 1:-1] = np.where(posr, c[:, :-1], c[:, 1:])

    if limiter:
        # axial interior faces i = 1 .. nz-1: upwind U, downwind D, far upwind UU
        i = np.arange(1, nz)[:, None]
        U = np.where(pos, i - 1, i)
        D = np.where(pos, i, i - 1)
        UU = np.where(pos, i - 2, i + 1)
        ok = (UU >= 0) & (UU < nz)
        UUc = np.clip(UU, 0, nz - 1)
        j = np.arange(nr)[None, :]
        ok &= active[UUc, j] & active[U, j] & active[D, j]
        cU, cD, cUU = c[U, j], c[D, j], c[UUc, j]
        den = cD - cU
        safe = np.where(den != 0, den, 1.0)
        phi = np.where(ok & (den != 0), _vanleer((cU - cUU) / safe), 0.0)
        cz[1:-1] = cU + 0.5 * phi * den

        jj = np.arange(1, nr)[None, :]
        U = np.where(posr, jj - 1, jj)
        D = np.where(posr, jj, jj - 1)
        UU = np.where(posr, jj - 2, jj + 1)
        ok = (UU >= 0) & (UU < nr)
        UUc = np.clip(UU, 0, nr - 1)
        ii = np.arange(nz)[:, None]
        ok &= active[ii, UUc] & active[ii, U] & active[ii, D]
        cU, cD, cUU = c[ii, U], c[ii, D], c[ii, UUc]
        den = cD - cU
        safe = np.where(den != 0, den, 1.0)
        phi = np.where(ok & (den != 0), _vanleer((cU - cUU) / safe), 0.0)
        cr[:, 1:-1] = cU + 0.5 * phi * den

    fz = Fz * cz
    fr = Fr * cr
    out[...] = fz[1:] - fz[:-1] + fr[:, 1:] - fr[:, :-1]
    return float(fz[0].sum()), float(fz[-1].sum())


def max_outflow_ratio(Fz, Fr, volumes, active):
    """max over active volumes of (total outgoing flux / volume), 1/s."""
    out = (np.maximum(Fz[1:], 0) + np.maximum(-Fz[:-1], 0)
           + np.maximum(Fr[:, 1:], 0) + np.maximum(-Fr[:, :-1], 0))
    ratio = np.where(active, out / volumes, 0.0)
    return float(ratio.max())
