import numpy as np

from capsense.transport import TransportDomain


def vortex_domain(nz=40, nr=12, dz=1e-7, dr=1e-7, amplitude=5e-16):
    """Closed quiescent box carrying a discrete-streamfunction flow (exactly divergence free)."""
    d = TransportDomain.quiescent(nz, nr, dz, dr, nr * dr, closed_ends=True)
    zi = np.arange(nz + 1) / nz
    rj = np.arange(nr + 1) / nr
    psi = amplitude * np.sin(np.pi * zi)[:, None] * np.sin(np.pi * rj)[None, :] ** 2
    psi[[0, -1], :] = 0.0
    psi[:, [0, -1]] = 0.0
    d.Fz[:] = psi[:, 1:] - psi[:, :-1]
    d.Fr[:] = -(psi[1:, :] - psi[:-1, :])
    return d
