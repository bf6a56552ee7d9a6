import numpy as np
import pytest

from capsense import kernels
from helpers import vortex_domain

IMPLS = kernels.implementations()


def test_backend_reported():
    assert kernels.BACKEND in IMPLS


@pytest.mark.skipif("cython" not in IMPLS, reason="compiled extension not built")
@pytest.mark.parametrize("limiter", [False, True])
def test_backends_agree(limiter, rng):
    d = vortex_domain()
    d.Fz[0, :5] = 1e-17  # open an inlet and an outlet
    d.Fz[-1, :5] = 1e-17
    d.Fr[:, 1:-1] += 0.0
    c = rng.random((d.nz, d.nr))
    d.active[3, 4] = False
    c[3, 4] = 0.0
    outs = {}
    for name, impl in IMPLS.items():
        out = np.zeros_like(c)
        res = kernels.advective_outflow(c, d.Fz, d.Fr, d.active, 0.7, limiter, out, impl=impl)
        outs[name] = (res, out)
    (r_py, o_py), (r_cy, o_cy) = outs["python"], outs["cython"]
    assert np.allclose(o_py, o_cy, rtol=1e-13, atol=1e-30)
    assert np.allclose(r_py, r_cy, rtol=1e-13)
    vols = d.volumes
    a = kernels.max_outflow_ratio(d.Fz, d.Fr, vols, d.active, impl=IMPLS["python"])
    b = kernels.max_outflow_ratio(d.Fz, d.Fr, vols, d.active, impl=IMPLS["cython"])
    assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("limiter", [False, True])
def test_closed_flow_conserves(limiter, rng):
    d = vortex_domain()
    c = rng.random((d.nz, d.nr))
    out = np.zeros_like(c)
    inflow, outflow = kernels.advective_outflow(c, d.Fz, d.Fr, d.active, 0.0, limiter, out)
    assert inflow == 0.0 and outflow == 0.0
    assert abs(out.sum()) < 1e-12 * np.abs(out).sum() + 1e-300


def test_uniform_field_has_no_net_transport():
    d = vortex_domain()
    c = np.full((d.nz, d.nr), 2.0)
    out = np.zeros_like(c)
    kernels.advective_outflow(c, d.Fz, d.Fr, d.active, 0.0, True, out)
    assert np.max(np.abs(out)) < 1e-14 * np.max(np.abs(d.Fz)) * 2
