"""Time the advection kernel backends on a scenario-sized field.

    python3 benchmarks/bench_kernels.py [--nz 1270] [--nr 30] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from capsense import kernels


def vortex(nz, nr, dz=1e-7, dr=1e-7, amplitude=5e-16):
    zi = np.arange(nz + 1) / nz
    rj = np.arange(nr + 1) / nr
    psi = amplitude * np.sin(np.pi * zi)[:, None] * np.sin(np.pi * rj)[None, :] ** 2
    Fz = np.ascontiguousarray(psi[:, 1:] - psi[:, :-1])
    Fr = np.ascontiguousarray(-(psi[1:, :] - psi[:-1, :]))
    return Fz, Fr


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nz", type=int, default=1270)
    ap.add_argument("--nr", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    Fz, Fr = vortex(args.nz, args.nr)
    rng = np.random.default_rng(0)
    c = rng.random((args.nz, args.nr))
    active = np.ones_like(c, dtype=bool)
    out = np.zeros_like(c)
    print(f"grid {args.nz} x {args.nr}, default backend: {kernels.BACKEND}")
    base = {}
    for name, impl in kernels.implementations().items():
        for limiter in (False, True):
            def call():
                kernels.advective_outflow(c, Fz, Fr, active, 0.0, limiter, out, impl=impl)

            call()
            t = min(timeit.repeat(call, number=args.repeat, repeat=3)) / args.repeat
            label = f"{name:7s} {'vanleer' if limiter else 'upwind '}"
            base.setdefault(limiter, t)
            speedup = f"  x{base[limiter] / t:.1f}"
            print(f"{label} {t * 1e3:8.3f} ms/call{speedup}")


if __name__ == "__main__":
    main()
