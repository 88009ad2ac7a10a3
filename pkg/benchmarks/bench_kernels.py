"""Time the lattice energy-density kernel on each available backend.

    python3 benchmarks/bench_kernels.py [--nx 401] [--nt 81] [--components 2] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from qenergy.kernels import available_backends, rho_lattice


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=401)
    ap.add_argument("--nt", type=int, default=81)
    ap.add_argument("--components", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.components
    coef = rng.normal(size=n) + 1j * rng.normal(size=n)
    x0, p0 = rng.uniform(-3, 3, n), rng.uniform(-2, 2, n)
    sigma = rng.uniform(0.5, 2.0, n)
    x = np.linspace(-20, 20, args.nx)
    t = np.linspace(-4, 4, args.nt)

    ref = None
    for backend in available_backends():
        call = lambda: rho_lattice(x, t, coef, x0, p0, sigma, backend=backend)
        rs, L = call()
        rho = rs * np.exp(2 * L)
        err = 0.0 if ref is None else float(np.max(np.abs(rho - ref)) / np.max(np.abs(ref)))
        ref = rho if ref is None else ref
        best = min(timeit.repeat(call, number=1, repeat=args.repeat))
        print(f"{backend:>7s}  {args.nt}x{args.nx}  N={n}  best {best * 1e3:8.3f} ms"
              f"  rel.diff vs python {err:.1e}")


if __name__ == "__main__":
    main()
