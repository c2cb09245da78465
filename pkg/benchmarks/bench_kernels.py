"""Compare the numba and plain-python paths of the hot kernels.

Run: python3 benchmarks/bench_kernels.py [--repeat N]
Both paths are imported side by side, so no environment flag is needed here.
"""
import argparse
import time

import numpy as np

from homog_eig import kernels
from homog_eig.weights import PeriodicWeight


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def shoot_case(impl, eps=1 / 64, lam=4000.0, p=2.5):
    enc = PeriodicWeight.sine().encode_1d()
    c = (2, 1.0, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(1))
    segs = np.array([0.0, 1.0])
    z = np.empty(64)
    e = np.empty(0)

    def run():
        return impl(p, lam, segs, 1 / eps, *enc, *c, 1e-10, 1.0, 10 ** 7, True, e, e, e, z)[4]
    return run


def energy_1d_case(impl, n=200_001, p=3.0):
    rng = np.random.default_rng(0)
    uf = rng.standard_normal(n)
    uf[0] = uf[-1] = 0.0
    a = np.ones(n - 1)
    return lambda: impl(uf, 1.0 / (n - 1), a, p)[0]


def energy_2d_case(impl, n=401, p=3.0):
    rng = np.random.default_rng(0)
    uf = rng.standard_normal((n, n))
    a11 = np.ones((n - 1, n - 1))
    a12 = np.full((n - 1, n - 1), 0.2)
    return lambda: impl(uf, 1.0 / (n - 1), 1.0 / (n - 1), a11, a12, a11, p)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = [("shoot (eps=1/64, lambda=4000)", shoot_case, kernels.shoot_jit, kernels.shoot_py),
             ("energy+gradient 1-D (2e5 nodes)", energy_1d_case, kernels.energy_grad_1d_jit,
              kernels.energy_grad_1d_py),
             ("energy+gradient 2-D (401^2 nodes)", energy_2d_case, kernels.energy_grad_2d_jit,
              kernels.energy_grad_2d_py)]
    print(f"{'kernel':38s} {'numba [s]':>11s} {'python [s]':>11s} {'speedup':>8s}  agree")
    for name, make, jit, py in cases:
        make(jit)()  # compile outside the timing
        tj, oj = _best(make(jit), args.repeat)
        tp, op = _best(make(py), args.repeat)
        agree = np.isclose(oj, op, rtol=1e-9, atol=0)
        print(f"{name:38s} {tj:11.4f} {tp:11.4f} {tp / tj:8.1f}  {bool(agree)}")


if __name__ == "__main__":
    main()
