"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
(The numpy path is also what WAVELAB_NO_NUMBA=1 selects package-wide.)
"""

import time

import numpy as np

from wavelab import _kernels
from wavelab.damping import CoefficientProfile, DampingSpec
from wavelab.sim import Grid, InitialData


def _setup(n):
    grid = Grid(n)
    state = InitialData.sine().sample(grid)
    a = CoefficientProfile().sample(grid.x)
    return state.rho.copy(), state.xi.copy(), state.z.copy(), a


def bench_simulate(backend, n=1024, t_final=20.0, repeats=3):
    _kernels.set_backend(backend)
    spec = DampingSpec.polynomial(3.0)
    kind, c1, c2 = spec.kernel_params()
    best = np.inf
    for _ in range(repeats):
        rho, xi, z, a = _setup(n)
        t0 = time.perf_counter()
        _kernels.simulate_distributed(rho, xi, z, a, kind, c1, c2, 4.0,
                                      int(t_final * n), n, True, False)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_two_point(backend, n_grid=4000, repeats=3):
    _kernels.set_backend(backend)
    vals = np.geomspace(1e-4, 1e4, n_grid // 2)
    grid = np.concatenate([-vals[::-1], vals])
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.two_point_sup(grid, 1.5, 2.0)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conjugate(backend, n_b=1000, n_y=1_000_000, repeats=3):
    _kernels.set_backend(backend)
    y = np.linspace(-100.0, 100.0, n_y)
    pot = ((np.abs(y) + 1.0) ** 1.5 - 1.0) / 1.5 - np.abs(y)
    bs = np.linspace(0.0, 5.0, n_b)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.conjugate_sup_batch(bs, y, pot)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    default = _kernels.get_backend()
    rows = []
    # warm-up so jit compilation is not timed
    bench_simulate("numba", n=64, t_final=1.0, repeats=1)
    bench_two_point("numba", n_grid=64, repeats=1)
    bench_conjugate("numba", n_b=4, n_y=64, repeats=1)
    for name, fn, kwargs in [
        ("simulate n=1024 T=20 (cubic damping)", bench_simulate, {}),
        ("two_point_sup grid=4000", bench_two_point, {}),
        ("conjugate_sup_batch 1000x1e6", bench_conjugate, {}),
    ]:
        t_nb = fn("numba", **kwargs)
        t_np = fn("numpy", **kwargs)
        rows.append((name, t_nb, t_np))
    _kernels.set_backend(default)
    width = max(len(r[0]) for r in rows) + 2
    print(f"{'kernel':<{width}}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name, t_nb, t_np in rows:
        print(f"{name:<{width}}{t_nb:>9.3f}s{t_np:>9.3f}s{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
