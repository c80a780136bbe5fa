"""Compare the compiled and numpy/scipy radial kernels.

    python benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 5]

Prints one row per (kernel, n) with the best-of-repeat time per call for each
backend and the speedup.  An end-to-end radial scalar solve is timed last,
switching the backend through ``bikdv.kernels`` in-process.
"""
import argparse
import timeit

import numpy as np

from bikdv import _kernels_py, kernels
from bikdv.grid import make_grid

try:
    from bikdv import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _time(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_rows(n, repeat):
    rng = np.random.default_rng(0)
    g = make_grid("radial", n, 30.0, 3)
    face, outer = g._flux()
    f = rng.standard_normal(n)
    v = rng.standard_normal(n)
    d0 = rng.uniform(10, 20, n)
    d1 = rng.uniform(-2, 2, n - 1)
    d2 = rng.uniform(-2, 2, n - 2)
    number = max(10, 200000 // n)
    rows = []
    for name, call in [
        ("flux_apply", lambda m: m.flux_apply(f, face, outer)),
        ("penta_factor", lambda m: m.penta_factor(d0, d1, d2)),
        ("penta_solve", None),
        ("moments", lambda m: m.moments(f, v, g.weights)),
    ]:
        times = []
        for mod in (_kernels_py, _ckernels):
            if mod is None:
                times.append(float("nan"))
                continue
            if name == "penta_solve":
                fac = mod.penta_factor(d0, d1, d2)
                times.append(_time(lambda: mod.penta_solve(fac, f), number, repeat))
            else:
                times.append(_time(lambda: call(mod), number, repeat))
        rows.append((name, n, *times))
    return rows


def solve_rows(n, repeat):
    from bikdv.ground import solve_scalar_ground

    rows = []
    times = []
    for mod in (_kernels_py, _ckernels):
        if mod is None:
            times.append(float("nan"))
            continue
        for attr in ("flux_apply", "penta_factor", "penta_solve", "moments"):
            setattr(kernels, attr, getattr(mod, attr))
        # rebinding the module attributes reaches grid/variational, which call kernels.<name>
        times.append(_time(lambda: solve_scalar_ground(1.0, make_grid("radial", n, 30.0, 3)), 1, repeat))
    rows.append(("scalar_solve", n, *times))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<14}{'n':>7}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        for name, nn, tp, tc in kernel_rows(n, args.repeat) + solve_rows(n, max(1, args.repeat // 2)):
            print(f"{name:<14}{nn:>7}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.2f}")


if __name__ == "__main__":
    main()
