"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall time per kernel and the speedup of the compiled
backend; also checks that both backends return the same numbers.
"""
import argparse
import timeit

import numpy as np

from cavmagic import _kernels_py
from cavmagic.angular import coupling_table
from cavmagic.atom import ZeemanDistribution, load_level_scheme, zeeman_average
from cavmagic.polariton import CavityDriveParams, polarizability

try:
    from cavmagic import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(rng):
    scheme = load_level_scheme()
    strengths = zeeman_average(coupling_table(scheme), ZeemanDistribution.uniform(2))
    params = CavityDriveParams(n_eff=3e4)
    drive = -285.0 + 0.5 * np.arange(400)
    cavity = -285.0 + 1.0 * np.arange(200)
    p = polarizability(drive - 8.0, strengths, scheme)
    pm_args = (drive, cavity, p.real, p.imag, params.kappa, params.collective_coupling, params.g ** 2)
    M = _kernels_py.photon_map(*pm_args)
    px = rng.uniform(0.0, 2.0 * np.pi, 1_000_000)
    pz = rng.uniform(0.0, 2.0 * np.pi, 1_000_000)
    return {
        "photon_map 400x200": ("photon_map", pm_args),
        "ridge_scan 400x200": ("ridge_scan", (M, drive, cavity, np.median(M, axis=0))),
        "cloud_sums 1e6 atoms": ("cloud_sums", (px, pz)),
    }


def _best(fn, args, repeat):
    number = 1
    while True:
        t = timeit.timeit(lambda: fn(*args), number=number)
        if t > 0.05 or number >= 1 << 16:
            break
        number *= 4
    times = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(times) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cases = _cases(np.random.default_rng(args.seed))
    if _compiled is None:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'kernel':<24}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}{'agree':>8}")
    for label, (name, kargs) in cases.items():
        py = getattr(_kernels_py, name)
        t_py = _best(py, kargs, args.repeat) * 1e3
        if _compiled is None:
            print(f"{label:<24}{t_py:>14.3f}{'-':>14}{'-':>10}{'-':>8}")
            continue
        cy = getattr(_compiled, name)
        t_cy = _best(cy, kargs, args.repeat) * 1e3
        a, b = py(*kargs), cy(*kargs)
        if isinstance(a, tuple):
            agree = all(np.allclose(np.asarray(u), np.asarray(v), rtol=1e-9, atol=0) for u, v in zip(a, b))
        else:
            agree = np.allclose(a, b, rtol=1e-12, atol=0)
        print(f"{label:<24}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>10.1f}{'yes' if agree else 'NO':>8}")


if __name__ == "__main__":
    main()
