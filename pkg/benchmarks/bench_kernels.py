"""Benchmark the numba kernels against their pure-numpy twins.

Runs each of the four hot kernels on a representative workload and
prints wall-clock medians plus the speedup.  Both backends are imported
directly, so the MGG_BACKEND flag is irrelevant here.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]
"""

import argparse
import time

import numpy as np

from mgglab.kernels import nb, pure


def _timeit(fn, repeat):
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def workloads(scale, rng):
    n = int(4000 * scale)
    pts = rng.uniform(0.0, 20.0, size=(n, 2))

    m = int(20000 * scale)
    t = 100
    starts = rng.uniform(-30.0, 30.0, size=(m, 2))
    disp = rng.standard_normal((m, t - 1, 2))
    traj = np.zeros((t, 2))
    killr = 0.5641895835477563 + 6.0 * np.sqrt(np.arange(t - 1, -1, -1.0))

    path = np.vstack([np.zeros((1, 2)),
                      np.cumsum(rng.standard_normal((49, 2)), axis=0)])
    probes = rng.uniform(path.min() - 1, path.max() + 1,
                         size=(int(200000 * scale), 2))

    r = 0.5641895835477563
    return [
        ("component_labels", (pts, r, 20.0, True)),
        ("first_hit", (starts, disp, traj, r, killr)),
        ("hit_counts", (starts, disp, traj, r)),
        ("sausage_hits", (path, probes, r)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply workload sizes by this factor")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = workloads(args.scale, rng)

    print(f"{'kernel':<18} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for name, arrs in cases:
        arrs = tuple(np.ascontiguousarray(a) if isinstance(a, np.ndarray)
                     else a for a in arrs)
        f_nb = getattr(nb, name)
        f_np = getattr(pure, name)
        f_nb(*arrs)  # trigger jit compilation outside the timer
        t_np = _timeit(lambda: f_np(*arrs), args.repeat)
        t_nb = _timeit(lambda: f_nb(*arrs), args.repeat)
        print(f"{name:<18} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
