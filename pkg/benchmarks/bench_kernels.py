"""Time the numba and numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Numba compile time is excluded (one warm-up call per kernel).
"""

import argparse
import time

import numpy as np

from biochain.biometrics import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    a = rng.standard_normal((343, 9))
    b = rng.standard_normal((360, 9))
    x = rng.standard_normal((400, 4096))
    left, right = np.triu_indices(x.shape[0], k=1)

    cases = [
        ("dtw 343x360, 9 channels", lambda: _kernels.dtw_cost_numpy(a, b),
         None if not _kernels.HAVE_NUMBA else lambda: _kernels.dtw_cost_numba(a, b)),
        ("dtw banded w=30", lambda: _kernels.dtw_cost_numpy(a, b, 30),
         None if not _kernels.HAVE_NUMBA else lambda: _kernels.dtw_cost_numba(a, b, 30)),
        (f"pairwise {left.size} pairs, dim 4096", lambda: _kernels.pair_distances_numpy(x, left, right),
         None if not _kernels.HAVE_NUMBA else lambda: _kernels.pair_distances_numba(x, left, right)),
    ]
    print(f"{'kernel':<36}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, np_fn, nb_fn in cases:
        t_np = best_of(np_fn, args.repeat)
        if nb_fn is None:
            print(f"{name:<36}{t_np:>10.4f}{'n/a':>10}")
            continue
        nb_fn()  # compile
        t_nb = best_of(nb_fn, args.repeat)
        agree = np.allclose(np_fn(), nb_fn(), rtol=1e-12, atol=0)
        print(f"{name:<36}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
