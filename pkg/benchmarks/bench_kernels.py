"""Throughput of the compiled SINR kernel against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--trials 200000] [--repeat 3]

Prints one row per (configuration, backend) with the best wall time over
``--repeat`` runs, trials per second, and the speed-up of the compiled
backend. Channel draws are generated once and excluded from the timing.
"""

import argparse
import time

import numpy as np

from mimoprec import kernels
from mimoprec.channel import draw_channels
from mimoprec.sinr import LinkConfig

CASES = [
    (2, 2, "zf_min_power", "none"),
    (2, 2, "zf_max_throughput", "none"),
    (2, 2, "rzf", "none"),
    (3, 3, "wiener", "none"),
    (3, 2, "mf", "zf"),
    (2, 2, "mf", "mmse"),
    (4, 4, "wiener", "mmse"),
]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the fallback only")
    print(f"{'config':<28}{'backend':<10}{'seconds':>10}{'trials/s':>14}"
          f"{'speed-up':>10}")
    for m, n, pk, eq in CASES:
        cfg = LinkConfig(m, n, 100.0, 3.0, pk, eq)
        h = draw_channels(m, n, 0, count=args.trials)
        times = {}
        for b in backends:
            kernels.batch_sinr(h[:1000], cfg, b)  # warm-up
            times[b] = best_time(lambda: kernels.batch_sinr(h, cfg, b),
                                 args.repeat)
        a, _ = kernels.batch_sinr(h[:2000], cfg, backends[0])
        z, _ = kernels.batch_sinr(h[:2000], cfg, backends[-1])
        assert np.allclose(a, z, rtol=1e-9, atol=1e-12)
        label = f"{m}x{n} {pk}+{eq}"
        for b in backends:
            ratio = times["python"] / times[b]
            print(f"{label:<28}{b:<10}{times[b]:>10.3f}"
                  f"{args.trials / times[b]:>14,.0f}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
