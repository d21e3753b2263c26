"""Compare the compiled and numpy Tanh fitters on batches of noisy step curves.

    python3 benchmarks/bench_tanhfit.py [--length 15] [--repeats 5]

Prints the median wall time per batch for each backend, the speed-up and the
largest curve difference between the two.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from segharmony.kernels import fit_tanh_batch_ext, fit_tanh_batch_py


def make_batch(n, length, rng):
    x = np.arange(1, length + 1) - length // 2
    a = rng.uniform(0.2, 1.0, (n, 1))
    k = rng.uniform(-3.0, 3.0, (n, 1))
    b = rng.uniform(-length / 3, length / 3, (n, 1))
    h = rng.uniform(-0.3, 0.3, (n, 1))
    f = a * np.tanh(k * (x + b)) + h + rng.normal(0.0, 0.05, (n, length))
    return np.clip((f + 1.0) / 2.0, 0.0, 1.0)


def timed(fn, seqs, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(seqs)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=15)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--sizes", default="1,16,64,256,1024")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if fit_tanh_batch_ext is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(args.seed)
    print(f"{'batch':>6} {'numpy ms':>10} {'cython ms':>10} {'speed-up':>9} {'max |diff|':>11}")
    for n in (int(s) for s in args.sizes.split(",")):
        seqs = make_batch(n, args.length, rng)
        t_py, out_py = timed(fit_tanh_batch_py, seqs, args.repeats)
        t_ext, out_ext = timed(fit_tanh_batch_ext, seqs, args.repeats)
        diff = float(np.max(np.abs(out_py[1] - out_ext[1])))
        print(f"{n:6d} {1e3 * t_py:10.2f} {1e3 * t_ext:10.2f} {t_py / t_ext:8.1f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
