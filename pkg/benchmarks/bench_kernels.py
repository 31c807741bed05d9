"""Time the numba kernels against their numpy twins on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both implementations are called directly, so the BCLAB_DISABLE_NUMBA flag
does not matter here. Results are checked for equality before timing.
"""

import argparse
import time

import numpy as np

from bclab import kernels as K
from bclab.engine import CylinderSchedule
from bclab.index import IndexFamily
from bclab.processes import IIDFinite, MarkovChain
from bclab.rng import RngSeed
from bclab.symbolic import Cylinder


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(scale):
    coin = IIDFinite.uniform(2).source(RngSeed(1))
    markov = MarkovChain(np.array([[0.9, 0.1], [0.2, 0.8]]))
    N = int(10**6 * scale)

    key = RngSeed(2).key()
    yield ("markov_fill", f"{N} symbols",
           lambda: K.markov_fill_nb(key, markov.cum_pi, markov.cum_fwd, markov.cum_bwd, -10, N),
           lambda: K.markov_fill_np(key, markov.cum_pi, markov.cum_fwd, markov.cum_bwd, -10, N))

    fam = IndexFamily.linear(1, 2)
    sched = CylinderSchedule.fixed(Cylinder(0, [0]), ell=2)
    lo, hi, pat, base = sched.layout(N)
    qv = fam.values(np.arange(1, N + 1))
    mode, omega, w_lo, w_hi, key, cdf, p = coin
    yield ("shift_hits", f"ell=2, N={N}",
           lambda: K.shift_hits_nb(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base),
           lambda: K.shift_hits_np(mode, omega, w_lo, key, cdf, p, qv, lo, hi, pat, base))

    coefs, degs = fam.coefficient_array()
    tpat = np.zeros(41, dtype=np.int64)  # a radius-20 target the scan will not find
    cap = int(2 * 10**6 * scale)
    args = (mode, omega, w_lo, w_hi, key, cdf, p, coefs, degs, tpat, -20, -20, 20, cap)
    yield ("hitting_scan", f"ell=2, cap={cap}",
           lambda: K.hitting_scan_nb(*args), lambda: K.hitting_scan_np(*args))

    targets = IIDFinite.uniform(2).sample(-64, 64, RngSeed(3), substream=1).block(-64, 64)[None, :]
    qv1 = IndexFamily([[0, 1]]).values(np.arange(1, N + 1))
    margs = (mode, omega, w_lo, w_hi, key, cdf, p, qv1, targets, 64, 64, True)
    yield ("min_radius_scan", f"ell=1, N={N}",
           lambda: K.min_radius_scan_nb(*margs), lambda: K.min_radius_scan_np(*margs))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':<16} {'workload':<22} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for name, work, nb, np_ in cases(args.scale):
        nb()  # compile (or load from cache) outside the timing
        t_nb, a = _best(nb, args.repeat)
        t_np, b = _best(np_, args.repeat)
        if not _same(a, b):
            raise SystemExit(f"{name}: numba and numpy results differ")
        print(f"{name:<16} {work:<22} {t_nb:>9.4f} {t_np:>9.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
