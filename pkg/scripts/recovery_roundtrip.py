#!/usr/bin/env python3
"""Round-trip recovery on random conjugations; reports error quantiles and timing."""
import argparse
import time

import numpy as np

from preserver_lab.rank_sets import random_invertible
from preserver_lab.recovery import gauge_distance, recover_conjugator
from preserver_lab.zoo import inner, transpose_inner


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cond", type=float, default=100.0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    errs, residuals, flags_ok = [], [], 0
    start = time.perf_counter()
    for i in range(args.cases):
        n = int(rng.integers(3, 6))
        k = int(rng.integers(1, n))
        flag = bool(rng.integers(0, 2))
        t0 = random_invertible(n, rng, cond_max=args.cond)
        rec = recover_conjugator((transpose_inner if flag else inner)(t0, n, k), seed=i)
        flags_ok += rec.transpose_flag == flag
        errs.append(gauge_distance(rec.T, t0))
        residuals.append(rec.certification_residual)
    elapsed = time.perf_counter() - start
    q = [50, 90, 100]
    print(f"cases {args.cases}, correct flags {flags_ok}, {elapsed:.2f} s")
    print("gauge error      p50/p90/max:", " ".join(f"{v:.2e}" for v in np.percentile(errs, q)))
    print("certif residual  p50/p90/max:", " ".join(f"{v:.2e}" for v in np.percentile(residuals, q)))


if __name__ == "__main__":
    main()
