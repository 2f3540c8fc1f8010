#!/usr/bin/env python3
"""Residual table of estimate_p for block embeddings over a grid of (n, k, p, m)."""
import argparse

from preserver_lab.predicates import estimate_p
from preserver_lab.zoo import block_embed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-m", type=int, default=12)
    args = ap.parse_args()

    print(f"{'n':>2} {'k':>2} {'p':>2} {'m':>3}  {'estimate':>12}  best residual  runner-up")
    for n in (2, 3):
        for k in range(1, n):
            for m in range(n, args.max_m + 1):
                for p in range(0, m // n + 1):
                    phi = block_embed(n, k, p, m, injective=False if p == 0 else None)
                    res = estimate_p(phi)
                    ranked = sorted(res.table.values())
                    runner = ranked[1] if len(ranked) > 1 else float("inf")
                    flag = "" if res.p == p else "  <-- mismatch"
                    print(f"{n:>2} {k:>2} {p:>2} {m:>3}  {str(res.p):>12}  {ranked[0]:.2e}       "
                          f"{runner:.2e}{flag}")


if __name__ == "__main__":
    main()
