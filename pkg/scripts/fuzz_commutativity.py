#!/usr/bin/env python3
"""Search for and shrink a commutativity witness of the varying conjugator."""
import argparse

import numpy as np

from preserver_lab.predicates import fuzz
from preserver_lab.zoo import varying_conjugator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    res = fuzz(varying_conjugator(args.n, args.k), "commutativity_preserving", seed=args.seed)
    if not res.found:
        print("no witness found")
        return
    np.set_printoptions(precision=3, suppress=True)
    x, y = res.witness.inputs
    print(f"found at trial {res.trials}, shrunk in {res.shrink_steps} steps")
    print("X =\n", x.real if not x.imag.any() else x)
    print("Y =\n", y.real if not y.imag.any() else y)
    print(f"||[phi(X), phi(Y)]||_F = {res.witness.value:.3g} "
          f"(before shrinking {res.original.value:.3g})")


if __name__ == "__main__":
    main()
