#!/usr/bin/env python3
"""Plugin evaluating X -> T X T^-1 (or T X^t T^-1 with --transpose).

T = I + 0.3 G with G a complex Gaussian matrix from numpy's default_rng(seed).
Usage: inner_plugin.py [seed] [--transpose]
"""
import json
import sys

import numpy as np


def conjugator(n, seed):
    rng = np.random.default_rng(seed)
    return np.eye(n) + 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def main():
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    seed = int(args[0]) if args else 7
    transpose = "--transpose" in sys.argv
    for line in sys.stdin:
        if not line.strip():
            continue
        m = json.loads(line)["matrix"]
        n = m["rows"]
        x = np.array([complex(re, im) for re, im in m["data"]]).reshape(n, n)
        t = conjugator(n, seed)
        y = t @ (x.T if transpose else x) @ np.linalg.inv(t)
        out = {"rows": n, "cols": n, "data": [[z.real, z.imag] for z in y.ravel()]}
        sys.stdout.write(json.dumps({"matrix": out}) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
