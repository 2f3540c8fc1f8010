#!/usr/bin/env python3
"""Print the observed verdict pattern of every zoo map next to its expected one."""
import argparse

from preserver_lab.predicates import HYPOTHESES, Budget, full_hypothesis_report
from preserver_lab.zoo import zoo_catalog

SHORT = {"spectrum_shrinking": "spec", "char_poly_preserving": "kpoly",
         "commutativity_preserving": "comm", "injective_probe": "inj", "continuity_probe": "cont"}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--k", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    header = f"{'map':24} {'k':>2} {'seed':>4}  " + " ".join(f"{SHORT[h]:>17}" for h in HYPOTHESES)
    print(header + "   p      ok")
    bad = 0
    for k in args.k:
        for seed in range(args.seeds):
            for e in zoo_catalog(args.n, k, seed):
                rep = full_hypothesis_report(e.map, Budget(), seed)
                ok = e.matches(rep.verdicts)
                bad += not ok
                cells = " ".join(f"{rep.verdicts[h]:>17}" for h in HYPOTHESES)
                print(f"{e.name:24} {e.map.k:>2} {seed:>4}  {cells}   {str(rep.p_result.p):6} {ok}")
    print(f"\n{bad} mismatching reports")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
