"""The f = 2 unramified construction at p = 7, r = (3, 3), certified on a ball of the tree.

Radius 1 certifies every stage locally; radius 2 also transports the
generators through the Frobenius reciprocity maps and checks them in the
running quotient.

    python scripts/run_f2_global.py --radius 2 > ledger.json
"""
import argparse
import sys
import time

from gl2modp.quotient import run_unramified
from gl2modp.weights import SerreWeight


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=7)
    ap.add_argument("--r", type=str, default="3,3")
    ap.add_argument("--radius", type=int, default=2)
    ap.add_argument("--iterations", type=int, default=1)
    args = ap.parse_args()
    seed = SerreWeight(args.p, tuple(int(x) for x in args.r.split(",")))
    t0 = time.perf_counter()
    rep = run_unramified(seed, radius=args.radius, iterations=args.iterations)
    for e in rep.entries:
        print(f"node {e['node']} stage {e['stage']} {e['J_label']}: r = {e['certified_param']} "
              f"digits {e['digits']} evidence {e['evidence']}", file=sys.stderr)
    print(f"{'PASS' if rep.passed else 'FAIL'} in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    print(rep.to_json())
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
