"""Enumerate the I(1)-invariants of ind/(T) at radius 2 in the four (e, f) regimes.

    python scripts/enumerate_invariants.py [--p 7] [--radius 2]
"""
import argparse
import json
import time
import warnings

from gl2modp.invariants import enumerate_invariants, expected_count
from gl2modp.weights import SerreWeight


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=7)
    ap.add_argument("--r", type=int, default=3, help="every digit of the seed weight")
    ap.add_argument("--radius", type=int, default=2)
    args = ap.parse_args()
    rows = []
    for e, f in [(1, 1), (2, 1), (1, 2), (2, 2)]:
        wt = SerreWeight(args.p, (args.r,) * f)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            space = enumerate_invariants(wt, e, args.radius)
        rows.append({
            "e": e, "f": f, "dimension": space.dimension,
            "closed_form": expected_count(wt, e, args.radius),
            "characters": [list(k) + [v] for k, v in space.character_multiset().items()],
            "seconds": round(time.perf_counter() - t0, 1),
        })
        print(f"e={e} f={f}: dim {space.dimension} (closed form {rows[-1]['closed_form']}) in {rows[-1]['seconds']} s",
              flush=True)
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
