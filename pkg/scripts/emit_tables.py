"""Write the f=3 intermediate-weight table and the ramified f=2 weight table as CSV.

    python scripts/emit_tables.py --out results/
"""
import argparse
from pathlib import Path

from gl2modp.quotient import rows_to_csv, intermediate_rows, ramified_weight_rows
from gl2modp.weights import SerreWeight


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=11)
    ap.add_argument("--e", type=int, default=2)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    r = (args.p - 1) // 2
    intermediates = rows_to_csv(intermediate_rows(SerreWeight(args.p, (r, r, r))))
    ramified = rows_to_csv(ramified_weight_rows(SerreWeight(args.p, (r, r)), args.e))
    (args.out / "intermediates_f3.csv").write_text(intermediates)
    (args.out / f"weights_f2_e{args.e}.csv").write_text(ramified)
    print(intermediates)
    print(ramified)


if __name__ == "__main__":
    main()
