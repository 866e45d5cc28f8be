"""Stage-by-stage local certification of the f = 3 construction at p = 7, r = (3, 3, 3).

Every stage generator s_1^k is checked to span the predicted weight inside
ind(parent)/(T) on the radius-1 ball (q = 343).  Slow: minutes per stage.

    python scripts/certify_f3.py [--stages N]
"""
import argparse
import sys
import time

from gl2modp.quotient import StagePlan, cleanup, init_state, socle_report, stage_step
from gl2modp.weights import DigitWeight, SerreWeight, weight_set


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stages", type=int, default=None)
    args = ap.parse_args()
    seed = SerreWeight(7, (3, 3, 3))
    targets = [lw.weight for lw in weight_set(seed)]
    plan = StagePlan.build(DigitWeight.from_seed(seed))
    depth = plan.depth if args.stages is None else min(args.stages, plan.depth)
    state = init_state(plan, 1, 1, targets)
    t0 = time.perf_counter()
    for k in range(1, depth + 1):
        stage_step(state, k)
        for node in plan.at_stage(k):
            rec = state.records[node.index]
            print(f"stage {k} node {node.index}: A_{node.letter}, s_1^{node.exponent} -> r = {rec.certified.r} "
                  f"{'target' if rec.in_target else 'off-target'} ({time.perf_counter() - t0:.0f} s)", flush=True)
    cleanup(state)
    kept = socle_report(state)
    print(f"{len(kept)} weights in the ledger, {sum(d['in_target'] for d in kept)} of them targets")
    return 0


if __name__ == "__main__":
    sys.exit(main())
