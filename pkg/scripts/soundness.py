"""Sample random closed instances of every axiom and report pass rates.

    python3 scripts/soundness.py --samples 100 RA5 RP1
"""

import argparse
import time

from racp.axioms import RULE_BY_ID, soundness_check, soundness_rules
from racp.parser import render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("rules", nargs="*", help="rule ids (default: all)")
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--examples", type=int, default=1, help="failures to print per rule")
    args = ap.parse_args()
    rules = [RULE_BY_ID[r] for r in args.rules] if args.rules else soundness_rules()
    t0 = time.time()
    for rule in rules:
        rep = soundness_check(rule, samples=args.samples, seed=args.seed)
        n = rep.passed + len(rep.failures)
        print(f"{rule.id:5} {rep.passed:4}/{n:<4} skipped {rep.skipped}")
        for lhs, rhs, wit in rep.failures[:args.examples]:
            print(f"      {render(lhs)}  vs  {render(rhs)}  ({'; '.join(wit)})")
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
