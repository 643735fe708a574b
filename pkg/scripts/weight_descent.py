"""Normalize random terms per phase and count weight violations and
normal forms that keep a merge or an encapsulation.

    python3 scripts/weight_descent.py --terms 1000
"""

import argparse
import collections
import random

from racp.axioms import PHASES, normalize
from racp.gen import SIGNATURES, TermGen, standard_gamma
from racp.parser import render
from racp.term import CommMerge, Encap, Parallel, subterms

FORBIDDEN = {"RPAP": (Parallel, CommMerge), "ARCP": (Parallel, CommMerge, Encap)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--terms", type=int, default=1000)
    ap.add_argument("--depth", type=int, default=4)
    args = ap.parse_args()
    gamma = standard_gamma()
    for phase in PHASES:
        gen = TermGen(SIGNATURES[phase], max_depth=args.depth)
        rng = random.Random(phase)
        rules = collections.Counter()
        terms_bad = shape_bad = 0
        example = None
        for _ in range(args.terms):
            res = normalize(gen.term(rng), phase, gamma, check_weight=False)
            rules.update(s.rule for s in res.violations)
            terms_bad += bool(res.violations)
            if phase in FORBIDDEN and any(isinstance(s, FORBIDDEN[phase]) for s in subterms(res.term)):
                shape_bad += 1
                example = example or res.term
        print(f"{phase:12} weight violations in {terms_bad}/{args.terms} terms {dict(rules)}")
        if phase in FORBIDDEN:
            print(f"{'':12} normal forms with forbidden operators: {shape_bad}"
                  + (f", e.g. {render(example)}" if example else ""))


if __name__ == "__main__":
    main()
