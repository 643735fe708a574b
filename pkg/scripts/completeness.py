"""Compare FR bisimilarity with AC-equality of BRPA normal forms.

All transition systems are refined together as one disjoint union, so a
single partition answers every pair at once.

    python3 scripts/completeness.py --size 7
"""

import argparse
import collections
import time

from racp.axioms import ac_canon, normal_form
from racp.gen import all_terms
from racp.lts import _refine, generate
from racp.parser import render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=5, help="maximum number of nodes")
    ap.add_argument("--show", type=int, default=10, help="discrepancies to print")
    args = ap.parse_args()
    t0 = time.time()
    ts = all_terms(args.size)
    out, done, roots = [], [], []
    for t in ts:
        l = generate(t)
        off = len(out)
        roots.append(l.root + off)
        out.extend([(lab, d + off) for lab, d in o] for o in l.out)
        done.extend(l.done)
    block = _refine(out, done, branching=False)[-1]
    classes = collections.defaultdict(dict)
    nf_blocks = collections.defaultdict(set)
    for t, r in zip(ts, roots):
        nf = ac_canon(normal_form(t, "BRPA"))
        classes[block[r]].setdefault(nf, t)
        nf_blocks[nf].add(block[r])
    merged = [d for d in classes.values() if len(d) > 1]
    split = [nf for nf, bs in nf_blocks.items() if len(bs) > 1]
    print(f"{len(ts)} terms, {len(classes)} bisimulation classes, {len(nf_blocks)} normal forms, "
          f"{time.time() - t0:.1f}s")
    print(f"bisimilar terms with different normal forms: {len(merged)} classes")
    print(f"equal normal forms that are not bisimilar: {len(split)}")
    for d in merged[:args.show]:
        print("   ", "  ~  ".join(render(normal_form(t, "BRPA")) for t in d.values()))

if __name__ == "__main__":
    main()
