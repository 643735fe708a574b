"""Random and exhaustive generation of closed, history-free terms."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .term import (DELTA, TAU, Action, Choice, CommMerge, CommTable, Encap,
                   Hide, Parallel, Rename, Seq, StaticPar)

ALPHABET = ("a", "b", "c")

# Operator signatures of the axiom phases.
SIGNATURES = {
    "BRPA": ("+", "."),
    "RPAP": ("+", ".", "|", "||", "&"),
    "ARCP": ("+", ".", "|", "||", "&", "delta", "encap"),
    "ARCP_RP_TAU": ("+", ".", "||", "&", "delta", "encap", "tau", "hide", "rename"),
    # The fragment whose forward steps are all reversible.
    "REVERSIBLE": ("+", ".", "|", "||", "&", "delta", "encap", "rename"),
}

_BIN = {"+": Choice, ".": Seq, "|": StaticPar, "||": Parallel, "&": CommMerge}


def standard_gamma(names=ALPHABET) -> CommTable:
    """gamma defined on every pair of distinct names, each with a fresh result."""
    return CommTable((a, b, f"g{a}{b}") for a, b in itertools.combinations(sorted(names), 2))


@dataclass
class TermGen:
    ops: tuple = SIGNATURES["RPAP"]
    alphabet: tuple = ALPHABET
    max_depth: int = 4
    leaf_prob: float = 0.3

    def term(self, rng: random.Random, depth: int = None):
        depth = self.max_depth if depth is None else depth
        if depth <= 0 or rng.random() < self.leaf_prob:
            return self.leaf(rng)
        ops = [o for o in self.ops if o in _BIN or o in ("encap", "hide", "rename")]
        op = rng.choice(ops)
        if op in _BIN:
            return _BIN[op](self.term(rng, depth - 1), self.term(rng, depth - 1))
        body = self.term(rng, depth - 1)
        if op == "rename":
            src = rng.choice(self.alphabet)
            return Rename(((src, rng.choice(self.alphabet + ("d",))),), body)
        names = self.name_set(rng)
        return (Encap if op == "encap" else Hide)(names, body)

    def leaf(self, rng: random.Random):
        pool = [Action(a) for a in self.alphabet]
        if "delta" in self.ops and rng.random() < 0.1:
            return DELTA
        if "tau" in self.ops and rng.random() < 0.15:
            return TAU
        return rng.choice(pool)

    def name_set(self, rng: random.Random) -> frozenset:
        k = rng.randint(1, len(self.alphabet) - 1)
        return frozenset(rng.sample(self.alphabet, k))


def all_terms(max_size: int, alphabet=("a", "b"), ops=("+", ".")):
    """Every term built from ``alphabet`` and binary ``ops`` with at most
    ``max_size`` nodes (atoms and operators both count)."""
    by_size = {1: [Action(a) for a in alphabet]}
    for n in range(2, max_size + 1):
        out = []
        for l in range(1, n - 1):
            r = n - 1 - l
            for x in by_size.get(l, []):
                for y in by_size.get(r, []):
                    for op in ops:
                        out.append(_BIN[op](x, y))
        by_size[n] = out
    return [t for n in sorted(by_size) for t in by_size[n]]
