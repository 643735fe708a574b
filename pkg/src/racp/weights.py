"""Exact arithmetic for termination weights.

The encapsulation weight ``2 ** weight(s)`` makes ordinary integers
impractical after one or two nestings, so weights are kept as sparse sums of
powers of two, ``sum(2 ** e for e in exps)``, with the exponents exact
Python integers. Only addition, multiplication, integer powers, ``2 ** w``
and comparison are needed.
"""

from __future__ import annotations

import heapq
from functools import total_ordering

# Exponents beyond this many bits cannot be formed from an exact integer.
MAX_EXPONENT_BITS = 1 << 16


class WeightOverflow(ArithmeticError):
    pass


def _normalize(exps) -> tuple:
    """Carry-propagate a multiset of exponents into a set of distinct ones."""
    counts: dict = {}
    for e in exps:
        counts[e] = counts.get(e, 0) + 1
    heap = list(counts)
    heapq.heapify(heap)
    out = []
    while heap:
        e = heapq.heappop(heap)
        c = counts.pop(e)
        if c & 1:
            out.append(e)
        if c > 1:
            if e + 1 not in counts:
                counts[e + 1] = 0
                heapq.heappush(heap, e + 1)
            counts[e + 1] += c >> 1
    return tuple(reversed(out))


@total_ordering
class Weight:
    __slots__ = ("exps",)

    def __init__(self, exps=()):
        self.exps = tuple(exps)

    @classmethod
    def of(cls, n) -> "Weight":
        if isinstance(n, Weight):
            return n
        n = int(n)
        if n < 0:
            raise ValueError("weights are non-negative")
        return cls(tuple(i for i in range(n.bit_length() - 1, -1, -1) if n >> i & 1))

    @classmethod
    def pow2(cls, w) -> "Weight":
        w = cls.of(w)
        if w.exps and w.exps[0] >= MAX_EXPONENT_BITS:
            raise WeightOverflow("weight exponent too large to represent exactly")
        return cls((int(w),))

    def __int__(self):
        if self.exps and self.exps[0] > MAX_EXPONENT_BITS:
            raise WeightOverflow("weight too large for an integer")
        return sum(1 << e for e in self.exps)

    def small(self):
        """The integer value if it has at most 4096 bits, else ``self``."""
        if not self.exps or self.exps[0] <= 4096:
            return int(self)
        return self

    def __add__(self, other):
        other = Weight.of(other)
        return Weight(_normalize(self.exps + other.exps))

    __radd__ = __add__

    def __mul__(self, other):
        other = Weight.of(other)
        if len(self.exps) * len(other.exps) > 200_000:
            raise WeightOverflow("weight product has too many terms")
        return Weight(_normalize([a + b for a in self.exps for b in other.exps]))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Weight.of(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Weight)):
            return self.exps == Weight.of(other).exps
        return NotImplemented

    def __lt__(self, other):
        other = Weight.of(other)
        return self.exps < other.exps  # lexicographic on descending exponents

    def __hash__(self):
        return hash(self.exps)

    def __repr__(self):
        if not self.exps or self.exps[0] <= 64:
            return str(int(self))
        lead = self.exps[0]
        return f"2^{lead}" + (f"+...({len(self.exps) - 1} terms)" if len(self.exps) > 1 else "")
