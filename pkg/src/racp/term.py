"""Abstract syntax of RACP process terms.

Terms are immutable, hashable values. Hashes are cached on construction
because state-space exploration hashes the same deep terms many times.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class TermError(ValueError):
    pass


class _Node:
    __slots__ = ()

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((type(self).__name__,) + self._key()))

    def __hash__(self):
        return self._h

    def _key(self) -> tuple:
        raise NotImplementedError


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not IDENT.match(name):
        raise TermError(f"bad action name {name!r}")


@dataclass(frozen=True, eq=True)
class Action(_Node):
    name: str
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_name(self.name)
        super().__post_init__()

    def _key(self):
        return (self.name,)


@dataclass(frozen=True, eq=True)
class History(_Node):
    """An executed action ``name[key]``."""

    name: str
    key: int
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_name(self.name)
        if not isinstance(self.key, int) or self.key < 1:
            raise TermError(f"history key must be a natural >= 1, got {self.key!r}")
        super().__post_init__()

    def _key(self):
        return (self.name, self.key)


@dataclass(frozen=True, eq=True)
class Deadlock(_Node):
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return ()


@dataclass(frozen=True, eq=True)
class Silent(_Node):
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return ()


@dataclass(frozen=True, eq=True)
class _Binary(_Node):
    left: "Term"
    right: "Term"
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return (self.left, self.right)


class Choice(_Binary):
    pass


class Seq(_Binary):
    pass


class Parallel(_Binary):
    """Whole parallel composition (static parallel plus communication)."""


class StaticPar(_Binary):
    pass


class CommMerge(_Binary):
    pass


# Entries of an encapsulation / abstraction set: a plain name covers the
# action and all of its histories; a (name, key) pair covers one history.
SetEntry = Union[str, tuple]


def _freeze_set(items) -> frozenset:
    out = set()
    for it in items:
        if isinstance(it, tuple):
            _check_name(it[0])
            out.add((it[0], int(it[1])))
        else:
            _check_name(it)
            out.add(it)
    return frozenset(out)


@dataclass(frozen=True, eq=True)
class Encap(_Node):
    names: frozenset
    body: "Term"
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "names", _freeze_set(self.names))
        super().__post_init__()

    def _key(self):
        return (self.names, self.body)


@dataclass(frozen=True, eq=True)
class Hide(_Node):
    names: frozenset
    body: "Term"
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "names", _freeze_set(self.names))
        super().__post_init__()

    def _key(self):
        return (self.names, self.body)


@dataclass(frozen=True, eq=True)
class Rename(_Node):
    """``rename{a->b}(body)``; mapping is stored as a sorted tuple of pairs."""

    mapping: tuple
    body: "Term"
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = self.mapping
        if isinstance(m, Mapping):
            m = m.items()
        pairs = tuple(sorted((a, b) for a, b in m if a != b))
        for a, b in pairs:
            _check_name(a)
            _check_name(b)
        object.__setattr__(self, "mapping", pairs)
        super().__post_init__()

    def _key(self):
        return (self.mapping, self.body)

    def apply(self, name: str) -> str:
        for a, b in self.mapping:
            if a == name:
                return b
        return name


@dataclass(frozen=True, eq=True)
class Var(_Node):
    """Reference ``<X>`` to a variable of the enclosing recursive specification."""

    name: str
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_name(self.name)
        super().__post_init__()

    def _key(self):
        return (self.name,)


Term = Union[Action, History, Deadlock, Silent, Choice, Seq, Parallel,
             StaticPar, CommMerge, Encap, Hide, Rename, Var]

for _cls in (Action, History, Deadlock, Silent, _Binary, Encap, Hide, Rename, Var):
    _cls.__hash__ = _Node.__hash__

DELTA = Deadlock()
TAU = Silent()
BINARY = (Choice, Seq, Parallel, StaticPar, CommMerge)
UNARY = (Encap, Hide, Rename)


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, _Binary):
            stack.append(s.right)
            stack.append(s.left)
        elif isinstance(s, UNARY):
            stack.append(s.body)


def with_children(t: Term, *kids: Term) -> Term:
    if isinstance(t, _Binary):
        return type(t)(*kids)
    if isinstance(t, Encap):
        return Encap(t.names, kids[0])
    if isinstance(t, Hide):
        return Hide(t.names, kids[0])
    if isinstance(t, Rename):
        return Rename(t.mapping, kids[0])
    return t


def children(t: Term) -> tuple:
    if isinstance(t, _Binary):
        return (t.left, t.right)
    if isinstance(t, UNARY):
        return (t.body,)
    return ()


def occurs_forward(a: str, t: Term) -> bool:
    return any(isinstance(s, Action) and s.name == a for s in subterms(t))


def occurs_reverse(a: str, m: int, t: Term) -> bool:
    return any(isinstance(s, History) and s.name == a and s.key == m for s in subterms(t))


def keys(t: Term) -> frozenset:
    """Keys of the histories in ``t`` (cached on the node)."""
    try:
        return t._keys
    except AttributeError:
        pass
    if isinstance(t, History):
        r = frozenset((t.key,))
    elif isinstance(t, _Binary):
        r = keys(t.left) | keys(t.right)
    elif isinstance(t, UNARY):
        r = keys(t.body)
    else:
        r = frozenset()
    object.__setattr__(t, "_keys", r)
    return r


def history_free(t: Term) -> bool:
    return not keys(t)


def sort_key(t: Term) -> str:
    """A deterministic total-order key for terms (cached on the node)."""
    try:
        return t._sk
    except AttributeError:
        pass
    if isinstance(t, Action):
        r = t.name
    elif isinstance(t, History):
        r = f"{t.name}[{t.key}]"
    elif isinstance(t, Deadlock):
        r = "delta"
    elif isinstance(t, Silent):
        r = "tau"
    elif isinstance(t, Var):
        r = f"<{t.name}>"
    elif isinstance(t, _Binary):
        r = f"{type(t).__name__}({sort_key(t.left)},{sort_key(t.right)})"
    elif isinstance(t, Rename):
        r = f"Rename({t.mapping},{sort_key(t.body)})"
    else:
        r = f"{type(t).__name__}({sorted(map(str, t.names))},{sort_key(t.body)})"
    object.__setattr__(t, "_sk", r)
    return r


def has_vars(t: Term) -> bool:
    return any(isinstance(s, Var) for s in subterms(t))


def fresh_key(t: Term) -> int:
    used = keys(t)
    k = 1
    while k in used:
        k += 1
    return k


def _done(t: Term, forward: bool) -> bool:
    if isinstance(t, Action):
        return not forward
    if isinstance(t, History):
        return forward
    if isinstance(t, Deadlock):
        return False
    if isinstance(t, Silent):
        return True
    if isinstance(t, Choice):
        return _done(t.left, forward) or _done(t.right, forward)
    if isinstance(t, _Binary):
        return _done(t.left, forward) and _done(t.right, forward)
    if isinstance(t, UNARY):
        return _done(t.body, forward)
    raise TermError(f"executed-ness of unexpanded recursion variable <{t.name}> is undefined")


def done_forward(t: Term) -> bool:
    """Whether ``t`` is forward executed successfully (structural reading)."""
    return _done(t, True)


def done_reverse(t: Term) -> bool:
    return _done(t, False)


def erase_histories(t: Term) -> Term:
    if isinstance(t, History):
        return Action(t.name)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, *(erase_histories(k) for k in kids))


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def action_names(t: Term) -> frozenset:
    """Every action name mentioned by an Action or History node."""
    return frozenset(s.name for s in subterms(t) if isinstance(s, (Action, History)))


def sum_of(terms) -> Term:
    """Right-nested choice of ``terms``; the empty sum is deadlock."""
    terms = list(terms)
    if not terms:
        return DELTA
    out = terms[-1]
    for s in reversed(terms[:-1]):
        out = Choice(s, out)
    return out


def seq_of(terms) -> Term:
    terms = list(terms)
    out = terms[-1]
    for s in reversed(terms[:-1]):
        out = Seq(s, out)
    return out


class CommTable:
    """The partial communication function gamma, stored symmetrically.

    ``gamma(a, a)`` is rejected: a communication needs two distinct partners.
    """

    def __init__(self, rules=()):
        self._tab: dict = {}
        for a, b, c in rules:
            self.add(a, b, c)

    def add(self, a: str, b: str, c: str) -> None:
        for n in (a, b, c):
            _check_name(n)
        if a == b:
            raise TermError(f"communication of {a} with itself is not allowed")
        k = frozenset((a, b))
        old = self._tab.get(k)
        if old is not None and old != c:
            raise TermError(f"conflicting communication for {a},{b}: {old} vs {c}")
        self._tab[k] = c

    def get(self, a: str, b: str):
        if a == b:
            return None
        return self._tab.get(frozenset((a, b)))

    def rules(self) -> list:
        return sorted(tuple(sorted(k)) + (c,) for k, c in self._tab.items())

    def results(self) -> frozenset:
        return frozenset(self._tab.values())

    def without(self, a: str, b: str) -> "CommTable":
        return CommTable(r for r in self.rules() if frozenset(r[:2]) != frozenset((a, b)))

    def __len__(self):
        return len(self._tab)

    def __eq__(self, other):
        return isinstance(other, CommTable) and self._tab == other._tab

    def __hash__(self):
        return hash(frozenset(self._tab.items()))

    def __repr__(self):
        return f"CommTable({self.rules()!r})"


EMPTY_COMM = CommTable()
