"""Recursive specifications: guardedness, RDP unfolding, linearization, RSP
and cluster fair abstraction.

A specification maps variable names to right-hand sides in which ``Var``
nodes stand for the solutions ``<X_j|E>``. All equality checks go through
the forward-abstract transition system, where recursion unfolds on demand
and states carry no histories, so regular specifications stay finite.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .lts import FORWARD_ABSTRACT, CHECKERS, BisimResult, BudgetExceeded, generate
from .parser import SpecFile, render_spec
from .sos import TERMINATED, abstract_steps
from .term import (DELTA, TAU, Action, Choice, CommMerge, CommTable, Deadlock,
                   Encap, Hide, History, Parallel, Rename, Seq, Silent,
                   StaticPar, Term, TermError, Var, children, subterms, sum_of)

GUARD_BUDGET = 32


class SpecError(TermError):
    """Base class for recursion analysis failures."""


class UnguardedSpec(SpecError):
    pass


class GuardednessInconclusive(SpecError):
    """The substitution budget ran out before a verdict was reached."""


class NotLinear(SpecError):
    pass


@dataclass
class RecSpec:
    equations: dict                          # name -> Term, in definition order
    comm: CommTable = field(default_factory=CommTable)
    initial: Optional[Term] = None           # defaults to the first variable
    sets: dict = field(default_factory=dict)

    def __post_init__(self):
        self.equations = dict(self.equations)
        for x, rhs in self.equations.items():
            for s in subterms(rhs):
                if isinstance(s, Var) and s.name not in self.equations:
                    raise TermError(f"equation {x} refers to undefined variable {s.name}")
                if isinstance(s, StaticPar):
                    raise TermError("recursion through the static parallel operator is not supported")

    @classmethod
    def from_specfile(cls, sf: SpecFile) -> "RecSpec":
        return cls(dict(sf.equations), sf.comm, sf.initial, dict(sf.sets))

    def to_specfile(self) -> SpecFile:
        return SpecFile(list(self.equations.items()), self.comm, dict(self.sets), self.initial)

    def to_text(self) -> str:
        return render_spec(self.to_specfile())

    @property
    def root(self) -> Term:
        if self.initial is not None:
            return self.initial
        if not self.equations:
            raise TermError("empty specification")
        return Var(next(iter(self.equations)))

    @property
    def defs(self) -> dict:
        return self.equations

    def __len__(self):
        return len(self.equations)

    @property
    def linear(self) -> bool:
        return is_linear(self)

    @property
    def guarded(self) -> bool:
        """Action-guarded, with tau counted as a guard."""
        return _verdict(self, tau_aware=False)

    @property
    def guarded_linear(self) -> bool:
        """Linear with no infinite tau path among the variables."""
        return self.linear and _verdict(self, tau_aware=True)


def _verdict(spec, tau_aware) -> bool:
    try:
        return check_guarded(spec, tau_aware=tau_aware)
    except GuardednessInconclusive:
        return False


# ------------------------------------------------------------- linearity

def linear_summands(rhs: Term):
    """Split a linear right-hand side into ``(prefix, var_or_None)`` pairs,
    with ``prefix`` an action name or ``None`` for tau. Raises NotLinear."""
    out = []
    todo = [rhs]
    while todo:
        t = todo.pop()
        if isinstance(t, Choice):
            todo += [t.right, t.left]
        elif isinstance(t, Deadlock):
            continue
        elif isinstance(t, Action):
            out.append((t.name, None))
        elif isinstance(t, Silent):
            out.append((None, None))
        elif (isinstance(t, Seq) and isinstance(t.left, (Action, Silent))
              and isinstance(t.right, Var)):
            out.append((t.left.name if isinstance(t.left, Action) else None, t.right.name))
        else:
            raise NotLinear(f"summand {t!r} is not of the form a, tau, a.X or tau.X")
    return out


def is_linear(spec: RecSpec) -> bool:
    try:
        for rhs in spec.equations.values():
            linear_summands(rhs)
    except NotLinear:
        return False
    return True


# ----------------------------------------------------------- guardedness

def _guards(t, spec, hidden, tau_aware, seen=frozenset()) -> bool:
    """Every way for ``t`` to terminate passes a guarding action."""
    if isinstance(t, Action):
        return not (tau_aware and t.name in hidden)
    if isinstance(t, Silent):
        return not tau_aware
    if isinstance(t, (Deadlock, History)):
        return isinstance(t, Deadlock)
    if isinstance(t, Var):
        if t.name in seen:
            return False
        return _guards(spec.equations[t.name], spec, hidden, tau_aware, seen | {t.name})
    if isinstance(t, Choice):
        return (_guards(t.left, spec, hidden, tau_aware, seen)
                and _guards(t.right, spec, hidden, tau_aware, seen))
    if isinstance(t, (Seq, Parallel, StaticPar, CommMerge)):
        return (_guards(t.left, spec, hidden, tau_aware, seen)
                or _guards(t.right, spec, hidden, tau_aware, seen))
    if isinstance(t, Hide):
        return _guards(t.body, spec, hidden | t.names, tau_aware, seen)
    return _guards(t.body, spec, hidden, tau_aware, seen)


def _heads(t, spec, hidden, tau_aware) -> set:
    """Variables occurring in ``t`` outside the scope of a guarding prefix."""
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Seq):
        out = _heads(t.left, spec, hidden, tau_aware)
        if not _guards(t.left, spec, hidden, tau_aware):
            out |= _heads(t.right, spec, hidden, tau_aware)
        return out
    if isinstance(t, Hide):
        return _heads(t.body, spec, hidden | t.names, tau_aware)
    out = set()
    for c in children(t):
        out |= _heads(c, spec, hidden, tau_aware)
    return out


def check_guarded(spec: RecSpec, budget: int = GUARD_BUDGET, tau_aware: bool = True) -> bool:
    """Decide guardedness by repeated substitution of unguarded variables.

    Each round replaces the variables that still occur unguarded by their
    right-hand sides. The answer is ``True`` once none remain and ``False``
    once a variable reaches itself. If neither happens within ``budget``
    rounds, ``GuardednessInconclusive`` is raised. With ``tau_aware`` a tau
    prefix (or a hidden action) does not guard, which for linear
    specifications rules out infinite tau paths.
    """
    heads = {x: _heads(rhs, spec, frozenset(), tau_aware) for x, rhs in spec.equations.items()}
    for x in spec.equations:
        frontier, reached = set(heads[x]), set()
        for _ in range(budget):
            if not frontier:
                break
            if x in frontier:
                return False
            reached |= frontier
            frontier = set().union(*(heads[y] for y in frontier)) - reached
        else:
            if frontier:
                raise GuardednessInconclusive(
                    f"variable {x} not shown guarded within {budget} substitutions")
    return True


def require_guarded(spec: RecSpec, tau_aware: bool = True) -> None:
    if not check_guarded(spec, tau_aware=tau_aware):
        raise UnguardedSpec("specification is not guarded")


# -------------------------------------------------------------------- RDP

def rdp_unfold(x: str, spec: RecSpec) -> Term:
    """One unfolding of ``<x|E>``: its right-hand side, whose variable
    references already denote the solutions ``<X_j|E>``."""
    try:
        return spec.equations[x]
    except KeyError:
        raise TermError(f"unknown variable {x!r}") from None


# ----------------------------------------------------------- linearization

_LINEARIZABLE = (Action, Deadlock, Silent, Choice, Seq, Var)


def linearize(t: Term, spec: Optional[RecSpec] = None, gamma: Optional[CommTable] = None,
              strict: bool = True, prefix: str = "X", budget: int = 100_000) -> RecSpec:
    """A linear specification with one variable per forward state of ``t``.

    States are numbered breadth-first from ``prefix``1 (the root). With
    ``strict`` only the sequential signature is accepted; otherwise any
    term with a finite forward-abstract state space is linearized, which is
    how the case study derives its specification.
    """
    if strict:
        for s in subterms(t):
            if not isinstance(s, _LINEARIZABLE):
                raise TermError(f"operator {type(s).__name__} must be normalized away first")
    defs = spec.equations if spec is not None else {}
    g = gamma if gamma is not None else (spec.comm if spec is not None else None)
    index = {t: 0}
    order = [t]
    queue = deque([t])
    rows = []
    while queue:
        s = queue.popleft()
        row = []
        for name, tgt in abstract_steps(s, g, defs):
            if tgt is not TERMINATED and tgt not in index:
                if len(order) >= budget:
                    raise BudgetExceeded(f"state budget of {budget} exceeded")
                index[tgt] = len(order)
                order.append(tgt)
                queue.append(tgt)
            row.append((name, tgt))
        rows.append(row)
    names = [f"{prefix}{i + 1}" for i in range(len(order))]
    eqs = {}
    for i, row in enumerate(rows):
        summands = []
        for name, tgt in row:
            head = TAU if name is None else Action(name)
            summands.append(head if tgt is TERMINATED else Seq(head, Var(names[index[tgt]])))
        eqs[names[i]] = sum_of(summands) if summands else DELTA
    return RecSpec(eqs, g if g is not None else CommTable())


# -------------------------------------------------------------------- RSP

def _has_tau(l) -> bool:
    return any(lab.is_tau for _, lab, _ in l.transitions)


def rsp_equal(spec1: RecSpec, spec2: RecSpec, mode: str = FORWARD_ABSTRACT,
              kind: Optional[str] = None, depth: Optional[int] = None,
              budget: int = 100_000, check: bool = True) -> BisimResult:
    """Equality of the root solutions of two guarded specifications.

    Guarded specifications have unique solutions, so equality of the
    solutions is equivalence of their transition systems. ``kind`` defaults
    to strong bisimilarity for tau-free systems and rooted branching
    bisimilarity otherwise.
    """
    if check:
        for s in (spec1, spec2):
            require_guarded(s, tau_aware=False)
    l1 = generate(spec1.root, spec1.comm, spec1.equations, mode, depth, budget)
    l2 = generate(spec2.root, spec2.comm, spec2.equations, mode, depth, budget)
    if kind is None:
        kind = "rooted" if _has_tau(l1) or _has_tau(l2) else "fr"
    return CHECKERS[kind](l1, l2)


# ------------------------------------------------------------------- CFAR

def clusters(spec: RecSpec, hidden) -> list:
    """Clusters for ``hidden``: strongly connected sets of variables linked by
    summands whose prefix is tau or in ``hidden``, and which contain at
    least one such internal link. Sorted lists of names, in definition order."""
    hidden = frozenset(hidden)
    g = nx.DiGraph()
    g.add_nodes_from(spec.equations)
    for x, rhs in spec.equations.items():
        for u, y in linear_summands(rhs):
            if y is not None and (u is None or u in hidden):
                g.add_edge(x, y)
    pos = {x: i for i, x in enumerate(spec.equations)}
    out = []
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1 or any(g.has_edge(x, x) for x in comp):
            out.append(sorted(comp, key=pos.get))
    return sorted(out, key=lambda c: pos[c[0]])


def exits(spec: RecSpec, cluster, hidden) -> list:
    """Exit summands of ``cluster``: constants, and prefixed variables that
    either leave the cluster or carry a visible prefix."""
    hidden, members = frozenset(hidden), set(cluster)
    out = []
    for x in cluster:
        for u, y in linear_summands(spec.equations[x]):
            head = TAU if u is None else Action(u)
            if y is None:
                term = head
            elif (u is not None and u not in hidden) or y not in members:
                term = Seq(head, Var(y))
            else:
                continue
            if term not in out:
                out.append(term)
    return out


def cfar_reduce(spec: RecSpec, hidden) -> RecSpec:
    """Replace the equation of every clustered variable by tau followed by
    the sum of its cluster's exits.

    Under ``hide{hidden}`` the result has the same root solution up to
    rooted branching bisimilarity, which is what cluster fair abstraction
    asserts. Requires a linear specification guarded in the action sense.
    """
    if not is_linear(spec):
        raise NotLinear("cluster fair abstraction needs a linear specification")
    require_guarded(spec, tau_aware=False)
    eqs = dict(spec.equations)
    for c in clusters(spec, hidden):
        ex = exits(spec, c, hidden)
        body = sum_of(ex) if ex else DELTA
        for x in c:
            eqs[x] = Seq(TAU, body)
    return RecSpec(eqs, spec.comm, spec.initial, dict(spec.sets))


# ------------------------------------------------------ structural matching

def _summand_graph(spec: RecSpec, root: str):
    g = nx.DiGraph()
    for x, rhs in spec.equations.items():
        consts = sorted(u or "tau" for u, y in linear_summands(rhs) if y is None)
        g.add_node(x, consts=tuple(consts), root=(x == root))
    for x, rhs in spec.equations.items():
        for u, y in linear_summands(rhs):
            if y is not None:
                if not g.has_edge(x, y):
                    g.add_edge(x, y, labels=set())
                g[x][y]["labels"].add(u or "tau")
    return g


def match_up_to_renaming(spec1: RecSpec, spec2: RecSpec) -> Optional[dict]:
    """A variable bijection turning the linear ``spec1`` into ``spec2``
    (summands compared as sets, roots mapped to each other), or ``None``."""
    r1, r2 = spec1.root, spec2.root
    if not (isinstance(r1, Var) and isinstance(r2, Var)):
        raise TermError("matching needs specifications rooted in a variable")
    g1, g2 = _summand_graph(spec1, r1.name), _summand_graph(spec2, r2.name)
    gm = nx.algorithms.isomorphism.DiGraphMatcher(
        g1, g2,
        node_match=lambda a, b: a["consts"] == b["consts"] and a["root"] == b["root"],
        edge_match=lambda a, b: a["labels"] == b["labels"])
    for m in gm.isomorphisms_iter():
        return dict(m)
    return None
