"""Axiom systems of RACP as rewrite rules modulo AC of ``+``.

Rules are written as patterns in the ordinary term syntax. Pattern
variables are ``x``, ``y``, ``z`` (process terms), ``u``, ``w`` (atomic
actions; ``u[1]`` is a history of ``u`` whose key is a variable shared by
every ``[1]`` in the rule), ``H``/``I`` inside ``encap{..}``/``hide{..}``
(the set), and ``rename{f->g}`` (the renaming). ``G`` on a right-hand side
stands for ``gamma(u, w)``.

Commutativity and associativity of ``+`` (RA1, RA3) are not rewrite rules;
they are built into matching and into :func:`ac_equal`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .term import (BINARY, DELTA, TAU, Action, Choice, CommMerge, CommTable,
                   Deadlock, Encap, Hide, History, Parallel, Rename, Seq,
                   Silent, StaticPar, Term, Var, children, subterms, sum_of,
                   with_children)
from .weights import Weight, WeightOverflow

PHASES = ("BRPA", "RPAP", "ARCP", "ARCP_RP_TAU")


class PhaseError(ValueError):
    """A term uses an operator outside the phase's signature."""


class WeightError(AssertionError):
    """A rewrite step did not decrease the phase weight."""


class StepBudgetExceeded(RuntimeError):
    pass


# ------------------------------------------------------------ rule table

@dataclass(frozen=True)
class RewriteRule:
    id: str
    lhs: Term
    rhs: Term
    phases: frozenset
    cond: Optional[Callable] = None
    oriented: bool = True
    sum_rule: bool = False
    kind: str = "fr"           # equivalence used by the soundness check
    text: str = ""

    def __str__(self):
        return f"{self.id:5} {self.text}"


def _pat(text: str) -> Term:
    from .parser import parse_term
    return parse_term(text)


def _not_in(setvar):
    def cond(s):
        u = s["u"]
        names = s[setvar]
        return u not in names and (u, s.get(1)) not in names
    return cond


def _in(setvar):
    def cond(s):
        return not _not_in(setvar)(s)
    return cond


_BASE = {"BRPA", "RPAP", "ARCP", "ARCP_RP_TAU"}
_PAR = {"RPAP", "ARCP", "ARCP_RP_TAU"}
_STATIC = {"RPAP", "ARCP"}
_ARCP = {"ARCP", "ARCP_RP_TAU"}
_TAUP = {"ARCP_RP_TAU"}

_TABLE = [
    # id, lhs, rhs, phases, cond, extra
    ("RA1", "x + y", "y + x", _BASE, None, dict(oriented=False)),
    ("RA2", "x + x", "x", _BASE, None, dict(sum_rule=True)),
    ("RA3", "(x + y) + z", "x + (y + z)", _BASE, None, dict(oriented=False)),
    ("RA4", "x . (y + z)", "x . y + x . z", _BASE, None, {}),
    ("RA5", "(x . y) . z", "x . (y . z)", _BASE, None, {}),
    ("RP1", "x || y", "x | y + x & y", _PAR, None, {}),
    ("RP2", "x | x", "x", _STATIC, None, {}),
    ("RP3", "(x | y) | z", "x | (y | z)", _STATIC, None, {}),
    ("RP4", "x | (y + z)", "x | y + x | z", _STATIC, None, {}),
    ("RP5", "(x + y) | z", "x | z + y | z", _STATIC, None, {}),
    ("RP6", "x . (y | z)", "x . y | x . z", _STATIC, None, {}),
    ("RP7", "(x | y) . z", "x . z | y . z", _STATIC, None, {}),
    ("RC8", "u & w", "G", _PAR, None, {}),
    ("RC9", "u[1] & w[1]", "G[1]", _PAR, None, {}),
    ("RC10", "u & (w . y)", "G . y", _PAR, None, {}),
    ("RC11", "u[1] & (w[1] . y)", "G[1] . y", _PAR, None, {}),
    ("RC12", "(u . x) & w", "G . x", _PAR, None, {}),
    ("RC13", "(u[1] . x) & w[1]", "G[1] . x", _PAR, None, {}),
    ("RC14", "(u . x) & (w . y)", "G . (x || y)", _PAR, None, {}),
    ("RC15", "(u[1] . x) & (w[1] . y)", "G[1] . (x || y)", _PAR, None, {}),
    ("RC16", "(x + y) & z", "x & z + y & z", _PAR, None, {}),
    ("RC17", "x & (y + z)", "x & y + x & z", _PAR, None, {}),
    ("RA6", "x + delta", "x", _ARCP, None, dict(sum_rule=True)),
    ("RA7", "delta . x", "delta", _ARCP, None, {}),
    ("RA8", "x . delta", "delta", _ARCP, None, {}),
    ("RD1", "encap{H}(u)", "u", _ARCP, _not_in("H"), {}),
    ("RD2", "encap{H}(u[1])", "u[1]", _ARCP, _not_in("H"), {}),
    ("RD3", "encap{H}(u)", "delta", _ARCP, _in("H"), {}),
    ("RD4", "encap{H}(u[1])", "delta", _ARCP, _in("H"), {}),
    ("RD5", "encap{H}(delta)", "delta", _ARCP, None, {}),
    ("RD6", "encap{H}(x + y)", "encap{H}(x) + encap{H}(y)", _ARCP, None, {}),
    ("RD7", "encap{H}(x . y)", "encap{H}(x) . encap{H}(y)", _ARCP, None, {}),
    ("RD8", "encap{H}(x | y)", "encap{H}(x) | encap{H}(y)", _ARCP, None, {}),
    ("RP8", "delta | x", "delta", {"ARCP"}, None, {}),
    ("RP9", "x | delta", "delta", {"ARCP"}, None, {}),
    ("RC18", "delta & x", "delta", _ARCP, None, {}),
    ("RC19", "x & delta", "delta", _ARCP, None, {}),
    ("RB1", "x + tau", "x", _TAUP, None, dict(sum_rule=True, kind="rooted")),
    ("RB2", "tau + x", "x", _TAUP, None, dict(sum_rule=True, kind="rooted")),
    ("RB3", "tau . x", "x", _TAUP, None, dict(kind="rooted")),
    ("RB4", "x . tau", "x", _TAUP, None, dict(kind="rooted")),
    ("RTI1", "hide{I}(u)", "u", _TAUP, _not_in("I"), dict(kind="rooted")),
    ("RTI2", "hide{I}(u)", "tau", _TAUP, _in("I"), dict(kind="rooted")),
    ("RTI3", "hide{I}(u[1])", "u[1]", _TAUP, _not_in("I"), dict(kind="rooted")),
    ("RTI4", "hide{I}(u[1])", "tau", _TAUP, _in("I"), dict(kind="rooted")),
    ("RTI5", "hide{I}(delta)", "delta", _TAUP, None, dict(kind="rooted")),
    ("RTI6", "hide{I}(x + y)", "hide{I}(x) + hide{I}(y)", _TAUP, None, dict(kind="rooted")),
    ("RTI7", "hide{I}(x . y)", "hide{I}(x) . hide{I}(y)", _TAUP, None, dict(kind="rooted")),
    ("RRN1", "rename{f->g}(u)", "F", _TAUP, None, dict(kind="rooted")),
    ("RRN2", "rename{f->g}(u[1])", "F[1]", _TAUP, None, dict(kind="rooted")),
    ("RRN3", "rename{f->g}(delta)", "delta", _TAUP, None, dict(kind="rooted")),
    ("RRN4", "rename{f->g}(x + y)", "rename{f->g}(x) + rename{f->g}(y)", _TAUP, None, dict(kind="rooted")),
    ("RRN5", "rename{f->g}(x . y)", "rename{f->g}(x) . rename{f->g}(y)", _TAUP, None, dict(kind="rooted")),
]

_COND_TEXT = {"RD1": "u not in H", "RD2": "u[m] not in H", "RD3": "u in H", "RD4": "u[m] in H",
              "RTI1": "u not in I", "RTI2": "u in I", "RTI3": "u[m] not in I", "RTI4": "u[m] in I"}


def _display(text: str) -> str:
    return text.replace("[1]", "[m]").replace("G", "gamma(u,w)").replace(
        "rename{f->g}", "rename{f}").replace("F", "f(u)")


RULES = []
for _id, _l, _r, _ph, _c, _extra in _TABLE:
    _txt = f"{_display(_l)} = {_display(_r)}"
    if _id in _COND_TEXT:
        _txt += f"    if {_COND_TEXT[_id]}"
    RULES.append(RewriteRule(_id, _pat(_l), _pat(_r), frozenset(_ph), _c,
                             text=_txt, **_extra))
RULE_BY_ID = {r.id: r for r in RULES}


def rules_for(phase: str) -> list:
    if phase not in PHASES:
        raise PhaseError(f"unknown phase {phase!r}")
    return [r for r in RULES if phase in r.phases]


def rule_listing(phase: Optional[str] = None) -> str:
    rs = RULES if phase is None else rules_for(phase)
    lines = []
    for r in rs:
        tag = "" if r.oriented else "   (identification, not rewritten)"
        lines.append(f"{r}{tag}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- signature

_SIG = {
    "BRPA": (Action, History, Choice, Seq),
    "RPAP": (Action, History, Choice, Seq, StaticPar, Parallel, CommMerge),
    "ARCP": (Action, History, Choice, Seq, StaticPar, Parallel, CommMerge, Deadlock, Encap),
    "ARCP_RP_TAU": (Action, History, Choice, Seq, StaticPar, Parallel, CommMerge, Deadlock,
                    Encap, Silent, Hide, Rename),
}


def check_signature(t: Term, phase: str) -> None:
    allowed = _SIG[phase]
    for s in subterms(t):
        if not isinstance(s, allowed):
            raise PhaseError(f"{type(s).__name__} is outside the {phase} signature")


def check_histories(t: Term) -> None:
    """Histories may only sit where a rule pattern mentions one."""
    def walk(s, ok):
        if isinstance(s, History):
            if not ok:
                raise PhaseError("normalization is defined on history-free terms; "
                                 f"history {s.name}[{s.key}] is not at a rule position")
            return
        if isinstance(s, CommMerge):
            for k in (s.left, s.right):
                if isinstance(k, Seq):
                    walk(k.left, True)
                    walk(k.right, False)
                else:
                    walk(k, True)
            return
        if isinstance(s, (Encap, Hide, Rename)):
            walk(s.body, True)
            return
        for k in children(s):
            walk(k, False)
    walk(t, False)


# ----------------------------------------------------------------- weights

def _w(t: Term, phase: str) -> Weight:
    W = Weight.of
    if isinstance(t, (Action, History, Deadlock, Silent)):
        return W(2)
    if isinstance(t, Choice):
        return _w(t.left, phase) + _w(t.right, phase)
    if isinstance(t, Seq):
        a, b = _w(t.left, phase), _w(t.right, phase)
        if phase == "BRPA":
            return a * b ** 2
        return a ** 3 * b ** 3
    if isinstance(t, (StaticPar, CommMerge)):
        return _w(t.left, phase) ** 2 * _w(t.right, phase) ** 2
    if isinstance(t, Parallel):
        return 2 * (_w(t.left, phase) ** 2 * _w(t.right, phase) ** 2) + 1
    if isinstance(t, (Encap, Hide, Rename)):
        return Weight.pow2(_w(t.body, phase))
    raise PhaseError(f"{type(t).__name__} has no weight")


def weight(t: Term, phase: str, check: bool = True):
    """Termination weight of ``t`` in ``phase``; an int unless astronomically large.

    ``check=False`` skips the signature check, for contracta such as the
    deadlock an undefined communication produces in the RPAP phase.
    """
    if check:
        check_signature(t, phase)
    return _w(t, phase).small()


# --------------------------------------------------------------- AC helpers

def summands(t: Term) -> list:
    if isinstance(t, Choice):
        return summands(t.left) + summands(t.right)
    return [t]


def ac_canon(t: Term):
    """Canonical representative of ``t`` modulo associativity/commutativity of +."""
    if isinstance(t, Choice):
        parts = sorted((ac_canon(s) for s in summands(t)), key=repr)
        return ("+", tuple(parts))
    if isinstance(t, BINARY):
        return (type(t).__name__, ac_canon(t.left), ac_canon(t.right))
    if isinstance(t, (Encap, Hide)):
        return (type(t).__name__, t.names, ac_canon(t.body))
    if isinstance(t, Rename):
        return ("Rename", t.mapping, ac_canon(t.body))
    return t


def ac_equal(s: Term, t: Term) -> bool:
    return ac_canon(s) == ac_canon(t)


# ----------------------------------------------------------------- matching

_PVARS = {"x", "y", "z"}
_AVARS = {"u", "w"}


def _match(p, t, s, gamma) -> bool:
    if isinstance(p, Action):
        if p.name in _PVARS:
            if p.name in s:
                return ac_equal(s[p.name], t)
            s[p.name] = t
            return True
        if p.name in _AVARS:
            if not isinstance(t, Action):
                return False
            return s.setdefault(p.name, t.name) == t.name
        return t == p
    if isinstance(p, History):
        if not isinstance(t, History):
            return False
        if s.setdefault(p.name, t.name) != t.name:
            return False
        return s.setdefault(p.key, t.key) == t.key
    if isinstance(p, (Deadlock, Silent)):
        return t == p
    if isinstance(p, Choice):
        # Only ``y + z`` with two process variables occurs below the root
        # of a pattern; the first summand goes to the left variable.
        if not isinstance(t, Choice):
            return False
        parts = summands(t)
        return (_match(p.left, parts[0], s, gamma)
                and _match(p.right, sum_of(parts[1:]), s, gamma))
    if isinstance(p, BINARY):
        return type(t) is type(p) and _match(p.left, t.left, s, gamma) and _match(p.right, t.right, s, gamma)
    if isinstance(p, (Encap, Hide)):
        if type(t) is not type(p):
            return False
        var = next(iter(p.names))
        if s.setdefault(var, t.names) != t.names:
            return False
        return _match(p.body, t.body, s, gamma)
    if isinstance(p, Rename):
        if not isinstance(t, Rename):
            return False
        if s.setdefault("f", t.mapping) != t.mapping:
            return False
        return _match(p.body, t.body, s, gamma)
    raise TypeError(f"bad pattern {p!r}")


def _gamma_result(s, gamma: CommTable):
    c = gamma.get(s["u"], s["w"]) if gamma is not None else None
    return c  # None means gamma is undefined on the pair (yields delta)


def instantiate(p, s, gamma=None) -> Term:
    if isinstance(p, Action):
        if p.name in _PVARS:
            return s[p.name]
        if p.name in _AVARS:
            return Action(s[p.name])
        if p.name == "G":
            c = _gamma_result(s, gamma)
            return DELTA if c is None else Action(c)
        if p.name == "F":
            return Action(Rename(s["f"], DELTA).apply(s["u"]))
        return p
    if isinstance(p, History):
        if p.name == "G":
            c = _gamma_result(s, gamma)
            return DELTA if c is None else History(c, s[p.key])
        if p.name == "F":
            return History(Rename(s["f"], DELTA).apply(s["u"]), s[p.key])
        return History(s[p.name], s[p.key])
    if isinstance(p, (Deadlock, Silent)):
        return p
    if isinstance(p, BINARY):
        return type(p)(instantiate(p.left, s, gamma), instantiate(p.right, s, gamma))
    if isinstance(p, (Encap, Hide)):
        var = next(iter(p.names))
        return type(p)(s[var], instantiate(p.body, s, gamma))
    if isinstance(p, Rename):
        return Rename(s["f"], instantiate(p.body, s, gamma))
    raise TypeError(f"bad pattern {p!r}")


def _apply_rule(rule: RewriteRule, t: Term, gamma) -> Optional[Term]:
    s: dict = {}
    if not _match(rule.lhs, t, s, gamma):
        return None
    if rule.cond is not None and not rule.cond(s):
        return None
    return instantiate(rule.rhs, s, gamma)


def _apply_sum_rule(rule: RewriteRule, parts: list) -> Optional[list]:
    if rule.id == "RA2":
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                if ac_equal(parts[i], parts[j]):
                    return parts[:j] + parts[j + 1:]
        return None
    target = DELTA if rule.id == "RA6" else TAU
    if len(parts) < 2:
        return None
    idx = [i for i, p in enumerate(parts) if p == target]
    if not idx:
        return None
    if rule.id == "RB2":
        i = idx[0]
        if i == len(parts) - 1 and rule.id == "RB2" and len(idx) == 1 and i != 0:
            return None
    elif rule.id == "RB1":
        i = idx[-1]
        if i == 0 and len(idx) == 1:
            return None
    else:
        i = idx[0]
    return parts[:i] + parts[i + 1:]


# --------------------------------------------------------------- rewriting

@dataclass
class Step:
    rule: str
    before: Term          # the redex
    after: Term           # its contractum
    result: Term          # the whole term after the step


def _rewrite(t: Term, rules, gamma):
    if isinstance(t, Choice):
        parts = summands(t)
        for i, p in enumerate(parts):
            r = _rewrite(p, rules, gamma)
            if r is not None:
                new, rid, a, b = r
                return sum_of(parts[:i] + [new] + parts[i + 1:]), rid, a, b
        for rule in rules:
            if rule.sum_rule:
                out = _apply_sum_rule(rule, parts)
                if out is not None:
                    new = sum_of(out)
                    return new, rule.id, t, new
        return None
    kids = children(t)
    for i, k in enumerate(kids):
        r = _rewrite(k, rules, gamma)
        if r is not None:
            new, rid, a, b = r
            ks = list(kids)
            ks[i] = new
            return with_children(t, *ks), rid, a, b
    for rule in rules:
        if rule.sum_rule or not rule.oriented:
            continue
        out = _apply_rule(rule, t, gamma)
        if out is not None:
            return out, rule.id, t, out
    return None


def rewrite_once(t: Term, phase: str, gamma: Optional[CommTable] = None):
    """One leftmost-innermost rewrite step, or None for a normal form."""
    r = _rewrite(t, rules_for(phase), gamma)
    if r is None:
        return None
    return r[0], r[1]


def rewrite_step(t: Term, phase: str, gamma: Optional[CommTable] = None) -> Optional[Step]:
    r = _rewrite(t, rules_for(phase), gamma)
    if r is None:
        return None
    new, rid, a, b = r
    return Step(rid, a, b, new)


def redex_decreases(step: Step, phase: str) -> bool:
    """Weight comparison at the redex.

    Every weight combinator is strictly increasing in each argument, so the
    whole term's weight drops exactly when the redex weight drops. Comparing
    at the redex keeps the numbers small enough to be exact.
    """
    return _w(step.after, phase) < _w(step.before, phase)


@dataclass
class NormalizeResult:
    term: Term
    steps: list = field(default_factory=list)
    violations: list = field(default_factory=list)   # steps whose weight did not drop


def normalize(t: Term, phase: str, gamma: Optional[CommTable] = None,
              check_weight: bool = True, max_steps: int = 10_000,
              allow_histories: bool = False) -> NormalizeResult:
    """Rewrite to normal form, monitoring the phase weight.

    With ``check_weight`` a step whose weight does not strictly decrease
    raises :class:`WeightError`; otherwise such steps are collected in
    ``violations``.
    """
    check_signature(t, phase)
    if not allow_histories:
        check_histories(t)
    rules = rules_for(phase)
    res = NormalizeResult(t)
    cur = t
    for _ in range(max_steps):
        r = _rewrite(cur, rules, gamma)
        if r is None:
            res.term = cur
            return res
        new, rid, a, b = r
        step = Step(rid, a, b, new)
        res.steps.append(step)
        try:
            ok = redex_decreases(step, phase)
        except WeightOverflow:
            ok = False
        if not ok:
            res.violations.append(step)
            if check_weight:
                from .parser import render
                raise WeightError(f"{rid} did not decrease the {phase} weight: "
                                  f"{render(a)} -> {render(b)}")
        cur = new
    raise StepBudgetExceeded(f"no normal form within {max_steps} steps")


def normal_form(t: Term, phase: str, gamma=None) -> Term:
    return normalize(t, phase, gamma, check_weight=False).term


# ------------------------------------------------------------- soundness

RULE_PHASE = {}
for _r in RULES:
    for _p in PHASES:
        if _p in _r.phases:
            RULE_PHASE[_r.id] = _p
            break


@dataclass
class SoundnessReport:
    rule: str
    samples: int
    passed: int
    failures: list = field(default_factory=list)   # (lhs, rhs, witness)
    skipped: int = 0     # instances whose state space exceeded the budget

    @property
    def ok(self):
        return not self.failures and self.passed == self.samples


def _var_depths(p, d=0):
    if isinstance(p, Action) and p.name in _PVARS:
        yield p.name, d
    for k in children(p):
        yield from _var_depths(k, d + 1)


def sample_instance(rule: RewriteRule, rng: random.Random, gamma: CommTable,
                    max_depth: int = 4, alphabet=("a", "b", "c")):
    """A random closed instance (lhs, rhs) satisfying the rule's condition."""
    from .gen import SIGNATURES, TermGen
    phase = RULE_PHASE[rule.id]
    ops = SIGNATURES["ARCP_RP_TAU" if rule.kind == "rooted" else phase]
    gen = TermGen(ops=ops, alphabet=tuple(alphabet), max_depth=max_depth)
    pairs = [tuple(r[:2]) for r in gamma.rules()] or [(alphabet[0], alphabet[1])]
    uses_gamma = any(isinstance(n, (Action, History)) and n.name == "G" for n in subterms(rule.rhs))
    # Depth of the deepest occurrence of each variable, so that whole
    # instances stay within ``max_depth``.
    depths: dict = {}
    for side in (rule.lhs, rule.rhs):
        for v, d in _var_depths(side):
            depths[v] = max(depths.get(v, 0), d)
    for _ in range(200):
        s: dict = {}
        for v in sorted(_PVARS):
            s[v] = gen.term(rng, max(0, max_depth - depths.get(v, 0)))
        if uses_gamma:
            u, w = rng.choice(pairs)
            if rng.random() < 0.5:
                u, w = w, u
        else:
            u, w = rng.choice(alphabet), rng.choice(alphabet)
        s["u"], s["w"] = u, w
        s[1] = 1
        s["H"] = s["I"] = gen.name_set(rng)
        src = rng.choice(alphabet)
        s["f"] = Rename(((src, rng.choice(tuple(alphabet) + ("d",))),), DELTA).mapping
        if rule.cond is None or rule.cond(s):
            return instantiate(rule.lhs, s, gamma), instantiate(rule.rhs, s, gamma)
    raise RuntimeError(f"could not satisfy the side condition of {rule.id}")


def soundness_check(rule, samples: int = 100, gamma: Optional[CommTable] = None,
                    seed: int = 0, max_depth: int = 4, budget: int = 600) -> SoundnessReport:
    """Check ``lhs ~ rhs`` on random closed instances of ``rule``.

    Keys make every interleaving order a distinct state, so state spaces
    grow factorially with the number of concurrent actions. Instances
    whose state space exceeds ``budget`` are replaced by fresh samples and
    counted in ``skipped``.
    """
    from .gen import standard_gamma
    from .lts import BudgetExceeded, equivalent
    from .sos import engine
    if isinstance(rule, str):
        rule = RULE_BY_ID[rule]
    gamma = gamma if gamma is not None else standard_gamma()
    rng = random.Random(f"{seed}:{rule.id}")
    rep = SoundnessReport(rule.id, samples, 0)
    kind = "rooted" if rule.kind == "rooted" else "fr"
    attempts = 0
    while rep.passed + len(rep.failures) < samples and attempts < 20 * samples:
        attempts += 1
        lhs, rhs = sample_instance(rule, rng, gamma, max_depth)
        try:
            res = equivalent(lhs, rhs, kind, gamma, budget=budget)
        except BudgetExceeded:
            rep.skipped += 1
            continue
        finally:
            engine(gamma, None).clear()
        if res.equivalent:
            rep.passed += 1
        else:
            rep.failures.append((lhs, rhs, res.witness))
    return rep


def soundness_rules() -> list:
    """Every oriented or identification axiom covered by the soundness suite."""
    return list(RULES)


# ------------------------------------------------------------------ CFAR

def cfar_reduce(spec, I):
    """Cluster fair abstraction; see :func:`racp.recursion.cfar_reduce`."""
    from .recursion import cfar_reduce as _cfar
    return _cfar(spec, I)
