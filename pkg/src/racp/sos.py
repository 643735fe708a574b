"""Forward and reverse transition rules of RACP as an executable engine.

Every forward step taken from a closed term allocates the key
``fresh_key(root)``; parallel components that synchronize or communicate
share it. Reverse steps carry the key of the history they undo.

Choice and static parallelism follow the reading that a name denotes one
atomic action wherever it occurs: a branch may step alone on ``u`` only if
the sibling cannot eventually perform ``u`` itself (otherwise both branches
must take the step together). A lone step of a choice branch additionally
requires every history in the sibling to be shared with the stepping branch,
so once one branch has made progress of its own the other is frozen.

Subterms that are bound to run into deadlock (for instance ``a . delta``)
behave like ``delta``: forward steps into them are pruned and a choice
ignores them when checking side conditions. This is what makes the deadlock
axioms hold up to FR bisimulation.

Encapsulation is pushed to the leaves: inside ``encap{H}(..)`` an action or
history named in H acts like ``delta``. Names that can take part in a
communication are exempt below a parallel operator, since the communication
result is what the encapsulation is meant to let through; there the block
is applied to the component labels instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .term import (EMPTY_COMM, Action, Choice, CommMerge, CommTable, Deadlock,
                   Encap, Hide, History, Parallel, Rename, Seq, Silent,
                   StaticPar, Term, TermError, Var, action_names, fresh_key,
                   has_vars, history_free, keys, sort_key, subterms)

FWD = "fwd"
REV = "rev"


class _Terminated:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "TERMINATED"

    def __reduce__(self):
        return (_Terminated, ())


TERMINATED = _Terminated()


def _tkey(t) -> str:
    return "" if t is TERMINATED else sort_key(t)


@dataclass(frozen=True, order=True)
class Label:
    """A transition label. ``name is None`` denotes the silent step."""

    direction: str
    name: Optional[str]
    key: Optional[int] = None

    @property
    def is_tau(self) -> bool:
        return self.name is None

    @property
    def forward(self) -> bool:
        return self.direction == FWD

    def __str__(self):
        base = "tau" if self.name is None else (
            self.name if self.key is None else f"{self.name}[{self.key}]")
        return base if self.forward else f"rev {base}"

    def sort_key(self):
        return (self.direction != FWD, self.name is None, self.name or "", self.key or 0)


def Fwd(name, key=None):
    return Label(FWD, name, key)


def Rev(name, key=None):
    return Label(REV, name, key)


def Tau(direction=FWD):
    return Label(direction, None, None)


@dataclass(frozen=True)
class StepResult:
    label: Label
    target: object  # Term or TERMINATED


def _ename(e):
    return e if isinstance(e, str) else e[0]


def _summands(t) -> list:
    if isinstance(t, Choice):
        return _summands(t.left) + _summands(t.right)
    return [t]


def _rebuild(t, repl: dict, _pos=None):
    """Replace the branches of the sum ``t`` indexed in ``repl``, keeping its shape."""
    pos = [0] if _pos is None else _pos
    if isinstance(t, Choice):
        left = _rebuild(t.left, repl, pos)
        right = _rebuild(t.right, repl, pos)
        return Choice(left, right)
    i = pos[0]
    pos[0] += 1
    return repl.get(i, t)


class Semantics:
    """Rule engine bound to one communication table and set of equations."""

    def __init__(self, gamma: Optional[CommTable] = None, defs: Optional[Mapping] = None,
                 unfold_limit: int = 64):
        self.gamma = gamma if gamma is not None else EMPTY_COMM
        self.defs = dict(defs or {})
        self.unfold_limit = unfold_limit
        self._gnames = frozenset(n for r in self.gamma.rules() for n in r[:2])
        self._fwd: dict = {}
        self._dead: dict = {}
        self._alpha: dict = {}
        self._done: dict = {}
        self._names: dict = {}
        self._revc: dict = {}

    def clear(self):
        """Drop the memo tables."""
        for d in (self._fwd, self._dead, self._alpha, self._done, self._names,
                  self._revc, self._hists if hasattr(self, "_hists") else {}):
            d.clear()

    # ------------------------------------------------------------ helpers
    def _def(self, name):
        try:
            return self.defs[name]
        except KeyError:
            raise TermError(f"unresolved recursion variable <{name}>") from None

    def _comm(self, u, w):
        if u is None or w is None:
            return None
        return self.gamma.get(u, w)

    def names(self, t) -> frozenset:
        """Action names that ``t`` mentions, following variable definitions."""
        r = self._names.get(t)
        if r is None:
            out, seen, todo = set(), set(), [t]
            while todo:
                s = todo.pop()
                out |= action_names(s)
                for v in subterms(s):
                    if isinstance(v, Var) and v.name not in seen:
                        seen.add(v.name)
                        todo.append(self._def(v.name))
            r = self._names[t] = frozenset(out)
        return r

    def _par_env(self, env):
        if not env or not self._gnames:
            return env
        return frozenset(e for e in env if _ename(e) not in self._gnames)

    def _rename_env(self, t: Rename, env):
        if not env:
            return env
        out = set()
        for u in self.names(t.body) | {a for a, _ in t.mapping}:
            if t.apply(u) in env:
                out.add(u)
        for e in env:
            if isinstance(e, tuple):
                for u in self.names(t.body):
                    if t.apply(u) == e[0]:
                        out.add((u, e[1]))
        return frozenset(out)

    @staticmethod
    def _hide_env(t: Hide, env):
        if not env:
            return env
        hidden = {_ename(e) for e in t.names}
        return frozenset(e for e in env if _ename(e) not in hidden)

    @staticmethod
    def _blocked(direction, name, key, env):
        if name is None or not env:
            return False
        if name in env:
            return True
        return direction == REV and (name, key) in env

    # ------------------------------------------------------- predicates
    def done(self, t, env=frozenset(), _seen=frozenset(), silent=True) -> bool:
        """Successful forward termination, with encapsulated leaves as delta.

        ``silent`` is the value taken by an unexecuted ``tau``. Sequencing
        uses the structural reading (true); the termination predicate of the
        transition system uses false, since ``tau`` terminates only by
        performing its step.
        """
        k = (t, env, silent)
        r = self._done.get(k)
        if r is not None:
            return r
        if isinstance(t, Action):
            r = False
        elif isinstance(t, History):
            r = not self._blocked(REV, t.name, t.key, env)
        elif isinstance(t, Deadlock):
            r = False
        elif isinstance(t, Silent):
            r = silent
        elif isinstance(t, Choice):
            r = self.done(t.left, env, _seen, silent) or self.done(t.right, env, _seen, silent)
        elif isinstance(t, (Seq, StaticPar)):
            r = self.done(t.left, env, _seen, silent) and self.done(t.right, env, _seen, silent)
        elif isinstance(t, (Parallel, CommMerge)):
            e = self._par_env(env)
            r = self.done(t.left, e, _seen, silent) and self.done(t.right, e, _seen, silent)
        elif isinstance(t, Encap):
            r = self.done(t.body, env | t.names, _seen, silent)
        elif isinstance(t, Hide):
            r = self.done(t.body, self._hide_env(t, env), _seen, silent)
        elif isinstance(t, Rename):
            r = self.done(t.body, self._rename_env(t, env), _seen, silent)
        elif isinstance(t, Var):
            if t.name in _seen:
                return False
            return self.done(self._def(t.name), env, _seen | {t.name}, silent)
        else:
            raise TypeError(f"not a term: {t!r}")
        self._done[k] = r
        return r

    def terminated(self, t) -> bool:
        """The termination predicate used by the equivalence checkers."""
        return t is TERMINATED or self.done(t, silent=False)

    def dead(self, t, env=frozenset()) -> bool:
        """Whether ``t`` is blocked by deadlock and so behaves like ``delta``.

        A term is dead when every way of completing it runs into ``delta``,
        an encapsulated leaf, or a communication merge whose operands have
        no matching first actions. A term that merely gets stuck because of
        choice side conditions is not dead.
        """
        if t is TERMINATED:
            return False
        k = (t, env)
        r = self._dead.get(k)
        if r is not None:
            return r
        if isinstance(t, Action):
            r = t.name in env
        elif isinstance(t, History):
            r = self._blocked(REV, t.name, t.key, env)
        elif isinstance(t, Deadlock):
            r = True
        elif isinstance(t, (Silent, Var)):
            r = False
        elif isinstance(t, Choice):
            r = self.dead(t.left, env) and self.dead(t.right, env)
        elif isinstance(t, (Seq, StaticPar)):
            r = self.dead(t.left, env) or self.dead(t.right, env)
        elif isinstance(t, (Parallel, CommMerge)):
            e = self._par_env(env)
            r = self.dead(t.left, e) or self.dead(t.right, e)
            if not r and isinstance(t, CommMerge) and history_free(t.left) and history_free(t.right):
                m = fresh_key(t)
                r = not self._fwd_par(t, env, e, m, 0, comm=True, fresh_only=True)
        elif isinstance(t, Encap):
            r = self.dead(t.body, env | t.names)
        elif isinstance(t, Hide):
            r = self.dead(t.body, self._hide_env(t, env))
        elif isinstance(t, Rename):
            r = self.dead(t.body, self._rename_env(t, env))
        else:
            raise TypeError(f"not a term: {t!r}")
        self._dead[k] = r
        return r

    def alphabet(self, t, env=frozenset(), _seen=frozenset()) -> frozenset:
        """Visible names that unexecuted parts of ``t`` may still perform."""
        k = (t, env)
        r = self._alpha.get(k)
        if r is not None:
            return r
        if isinstance(t, Action):
            r = frozenset() if t.name in env else frozenset({t.name})
        elif isinstance(t, (History, Deadlock, Silent)):
            r = frozenset()
        elif isinstance(t, Choice):
            # Discarded branches never move again, so only active ones count.
            bs = _summands(t)
            ks = [keys(b) for b in bs]
            top = frozenset().union(*ks)
            r = frozenset()
            for b, kb in zip(bs, ks):
                if kb == top and not self.dead(b, env):
                    r |= self.alphabet(b, env, _seen)
        elif isinstance(t, (Seq, StaticPar)):
            r = self.alphabet(t.left, env, _seen) | self.alphabet(t.right, env, _seen)
        elif isinstance(t, (Parallel, CommMerge)):
            e = self._par_env(env)
            a1 = self.alphabet(t.left, e, _seen)
            a2 = self.alphabet(t.right, e, _seen)
            prod = {self.gamma.get(u, w) for u in a1 for w in a2} - {None}
            if isinstance(t, CommMerge) and history_free(t.left) and history_free(t.right):
                r = frozenset(prod)
            else:
                r = a1 | a2 | frozenset(prod)
            r = frozenset(n for n in r if n not in env)
        elif isinstance(t, Encap):
            r = self.alphabet(t.body, env | t.names, _seen) - t.names
        elif isinstance(t, Hide):
            r = self.alphabet(t.body, self._hide_env(t, env), _seen) - t.names
        elif isinstance(t, Rename):
            r = frozenset(t.apply(n) for n in self.alphabet(t.body, self._rename_env(t, env), _seen))
        elif isinstance(t, Var):
            if t.name in _seen:
                return frozenset()
            return self.alphabet(self._def(t.name), env, _seen | {t.name})
        else:
            raise TypeError(f"not a term: {t!r}")
        if not _seen:
            self._alpha[k] = r
        return r

    # ---------------------------------------------------------- forward
    def forward_steps(self, t: Term) -> list:
        m = fresh_key(t)
        out = set()
        for name, key, tgt in self._fwd_steps(t, frozenset(), m):
            lab = Fwd(name, key) if name is not None else Tau(FWD)
            out.add(StepResult(lab, tgt))
        return sorted(out, key=lambda s: (s.label.sort_key(), _tkey(s.target)))

    def _fwd_steps(self, t, env, m, depth=0) -> tuple:
        ck = (t, env, m)
        r = self._fwd.get(ck)
        if r is None:
            raw = self._fwd_raw(t, env, m, depth)
            r = tuple(s for s in raw if not self.dead(s[2], env))
            self._fwd[ck] = r
        return r

    def _fwd_raw(self, t, env, m, depth):
        if isinstance(t, Action):
            if t.name in env:
                return ()
            return ((t.name, m, History(t.name, m)),)
        if isinstance(t, (History, Deadlock)):
            return ()
        if isinstance(t, Silent):
            return ((None, None, TERMINATED),)
        if isinstance(t, Var):
            if depth > self.unfold_limit:
                raise TermError(f"unguarded recursion through <{t.name}>")
            return self._fwd_raw(self._def(t.name), env, m, depth + 1)
        if isinstance(t, Choice):
            return self._fwd_choice(t, env, m, depth)
        if isinstance(t, Seq):
            out = []
            x, y = t.left, t.right
            if history_free(y):
                for u, k, x2 in self._fwd_steps(x, env, m, depth):
                    out.append((u, k, y if x2 is TERMINATED else Seq(x2, y)))
            if self.done(x, env):
                for u, k, y2 in self._fwd_steps(y, env, m, depth):
                    out.append((u, k, x if y2 is TERMINATED else Seq(x, y2)))
            return out
        if isinstance(t, StaticPar):
            return self._fwd_par(t, env, env, m, depth, comm=False, fresh_only=False)
        if isinstance(t, Parallel):
            return self._fwd_par(t, env, self._par_env(env), m, depth, comm=True, fresh_only=False)
        if isinstance(t, CommMerge):
            fresh = history_free(t.left) and history_free(t.right)
            return self._fwd_par(t, env, self._par_env(env), m, depth, comm=True, fresh_only=fresh)
        if isinstance(t, Encap):
            out = []
            for u, k, x2 in self._fwd_steps(t.body, env | t.names, m, depth):
                if u is not None and u in t.names:
                    continue
                out.append((u, k, x2 if x2 is TERMINATED else Encap(t.names, x2)))
            return out
        if isinstance(t, Hide):
            out = []
            for u, k, x2 in self._fwd_steps(t.body, self._hide_env(t, env), m, depth):
                if u is not None and u in t.names:
                    tgt = TERMINATED if isinstance(x2, History) or x2 is TERMINATED else Hide(t.names, x2)
                    out.append((None, k, tgt))
                else:
                    out.append((u, k, x2 if x2 is TERMINATED else Hide(t.names, x2)))
            return out
        if isinstance(t, Rename):
            out = []
            for u, k, x2 in self._fwd_steps(t.body, self._rename_env(t, env), m, depth):
                v = None if u is None else t.apply(u)
                out.append((v, k, x2 if x2 is TERMINATED else Rename(t.mapping, x2)))
            return out
        raise TypeError(f"not a term: {t!r}")

    def _fwd_choice(self, t, env, m, depth):
        """Forward steps of a maximal sum, taken as a flat list of branches.

        Branches carrying every key of the sum are active; the others were
        discarded by an earlier lone step and can never move again, though
        their unexecuted actions still block. A visible step on ``(u, k)``
        moves every branch whose alphabet contains ``u``, and all of them
        must be active and able to do ``(u, k)``. Silent steps move one
        active branch alone.
        """
        bs = _summands(t)
        live = [not self.dead(b, env) for b in bs]
        ks = [keys(b) for b in bs]
        top = frozenset().union(*ks)
        active = [live[i] and ks[i] == top for i in range(len(bs))]
        steps = [self._fwd_steps(b, env, m, depth) if active[i] else () for i, b in enumerate(bs)]
        out = []
        by_label: dict = {}
        for i, st in enumerate(steps):
            for u, k, z in st:
                if u is None:
                    if z is TERMINATED:
                        out.append((None, None, TERMINATED))
                    else:
                        out.append((None, None, _rebuild(t, {i: z})))
                else:
                    by_label.setdefault((u, k), {}).setdefault(i, []).append(z)
        for (u, k), movers in by_label.items():
            if any(live[j] and j not in movers and u in self.alphabet(bs[j], env)
                   for j in range(len(bs))):
                continue
            idx = sorted(movers)
            for combo in itertools.product(*(movers[i] for i in idx)):
                if any(z is TERMINATED for z in combo):
                    continue
                out.append((u, k, _rebuild(t, dict(zip(idx, combo)))))
        return out

    def _fwd_par(self, t, env, cenv, m, depth, comm, fresh_only):
        cls = type(t)
        x, y = t.left, t.right
        sx = self._fwd_steps(x, cenv, m, depth)
        sy = self._fwd_steps(y, cenv, m, depth)
        out = []

        def mk(a, b):
            if a is TERMINATED:
                return b
            if b is TERMINATED:
                return a
            return cls(a, b)

        if not fresh_only:
            ax, ay = self.alphabet(x, cenv), self.alphabet(y, cenv)
            for u, k, x2 in sx:
                if u is not None and (u in ay or u in env):
                    continue
                out.append((u, k, mk(x2, y)))
            for u, k, y2 in sy:
                if u is not None and (u in ax or u in env):
                    continue
                out.append((u, k, mk(x, y2)))
            for u, k, x2 in sx:
                if u is None or u in env:
                    continue
                for v, k2, y2 in sy:
                    if v == u and k2 == k:
                        out.append((u, k, mk(x2, y2)))
        if comm:
            for u, k, x2 in sx:
                for v, k2, y2 in sy:
                    c = self._comm(u, v)
                    if c is None or k != k2 or c in env:
                        continue
                    out.append((c, k, mk(x2, y2)))
        return out

    # ---------------------------------------------------------- reverse
    def reverse_steps(self, t: Term) -> list:
        out = set()
        for name, key, tgt in self._rev_cached(t, frozenset()):
            lab = Rev(name, key) if name is not None else Tau(REV)
            out.add(StepResult(lab, tgt))
        return sorted(out, key=lambda s: (s.label.sort_key(), _tkey(s.target)))

    def _rev_cached(self, t, env):
        ck = (t, env)
        r = self._revc.get(ck)
        if r is None:
            r = self._revc[ck] = tuple(self._rev_raw(t, env))
        return r

    def _rev(self, t, env):
        if isinstance(t, (Action, Deadlock, Silent, Var)):
            return ()
        return self._rev_cached(t, env)

    def _rev_raw(self, t, env):
        if isinstance(t, History):
            if self._blocked(REV, t.name, t.key, env):
                return ()
            return ((t.name, t.key, Action(t.name)),)
        if isinstance(t, (Action, Deadlock, Silent, Var)):
            return ()
        if isinstance(t, Choice):
            return self._rev_joint(t, env, env, lone_ok=True, comm=False)
        if isinstance(t, Seq):
            x, y = t.left, t.right
            out = []
            for u, k, y2 in self._rev(y, env):
                out.append((u, k, x if y2 is TERMINATED else Seq(x, y2)))
            if history_free(y):
                for u, k, x2 in self._rev(x, env):
                    out.append((u, k, y if x2 is TERMINATED else Seq(x2, y)))
            return out
        if isinstance(t, StaticPar):
            return self._rev_joint(t, env, env, lone_ok=True, comm=False)
        if isinstance(t, Parallel):
            return self._rev_joint(t, env, self._par_env(env), lone_ok=True, comm=True)
        if isinstance(t, CommMerge):
            return self._rev_joint(t, env, self._par_env(env), lone_ok=True, comm=True,
                                   merge=True)
        if isinstance(t, Encap):
            out = []
            for u, k, x2 in self._rev(t.body, env | t.names):
                if self._blocked(REV, u, k, t.names):
                    continue
                out.append((u, k, x2 if x2 is TERMINATED else Encap(t.names, x2)))
            return out
        if isinstance(t, Hide):
            out = []
            for u, k, x2 in self._rev(t.body, self._hide_env(t, env)):
                if self._blocked(REV, u, k, t.names):
                    tgt = TERMINATED if isinstance(x2, Action) or x2 is TERMINATED else Hide(t.names, x2)
                    out.append((None, k, tgt))
                else:
                    out.append((u, k, x2 if x2 is TERMINATED else Hide(t.names, x2)))
            return out
        if isinstance(t, Rename):
            out = []
            for u, k, x2 in self._rev(t.body, self._rename_env(t, env)):
                v = None if u is None else t.apply(u)
                out.append((v, k, x2 if x2 is TERMINATED else Rename(t.mapping, x2)))
            return out
        raise TypeError(f"not a term: {t!r}")

    def _rev_joint(self, t, env, cenv, lone_ok, comm, merge=False):
        cls = type(t)
        x, y = t.left, t.right
        rx, ry = self._rev(x, cenv), self._rev(y, cenv)
        kx, ky = keys(x), keys(y)
        par = cls is not Choice
        out = []

        def mk(a, b):
            if par and a is TERMINATED:
                return b
            if par and b is TERMINATED:
                return a
            if a is TERMINATED or b is TERMINATED:
                return TERMINATED
            return cls(a, b)

        def fresh(z):
            return merge and isinstance(z, CommMerge) and history_free(z)

        def orphaned(z):
            # A merge always starts with a communication, so a reachable
            # merge with histories shares a key between its operands.
            if not (merge and isinstance(z, CommMerge)) or history_free(z):
                return False
            hl, hr = _histories(z.left), _histories(z.right)
            return not any(self._comm(u, w) is not None
                           for k in hl.keys() & hr.keys() for u in hl[k] for w in hr[k])

        if lone_ok:
            for u, k, x2 in rx:
                if k in ky:
                    continue
                z = mk(x2, y)
                if not fresh(z) and not orphaned(z):
                    out.append((u, k, z))
            for u, k, y2 in ry:
                if k in kx:
                    continue
                z = mk(x, y2)
                if not fresh(z) and not orphaned(z):
                    out.append((u, k, z))
        for u, k, x2 in rx:
            for v, k2, y2 in ry:
                if k != k2 or u is None or v is None:
                    continue
                z = mk(x2, y2)
                if orphaned(z):
                    continue
                if u == v:
                    if not fresh(z):
                        out.append((u, k, z))
                elif comm:
                    c = self._comm(u, v)
                    if c is not None:
                        out.append((c, k, z))
        # Children of a parallel node see a reduced block set, so the
        # encapsulation is enforced on the composed labels here.
        return [s for s in out if not self._blocked(REV, s[0], s[1], env)]


def _histories(t) -> dict:
    """Map each key to the set of action names recorded with it in ``t``."""
    out: dict = {}
    for s in subterms(t):
        if isinstance(s, History):
            out.setdefault(s.key, set()).add(s.name)
    return out


_ENGINES: dict = {}


def engine(gamma: Optional[CommTable] = None, defs: Optional[Mapping] = None) -> Semantics:
    """A cached engine per (gamma, equations) pair."""
    g = gamma if gamma is not None else EMPTY_COMM
    key = (g, tuple(sorted((defs or {}).items(), key=lambda kv: kv[0])))
    e = _ENGINES.get(key)
    if e is None:
        if len(_ENGINES) > 64:
            _ENGINES.clear()
        e = _ENGINES[key] = Semantics(g, defs)
    return e


def forward_steps(t: Term, gamma: Optional[CommTable] = None, defs=None) -> list:
    return engine(gamma, defs).forward_steps(t)


def reverse_steps(t: Term, gamma: Optional[CommTable] = None, defs=None) -> list:
    return engine(gamma, defs).reverse_steps(t)


def steps(t: Term, gamma: Optional[CommTable] = None, defs=None) -> list:
    e = engine(gamma, defs)
    return e.forward_steps(t) + e.reverse_steps(t)


def is_done(t, gamma=None, defs=None) -> bool:
    """Termination predicate used by the equivalence checkers."""
    if t is TERMINATED:
        return True
    return engine(gamma, defs).done(t)


# --------------------------------------------- forward-only (abstract) mode

def abstract_steps(t, gamma: Optional[CommTable] = None, defs=None, _depth=0) -> list:
    """Classical forward steps: prefixes are consumed and choices resolve.

    States carry no histories, so regular recursive processes yield finite
    graphs. Returns ``[(label_name_or_None, target_or_TERMINATED)]``.
    """
    g = gamma if gamma is not None else EMPTY_COMM
    defs = defs or {}
    out = _abs(t, g, defs, 0)
    return sorted(set(out), key=lambda s: (s[0] is None, s[0] or "", repr(s[1])))


def _abs(t, g, defs, depth):
    if isinstance(t, Action):
        return [(t.name, TERMINATED)]
    if isinstance(t, History):
        return []
    if isinstance(t, Deadlock):
        return []
    if isinstance(t, Silent):
        return [(None, TERMINATED)]
    if isinstance(t, Var):
        if depth > 64:
            raise TermError(f"unguarded recursion through <{t.name}>")
        try:
            body = defs[t.name]
        except KeyError:
            raise TermError(f"unresolved recursion variable <{t.name}>") from None
        return _abs(body, g, defs, depth + 1)
    if isinstance(t, Choice):
        return _abs(t.left, g, defs, depth) + _abs(t.right, g, defs, depth)
    if isinstance(t, Seq):
        return [(u, t.right if z is TERMINATED else Seq(z, t.right))
                for u, z in _abs(t.left, g, defs, depth)]
    if isinstance(t, (Parallel, StaticPar, CommMerge)):
        cls = Parallel if isinstance(t, CommMerge) else type(t)
        sx = _abs(t.left, g, defs, depth)
        sy = _abs(t.right, g, defs, depth)

        def mk(a, b):
            if a is TERMINATED:
                return b
            if b is TERMINATED:
                return a
            return cls(a, b)

        out = []
        if not isinstance(t, CommMerge):
            out += [(u, mk(z, t.right)) for u, z in sx]
            out += [(u, mk(t.left, z)) for u, z in sy]
        if not isinstance(t, StaticPar):
            for u, z in sx:
                for v, w in sy:
                    c = g.get(u, v) if u and v else None
                    if c is not None:
                        out.append((c, mk(z, w)))
        return out
    if isinstance(t, Encap):
        return [(u, z if z is TERMINATED else Encap(t.names, z))
                for u, z in _abs(t.body, g, defs, depth) if u is None or u not in t.names]
    if isinstance(t, Hide):
        return [(None if u in t.names else u, z if z is TERMINATED else Hide(t.names, z))
                for u, z in _abs(t.body, g, defs, depth)]
    if isinstance(t, Rename):
        return [(None if u is None else t.apply(u), z if z is TERMINATED else Rename(t.mapping, z))
                for u, z in _abs(t.body, g, defs, depth)]
    raise TypeError(f"not a term: {t!r}")
