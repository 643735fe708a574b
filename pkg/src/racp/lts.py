"""Transition-system generation and FR bisimulation checkers.

All three equivalences are decided by signature-based partition refinement
on the disjoint union of the two systems. Forward and reverse transitions
are just labels in an enlarged alphabet; the branching variants close over
inert silent steps, taking forward silent steps before forward labels and
reverse silent steps before reverse labels.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .sos import FWD, REV, TERMINATED, Label, Tau, abstract_steps, engine
from .term import CommTable, Term, Var, children, erase_histories, history_free, with_children

FULL_FR = "full"
FORWARD_ABSTRACT = "abstract"


class BudgetExceeded(RuntimeError):
    pass


class ModeMismatch(ValueError):
    pass


@dataclass
class Lts:
    states: list                     # index -> Term or TERMINATED
    root: int
    transitions: list                # (src, Label, dst), sorted
    mode: str = FULL_FR
    depth_bound: Optional[int] = None
    done: list = field(default_factory=list)   # index -> termination predicate
    truncated: bool = False

    def __post_init__(self):
        self._out = None

    @property
    def out(self) -> list:
        if self._out is None:
            out = [[] for _ in self.states]
            for s, lab, d in self.transitions:
                out[s].append((lab, d))
            self._out = out
        return self._out

    def __len__(self):
        return len(self.states)

    def labels(self) -> set:
        return {lab for _, lab, _ in self.transitions}


def _state_text(s) -> str:
    from .parser import render
    return "TERMINATED" if s is TERMINATED else render(s)


def _folder(defs):
    """Fold history-free subterms equal to a right-hand side back into the
    variable. By RDP both denote the same process, so this only merges
    states that unfolding would otherwise duplicate."""
    if not defs:
        return lambda t: t
    index = {}
    for name, rhs in defs.items():
        index.setdefault(rhs, Var(name))
    memo = {}

    def fold(t):
        if t is TERMINATED:
            return t
        r = memo.get(t)
        if r is None:
            kids = children(t)
            r = with_children(t, *map(fold, kids)) if kids else t
            if history_free(r):
                r = index.get(r, r)
            memo[t] = r
        return r
    return fold


def generate(t: Term, gamma: Optional[CommTable] = None, defs=None, mode: str = FULL_FR,
             depth: Optional[int] = None, budget: int = 100_000) -> Lts:
    """Breadth-first closure of the forward and reverse step relations."""
    if mode == FORWARD_ABSTRACT:
        return _generate_abstract(t, gamma, defs, depth, budget)
    if mode != FULL_FR:
        raise ValueError(f"unknown mode {mode!r}")
    eng = engine(gamma, defs)
    fold = _folder(defs)
    t = fold(t)
    index = {t: 0}
    states = [t]
    dist = [0]
    trans = set()
    queue = deque([0])
    truncated = False
    while queue:
        i = queue.popleft()
        s = states[i]
        if s is TERMINATED:
            continue
        if depth is not None and dist[i] >= depth:
            truncated = True
            continue
        for st in eng.forward_steps(s) + eng.reverse_steps(s):
            tgt = fold(st.target)
            j = index.get(tgt)
            if j is None:
                if len(states) >= budget:
                    raise BudgetExceeded(f"state budget of {budget} exceeded")
                j = index[tgt] = len(states)
                states.append(tgt)
                dist.append(dist[i] + 1)
                queue.append(j)
            trans.add((i, st.label, j))
    done = [eng.terminated(s) for s in states]
    return Lts(states, 0, sorted(trans, key=lambda e: (e[0], e[1].sort_key(), e[2])),
               FULL_FR, depth, done, truncated)


def _generate_abstract(t, gamma, defs, depth, budget) -> Lts:
    fold = _folder(defs)
    root = fold(erase_histories(t))
    index = {root: 0}
    states = [root]
    dist = [0]
    trans = set()
    queue = deque([0])
    truncated = False
    while queue:
        i = queue.popleft()
        s = states[i]
        if s is TERMINATED:
            continue
        if depth is not None and dist[i] >= depth:
            truncated = True
            continue
        for name, tgt in abstract_steps(s, gamma, defs):
            tgt = fold(tgt)
            j = index.get(tgt)
            if j is None:
                if len(states) >= budget:
                    raise BudgetExceeded(f"state budget of {budget} exceeded")
                j = index[tgt] = len(states)
                states.append(tgt)
                dist.append(dist[i] + 1)
                queue.append(j)
            if name is None:
                trans.add((i, Tau(FWD), j))
                trans.add((j, Tau(REV), i))
            else:
                trans.add((i, Label(FWD, name), j))
                trans.add((j, Label(REV, name), i))
    done = [s is TERMINATED for s in states]
    return Lts(states, 0, sorted(trans, key=lambda e: (e[0], e[1].sort_key(), e[2])),
               FORWARD_ABSTRACT, depth, done, truncated)


# ------------------------------------------------------------ equivalence

@dataclass
class BisimResult:
    equivalent: bool
    partition: list                  # block id per state of the disjoint union
    offset: int                      # index of l2's states inside the union
    witness: list = field(default_factory=list)

    def __bool__(self):
        return self.equivalent


def _union(l1: Lts, l2: Lts):
    if l1.mode != l2.mode:
        raise ModeMismatch(f"cannot compare {l1.mode} with {l2.mode} transition systems")
    off = len(l1.states)
    out = [list(o) for o in l1.out] + [[(lab, d + off) for lab, d in o] for o in l2.out]
    done = list(l1.done) + list(l2.done)
    return out, done, off


def _refine(out, done, branching: bool):
    """Return the list of partitions, one per refinement round."""
    n = len(out)
    block = [0] * n
    rounds = [block]
    while True:
        if branching:
            sigs = _branching_sigs(out, done, block)
        else:
            sigs = [(done[s], frozenset((lab, block[d]) for lab, d in out[s])) for s in range(n)]
        ids: dict = {}
        new = []
        for s in range(n):
            new.append(ids.setdefault((block[s], sigs[s]), len(ids)))
        if len(ids) == len(set(block)):
            return rounds
        block = new
        rounds.append(block)


def _branching_sigs(out, done, block):
    n = len(out)
    sigs = []
    for s in range(n):
        sig = set()
        pred = False
        for direction in (FWD, REV):
            tau = Tau(direction)
            seen = {s}
            stack = [s]
            while stack:
                u = stack.pop()
                if direction == FWD and done[u]:
                    pred = True
                for lab, d in out[u]:
                    if lab.direction != direction:
                        continue
                    if lab == tau and block[d] == block[s]:
                        if d not in seen:
                            seen.add(d)
                            stack.append(d)
                        continue
                    sig.add((lab, block[d]))
        sigs.append((pred, frozenset(sig)))
    return sigs


def _witness(out, done, rounds, p, q, limit=20):
    """Label sequence leading from the pair (p, q) to an observable difference."""
    trail = []
    while len(trail) < limit:
        r = next((i for i, b in enumerate(rounds) if b[p] != b[q]), None)
        if r is None:
            break
        if done[p] != done[q]:
            trail.append(f"termination differs: left {done[p]}, right {done[q]}")
            break
        prev = rounds[r - 1]
        found = False
        for a, b, flip in ((p, q, False), (q, p, True)):
            sb = {(lab, prev[d]) for lab, d in out[b]}
            for lab, d in sorted(out[a], key=lambda e: (e[0].sort_key(), e[1])):
                if (lab, prev[d]) not in sb:
                    side = "right" if flip else "left"
                    trail.append(f"{side}: {lab}")
                    match = [d2 for lab2, d2 in out[b] if lab2 == lab]
                    if not match:
                        trail.append(f"{'left' if flip else 'right'} cannot do {lab}")
                        return trail
                    p, q = (match[0], d) if flip else (d, match[0])
                    found = True
                    break
            if found:
                break
        if not found:
            break
    return trail


def _check(l1, l2, branching):
    out, done, off = _union(l1, l2)
    rounds = _refine(out, done, branching)
    final = rounds[-1]
    eq = final[l1.root] == final[l2.root + off]
    wit = [] if eq or branching else _witness(out, done, rounds, l1.root, l2.root + off)
    if not eq and branching:
        wit = _branching_witness(out, done, final, l1.root, l2.root + off)
    return BisimResult(eq, final, off, wit), out, done, final


def _branching_witness(out, done, block, p, q):
    if done[p] != done[q]:
        return [f"termination differs: left {done[p]}, right {done[q]}"]
    sp = {(lab, block[d]) for lab, d in out[p]}
    sq = {(lab, block[d]) for lab, d in out[q]}
    for lab, b in sorted(sp - sq, key=lambda e: (e[0].sort_key(), e[1])):
        return [f"left: {lab}", "right has no matching step into an equivalent state"]
    for lab, b in sorted(sq - sp, key=lambda e: (e[0].sort_key(), e[1])):
        return [f"right: {lab}", "left has no matching step into an equivalent state"]
    return ["inert silent steps lead to inequivalent states"]


def fr_bisimilar(l1: Lts, l2: Lts) -> BisimResult:
    """Strong FR bisimilarity of the two roots."""
    return _check(l1, l2, branching=False)[0]


def branching_fr_bisimilar(l1: Lts, l2: Lts) -> BisimResult:
    return _check(l1, l2, branching=True)[0]


def rooted_branching_fr_bisimilar(l1: Lts, l2: Lts) -> BisimResult:
    """Branching FR bisimilarity plus an exact match of the initial steps."""
    res, out, done, block = _check(l1, l2, branching=True)
    p, q = l1.root, l2.root + res.offset
    if done[p] != done[q]:
        return BisimResult(False, block, res.offset,
                           [f"termination differs: left {done[p]}, right {done[q]}"])
    sp = {(lab, block[d]) for lab, d in out[p]}
    sq = {(lab, block[d]) for lab, d in out[q]}
    if sp != sq:
        diff = sorted(sp ^ sq, key=lambda e: (e[0].sort_key(), e[1]))
        lab, _ = diff[0]
        side = "left" if diff[0] in sp else "right"
        return BisimResult(False, block, res.offset,
                           [f"{side}: initial {lab}", "not matched by an initial step of the other side"])
    return BisimResult(True, block, res.offset, [])


CHECKERS = {
    "fr": fr_bisimilar,
    "branching": branching_fr_bisimilar,
    "rooted": rooted_branching_fr_bisimilar,
}


def equivalent(t1: Term, t2: Term, kind: str = "fr", gamma=None, defs=None,
               mode: str = FULL_FR, depth=None, budget=100_000, defs2=None) -> BisimResult:
    l1 = generate(t1, gamma, defs, mode, depth, budget)
    l2 = generate(t2, gamma, defs if defs2 is None else defs2, mode, depth, budget)
    return CHECKERS[kind](l1, l2)


# ---------------------------------------------------------------- output

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(l: Lts, name: str = "lts") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __root [shape=point, label=""];']
    for i, s in enumerate(l.states):
        shape = "doublecircle" if s is TERMINATED else "circle"
        lines.append(f'  s{i} [shape={shape}, label="{_dot_escape(_state_text(s))}"];')
    lines.append(f"  __root -> s{l.root};")
    for s, lab, d in l.transitions:
        if lab.is_tau:
            style = "dotted"
        else:
            style = "solid" if lab.direction == FWD else "dashed"
        text = "tau" if lab.is_tau else (lab.name if lab.key is None else f"{lab.name}[{lab.key}]")
        lines.append(f'  s{s} -> s{d} [label="{_dot_escape(text)}", style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(l: Lts) -> str:
    data = {
        "mode": l.mode,
        "states": [_state_text(s) for s in l.states],
        "root": l.root,
        "done": l.done,
        "transitions": [
            dict({"src": s, "direction": lab.direction,
                  "label": "tau" if lab.is_tau else lab.name, "dst": d},
                 **({"key": lab.key} if lab.key is not None else {}))
            for s, lab, d in l.transitions
        ],
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
