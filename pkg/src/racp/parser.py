"""Text syntax for RACP terms and recursive specification files.

Operators, loosest first: ``+``, ``||`` (whole parallel), ``|`` (static
parallel), ``&`` (communication merge), ``.`` (sequence). All are
left-associative. Unary forms are ``encap{..}(t)``, ``hide{..}(t)`` and
``rename{a->b,..}(t)``; ``<X>`` refers to a specification variable.

A specification file is a sequence of ``;``-terminated statements::

    # comment
    act PlanATravel, BookHotels;    # optional action declarations
    comm sp rp = ctp;
    set H = {sp, rp};
    X = a . X + b;
    init encap{H}(X || Y);

Inside a specification file a bare identifier that names an equation is
read as a variable reference. A bare identifier starting with an upper-case
letter that is neither a variable nor a known action (declared with ``act``
or mentioned by a ``comm``/``set`` statement) is an unresolved reference.
Set names declared with ``set`` may be used inside ``encap{..}``/``hide{..}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .term import (BINARY, TAU, DELTA, Action, Choice, CommMerge, CommTable,
                   Deadlock, Encap, Hide, History, Parallel, Rename, Seq,
                   Silent, StaticPar, Term, TermError, Var, children,
                   with_children)

KEYWORDS = {"delta", "tau", "encap", "hide", "rename"}
STATEMENT_WORDS = {"comm", "set", "init", "act"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<nat>[0-9]+)
  | (?P<sym>\|\||->|[+.|&()\[\]{},<>;=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    toks, pos, line, lstart = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, m.group(), line, pos - lstart + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            lstart = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


class _Parser:
    def __init__(self, toks, sets=None):
        self.toks = toks
        self.i = 0
        self.sets = sets or {}

    @property
    def cur(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.cur
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text) -> Optional[Tok]:
        if self.cur.kind in ("sym", "ident") and self.cur.text == text:
            t = self.cur
            self.i += 1
            return t
        return None

    def expect(self, text) -> Tok:
        t = self.accept(text)
        if t is None:
            found = self.cur.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return t

    def ident(self) -> Tok:
        t = self.cur
        if t.kind != "ident":
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def nat(self) -> int:
        t = self.cur
        if t.kind != "nat":
            raise self.error(f"malformed history key {t.text!r}")
        self.i += 1
        if int(t.text) < 1:
            raise self.error("history key must be >= 1", t)
        return int(t.text)

    # term := choice
    _LEVELS = (("+", Choice), ("||", Parallel), ("|", StaticPar), ("&", CommMerge), (".", Seq))

    def term(self, level=0) -> Term:
        if level == len(self._LEVELS):
            return self.atom()
        op, cls = self._LEVELS[level]
        left = self.term(level + 1)
        while self.accept(op):
            left = cls(left, self.term(level + 1))
        return left

    def atom(self) -> Term:
        t = self.cur
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if self.accept("<"):
            name = self.ident()
            self.expect(">")
            return Var(name.text)
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text or 'end of input'!r}")
        self.i += 1
        if t.text == "delta":
            return DELTA
        if t.text == "tau":
            return TAU
        if t.text in ("encap", "hide"):
            names = self.name_set()
            self.expect("(")
            body = self.term()
            self.expect(")")
            return (Encap if t.text == "encap" else Hide)(names, body)
        if t.text == "rename":
            self.expect("{")
            pairs = []
            while not self.accept("}"):
                a = self.ident().text
                self.expect("->")
                b = self.ident().text
                pairs.append((a, b))
                if not self.accept(","):
                    self.expect("}")
                    break
            if len({a for a, _ in pairs}) != len(pairs):
                raise self.error("renaming maps one name twice", t)
            self.expect("(")
            body = self.term()
            self.expect(")")
            return Rename(tuple(pairs), body)
        if t.text in KEYWORDS:
            raise self.error(f"keyword {t.text!r} used as an action", t)
        if self.accept("["):
            k = self.nat()
            self.expect("]")
            return History(t.text, k)
        return _Bare(t)

    def name_set(self) -> frozenset:
        self.expect("{")
        out = set()
        if not self.accept("}"):
            while True:
                n = self.ident()
                if self.accept("["):
                    out.add((n.text, self.nat()))
                    self.expect("]")
                elif n.text in self.sets:
                    out |= self.sets[n.text]
                else:
                    out.add(n.text)
                if not self.accept(","):
                    break
            self.expect("}")
        return frozenset(out)


class _Bare:
    """Placeholder for a bare identifier until variables are known."""

    def __init__(self, tok: Tok):
        self.tok = tok


def _resolve(t, variables: set, actions: set, in_spec: bool):
    if isinstance(t, _Bare):
        name = t.tok.text
        if name in variables:
            return Var(name)
        if in_spec and name[0].isupper() and name not in actions:
            raise ParseError(f"unresolved reference {name!r}", t.tok.line, t.tok.col)
        return Action(name)
    if isinstance(t, Var):
        if in_spec and t.name not in variables:
            raise ParseError(f"unresolved reference <{t.name}>")
        return t
    kids = children(t)
    if not kids:
        return t
    return with_children(t, *(_resolve(k, variables, actions, in_spec) for k in kids))


def _build(p: _Parser, variables=frozenset(), actions=frozenset(), in_spec=False) -> Term:
    # Binary constructors do not inspect their children, so the tree can be
    # built with placeholders first and resolved afterwards.
    return _resolve(p.term(), set(variables), set(actions), in_spec)


def parse_term(text: str) -> Term:
    p = _Parser(tokenize(text))
    try:
        t = _build(p)
    except TermError as e:
        raise p.error(str(e)) from e
    if p.cur.kind != "eof":
        raise p.error(f"unexpected {p.cur.text!r}")
    return t


@dataclass
class SpecFile:
    equations: list = field(default_factory=list)   # [(name, Term)]
    comm: CommTable = field(default_factory=CommTable)
    sets: dict = field(default_factory=dict)
    initial: Optional[Term] = None
    actions: frozenset = frozenset()

    @property
    def defs(self) -> dict:
        return dict(self.equations)

    def variables(self) -> list:
        return [x for x, _ in self.equations]


def parse_comm(text: str, table: Optional[CommTable] = None) -> CommTable:
    """Inline communication rules ``a b = c`` separated by ``;`` or ``,``."""
    table = table or CommTable()
    for part in re.split(r"[;,\n]", text):
        part = part.strip()
        if not part:
            continue
        if part.startswith("comm "):
            part = part[5:]
        m = re.fullmatch(r"([A-Za-z]\w*)\s+([A-Za-z]\w*)\s*=\s*([A-Za-z]\w*)", part)
        if not m:
            raise ParseError(f"bad communication rule {part!r}")
        try:
            table.add(*m.groups())
        except TermError as e:
            raise ParseError(str(e)) from e
    return table


def parse_spec(text: str) -> SpecFile:
    toks = tokenize(text)
    # Split into statements first so variable names are known before terms
    # are resolved.
    stmts, cur = [], []
    for t in toks:
        if t.kind == "eof":
            break
        if t.kind == "sym" and t.text == ";":
            if cur:
                stmts.append(cur)
            cur = []
        else:
            cur.append(t)
    if cur:
        last = cur[-1]
        raise ParseError("missing ';' at end of statement", last.line, last.col + len(last.text))

    spec = SpecFile()
    variables, actions = {}, set()
    pending, init_toks = [], None
    for st in stmts:
        head = st[0]
        eof = Tok("eof", "", st[-1].line, st[-1].col + len(st[-1].text))
        p = _Parser(st + [eof], spec.sets)
        if head.kind == "ident" and head.text == "comm":
            p.i = 1
            a, b = p.ident(), p.ident()
            p.expect("=")
            c = p.ident()
            try:
                spec.comm.add(a.text, b.text, c.text)
            except TermError as e:
                raise ParseError(str(e), head.line, head.col) from e
            actions |= {a.text, b.text, c.text}
        elif head.kind == "ident" and head.text == "act":
            p.i = 1
            while True:
                actions.add(p.ident().text)
                if not p.accept(","):
                    break
        elif head.kind == "ident" and head.text == "set":
            p.i = 1
            name = p.ident()
            p.expect("=")
            names = p.name_set()
            if name.text in spec.sets:
                raise ParseError(f"duplicate set {name.text!r}", name.line, name.col)
            spec.sets[name.text] = names
            actions |= {n if isinstance(n, str) else n[0] for n in names}
        elif head.kind == "ident" and head.text == "init":
            if init_toks is not None:
                raise ParseError("duplicate init statement", head.line, head.col)
            p.i = 1
            init_toks = p
            continue
        elif head.kind == "ident" and len(st) > 1 and st[1].text == "=":
            if head.text in KEYWORDS or head.text in STATEMENT_WORDS:
                raise ParseError(f"keyword {head.text!r} cannot name a variable", head.line, head.col)
            if head.text in variables:
                raise ParseError(f"duplicate variable {head.text!r}", head.line, head.col)
            variables[head.text] = head
            p.i = 2
            pending.append((head.text, p))
        else:
            raise ParseError(f"unrecognized statement starting with {head.text!r}", head.line, head.col)
        if head.text not in variables:
            _finish(p)

    spec.actions = frozenset(actions)
    for name, p in pending:
        spec.equations.append((name, _parse_resolved(p, variables, actions)))
    if init_toks is not None:
        spec.initial = _parse_resolved(init_toks, variables, actions)
    return spec


def _finish(p: _Parser) -> None:
    if p.cur.kind != "eof":
        raise p.error(f"unexpected {p.cur.text!r}")


def _parse_resolved(p: _Parser, variables, actions) -> Term:
    try:
        t = _build(p, variables, actions, in_spec=True)
    except TermError as e:
        raise p.error(str(e)) from e
    _finish(p)
    return t


# ---------------------------------------------------------------- rendering

_PREC = {Choice: 0, Parallel: 1, StaticPar: 2, CommMerge: 3, Seq: 4}
_OP = {Choice: "+", Parallel: "||", StaticPar: "|", CommMerge: "&", Seq: "."}


def _set_text(names) -> str:
    items = sorted(names, key=lambda n: (n, 0) if isinstance(n, str) else n)
    return ",".join(n if isinstance(n, str) else f"{n[0]}[{n[1]}]" for n in items)


def render(t: Term, spec_vars: bool = False) -> str:
    """Concrete syntax of ``t``; ``parse_term(render(t)) == t``.

    With ``spec_vars`` variable references are printed bare, as they are
    written in specification files.
    """
    return _render(t, spec_vars)


def _render(t: Term, sv: bool) -> str:
    if isinstance(t, Action):
        return t.name
    if isinstance(t, History):
        return f"{t.name}[{t.key}]"
    if isinstance(t, Deadlock):
        return "delta"
    if isinstance(t, Silent):
        return "tau"
    if isinstance(t, Var):
        return t.name if sv else f"<{t.name}>"
    if isinstance(t, BINARY):
        p = _PREC[type(t)]
        left = _render(t.left, sv)
        right = _render(t.right, sv)
        if isinstance(t.left, BINARY) and _PREC[type(t.left)] < p:
            left = f"({left})"
        if isinstance(t.right, BINARY) and _PREC[type(t.right)] <= p:
            right = f"({right})"
        return f"{left} {_OP[type(t)]} {right}"
    if isinstance(t, (Encap, Hide)):
        kw = "encap" if isinstance(t, Encap) else "hide"
        return f"{kw}{{{_set_text(t.names)}}}({_render(t.body, sv)})"
    if isinstance(t, Rename):
        m = ",".join(f"{a}->{b}" for a, b in t.mapping)
        return f"rename{{{m}}}({_render(t.body, sv)})"
    raise TypeError(f"not a term: {t!r}")


def render_spec(spec: SpecFile) -> str:
    lines = []
    if spec.actions:
        lines.append("act " + ", ".join(sorted(spec.actions)) + ";")
    for a, b, c in spec.comm.rules():
        lines.append(f"comm {a} {b} = {c};")
    for name, names in spec.sets.items():
        lines.append(f"set {name} = {{{_set_text(names)}}};")
    for x, rhs in spec.equations:
        lines.append(f"{x} = {render(rhs, spec_vars=True)};")
    if spec.initial is not None:
        lines.append(f"init {render(spec.initial, spec_vars=True)};")
    return "\n".join(lines) + "\n"
