"""The travel booking protocol with compensation support.

Three parties (a user agent, a travel corporation and a bank) run in
parallel with their interactions forced into communications. The bundled
files under ``racp/data`` hold the protocol, the expected linear
specification of the encapsulated system, the one-datum buffer it must
implement once internal actions are hidden, and the finite composed run
used for the compensation round trip.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .lts import FORWARD_ABSTRACT, BisimResult, generate, rooted_branching_fr_bisimilar, to_dot
from .parser import parse_spec, SpecFile
from .recursion import RecSpec, check_guarded, linearize, match_up_to_renaming
from .term import CommTable, Encap, Hide, Term

FILES = ("protocol", "buffer", "expected", "composed")


def load(name: str) -> SpecFile:
    """Parse one of the bundled specification files by stem."""
    if name not in FILES:
        raise KeyError(f"no bundled file {name!r}")
    text = resources.files("racp").joinpath("data", f"{name}.racp").read_text()
    return parse_spec(text)


def composed_term() -> tuple:
    """The finite composed protocol run and its communication table."""
    sf = load("composed")
    return sf.initial, sf.comm


@dataclass
class CaseStudyReport:
    derived: RecSpec                 # linear spec of encap{H}(U || T || B)
    renaming: Optional[dict]         # derived variable -> expected variable
    result: BisimResult              # hidden system vs buffer
    system: Term                     # hide{I}(encap{H}(U || T || B))
    gamma: CommTable
    dot: str = ""

    @property
    def forward_states(self) -> int:
        return len(self.derived)

    @property
    def ok(self) -> bool:
        return self.renaming is not None and self.result.equivalent


def run(gamma: Optional[CommTable] = None, budget: int = 100_000, dot: bool = False) -> CaseStudyReport:
    """Derive the linear specification and check the hidden system against
    the buffer by rooted branching bisimilarity of forward-abstract systems.

    ``gamma`` overrides the bundled communication table, which is how the
    negative control with a rule removed is run.
    """
    proto = load("protocol")
    g = proto.comm if gamma is None else gamma
    spec = RecSpec(dict(proto.equations), g, None, dict(proto.sets))
    system = proto.initial
    if not (isinstance(system, Hide) and isinstance(system.body, Encap)):
        raise ValueError("protocol init must have the form hide{I}(encap{H}(...))")
    encapsulated = system.body
    derived = linearize(encapsulated, spec, g, strict=False, budget=budget)
    expected = RecSpec.from_specfile(load("expected"))
    renaming = match_up_to_renaming(derived, expected) if check_guarded(derived) else None
    buf = load("buffer")
    l1 = generate(system, g, spec.equations, FORWARD_ABSTRACT, budget=budget)
    l2 = generate(buf.initial or _first_var(buf), buf.comm, buf.defs, FORWARD_ABSTRACT, budget=budget)
    result = rooted_branching_fr_bisimilar(l1, l2)
    return CaseStudyReport(derived, renaming, result, system, g, to_dot(l1, "protocol") if dot else "")


def _first_var(sf: SpecFile):
    from .term import Var
    return Var(sf.equations[0][0])
