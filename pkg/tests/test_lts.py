import json

import pytest

from racp.gen import standard_gamma
from racp.lts import (FORWARD_ABSTRACT, FULL_FR, BudgetExceeded, ModeMismatch,
                      branching_fr_bisimilar, equivalent, fr_bisimilar, generate,
                      rooted_branching_fr_bisimilar, to_dot, to_json)
from racp.parser import parse_spec, parse_term as p
from racp.recursion import RecSpec, rdp_unfold

G = standard_gamma()


def test_sequence_has_three_states():
    l = generate(p("a.b"))
    assert len(l) == 3
    assert len(l.transitions) == 4
    assert l.done == [False, False, True]


def test_choice_state_count():
    assert len(generate(p("a+b"))) == 3


def test_abstract_recursion_is_a_self_loop():
    sf = parse_spec("X = a . X;")
    l = generate(p("<X>"), None, sf.defs, FORWARD_ABSTRACT)
    assert len(l) == 1
    fwd = [t for t in l.transitions if t[1].forward]
    assert len(fwd) == 1 and fwd[0][0] == fwd[0][2] == 0 and fwd[0][1].name == "a"


def test_budget_and_depth():
    with pytest.raises(BudgetExceeded):
        generate(p("a||b||c||a"), G, budget=5)
    sf = parse_spec("X = a . X;")
    l = generate(p("<X>"), None, sf.defs, FULL_FR, depth=4)
    assert l.truncated and len(l) == 5


def test_counterexamples():
    r = fr_bisimilar(generate(p("(a+b).c")), generate(p("a.c+b.c")))
    assert not r
    assert r.witness[0].endswith("a[1]") and "c[2]" in r.witness[-1]
    assert not equivalent(p("a||b"), p("a.b+b.a"), "fr", G)


@pytest.mark.parametrize("s, t", [
    ("a+a", "a"), ("a.(b+c)", "a.b+a.c"), ("a+b", "b+a"), ("(a.b).c", "a.(b.c)"),
    ("a+delta", "a"), ("delta.a", "delta"),
])
def test_strong_equivalences(s, t):
    assert equivalent(p(s), p(t), "fr", G)


def test_branching_variants():
    assert equivalent(p("a.tau.b"), p("a.b"), "branching") == equivalent(p("a.tau.b"), p("a.b"), "branching")
    assert equivalent(p("a.tau"), p("a"), "rooted")
    assert not equivalent(p("tau.a"), p("a"), "rooted")
    assert not equivalent(p("a"), p("b"), "branching")


def test_reflexive_on_samples():
    for text in ["a||b", "encap{a}(a&b + c)", "hide{b}(a.b)", "a|b.c"]:
        t = p(text)
        for kind in ("fr", "branching", "rooted"):
            assert equivalent(t, t, kind, G)


def test_mode_mismatch():
    with pytest.raises(ModeMismatch):
        fr_bisimilar(generate(p("a")), generate(p("a"), mode=FORWARD_ABSTRACT))


def test_rdp_invariance_in_abstract_mode():
    spec = RecSpec.from_specfile(parse_spec("X = a . Y + b; Y = c . X;"))
    l1 = generate(p("<X>"), None, spec.equations, FORWARD_ABSTRACT)
    l2 = generate(rdp_unfold("X", spec), None, spec.equations, FORWARD_ABSTRACT)
    assert fr_bisimilar(l1, l2)


def test_output_formats():
    l = generate(p("a.b"))
    dot = to_dot(l)
    assert dot.startswith("digraph") and dot.count("shape=circle") == 3
    data = json.loads(to_json(l))
    assert len(data["states"]) == 3 and data["root"] == 0
    assert to_json(l) == to_json(generate(p("a.b")))   # deterministic
