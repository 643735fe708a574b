import random

import pytest

from racp import axioms
from racp.axioms import (PhaseError, RULE_BY_ID, WeightError, ac_equal, normal_form,
                         normalize, rewrite_once, soundness_check, weight)
from racp.gen import SIGNATURES, TermGen, all_terms, standard_gamma
from racp.lts import equivalent
from racp.parser import parse_comm, parse_term as p, render
from racp.term import (Choice, CommMerge, Deadlock, Encap, Parallel, subterms)

G = standard_gamma()


@pytest.mark.parametrize("text, phase, w", [
    ("a", "BRPA", 2), ("a+b", "BRPA", 4), ("a.b", "BRPA", 8), ("a||b", "RPAP", 33),
    ("a.b", "RPAP", 64), ("a|b", "RPAP", 16), ("a&b", "RPAP", 16), ("delta", "ARCP", 2),
    ("encap{a}(a)", "ARCP", 4), ("a[1]", "BRPA", 2),
])
def test_weight_examples(text, phase, w):
    assert weight(p(text), phase) == w


def test_weight_rejects_foreign_operators():
    with pytest.raises(PhaseError):
        weight(p("a||b"), "BRPA")


def test_ac_equal():
    assert ac_equal(p("a+b"), p("b+a"))
    assert ac_equal(p("(a+b)+c"), p("a+(b+c)"))
    assert ac_equal(p("x.(a+b)"), p("x.(b+a)"))
    assert not ac_equal(p("a+b"), p("a+c"))


@pytest.mark.parametrize("text, phase, gamma, rid, out", [
    ("a+a", "BRPA", None, "RA2", "a"),
    ("a.(b+c)", "BRPA", None, "RA4", "a . b + a . c"),
    ("(a.b).c", "BRPA", None, "RA5", "a . (b . c)"),
    ("a&b", "RPAP", "a b = c", "RC8", "c"),
])
def test_rewrite_once(text, phase, gamma, rid, out):
    g = parse_comm(gamma) if gamma else None
    t2, got = rewrite_once(p(text), phase, g)
    assert got == rid and render(t2) == out


@pytest.mark.parametrize("text, phase, gamma, out", [
    ("(a.b).c", "BRPA", None, "a . (b . c)"),
    ("a.(b+c)", "BRPA", None, "a . b + a . c"),
    ("a||b", "RPAP", "a b = c", "a | b + c"),
    ("encap{a}(a+b)", "ARCP", None, "b"),
    ("a&(b.c)", "RPAP", "a b = g", "g . c"),
    ("hide{a}(a.b)+tau", "ARCP_RP_TAU", None, "b"),
    ("rename{a->c}(a.b)", "ARCP_RP_TAU", None, "c . b"),
])
def test_normalize_examples(text, phase, gamma, out):
    g = parse_comm(gamma) if gamma else None
    assert render(normalize(p(text), phase, g, check_weight=False).term) == out


def test_right_distributivity_not_derivable():
    assert not ac_equal(normal_form(p("(a+b).c"), "BRPA"), normal_form(p("a.c+b.c"), "BRPA"))


def test_histories_outside_rule_positions_rejected():
    with pytest.raises(PhaseError):
        normalize(p("a[1] . b + c"), "BRPA")
    assert render(normalize(p("encap{b}(a[1])"), "ARCP").term) == "a[1]"


def test_unknown_phase():
    with pytest.raises(PhaseError):
        axioms.rules_for("XYZ")


def test_rule_listing_has_table_ids():
    text = axioms.rule_listing("ARCP")
    for rid in ("RA1", "RP1", "RP9", "RC8", "RC19", "RD1", "RD8"):
        assert rid in text
    assert "RB1" not in text
    assert "RP2" not in axioms.rule_listing("ARCP_RP_TAU")


def test_weight_monitor_raises_on_broken_rule(monkeypatch):
    bad = axioms.RewriteRule("BAD", p("a"), p("a+a"), frozenset({"BRPA"}))
    monkeypatch.setattr(axioms, "rules_for", lambda phase: [bad])
    with pytest.raises((WeightError, axioms.StepBudgetExceeded)):
        normalize(p("a"), "BRPA", max_steps=5)


def test_printed_weight_rises_on_associativity():
    # (x.y).z weighs x*y^2*z^2 but x.(y.z) weighs x*y^2*z^4 under the BRPA weight.
    assert weight(p("(a.a).a"), "BRPA") == 32
    assert weight(p("a.(a.a)"), "BRPA") == 128
    res = normalize(p("(a.b).c"), "BRPA", check_weight=False)
    assert [s.rule for s in res.violations] == ["RA5"]
    with pytest.raises(WeightError):
        normalize(p("(a.b).c"), "BRPA")


@pytest.mark.parametrize("phase", ["BRPA", "RPAP", "ARCP", "ARCP_RP_TAU"])
def test_weight_descends_for_all_other_rules(phase):
    gen = TermGen(SIGNATURES[phase], max_depth=3)
    rng = random.Random(phase)
    g = standard_gamma() if phase != "BRPA" else None
    for _ in range(60):
        res = normalize(gen.term(rng), phase, g, check_weight=False)
        assert {s.rule for s in res.violations} <= {"RA5", "RP3", "RP6", "RP7"}


@pytest.mark.parametrize("text", ["a||b", "(a.b)||c", "a||(b+c)", "a.b & c.a"])
def test_parallel_eliminated_on_sequential_operands(text):
    nf = normal_form(p(text), "RPAP", G)
    assert not [s for s in subterms(nf) if isinstance(s, (Parallel, CommMerge))], render(nf)


def test_encapsulation_eliminated():
    nf = normal_form(p("encap{a}(a.b || c + a)"), "ARCP", G)
    assert not [s for s in subterms(nf) if isinstance(s, (Parallel, CommMerge, Encap))]
    parts = axioms.summands(nf)
    assert len(parts) == 1 or not any(isinstance(x, Deadlock) for x in parts)


def test_merge_over_static_parallel_has_no_rule():
    # No communication axiom applies to an operand built with |.
    assert rewrite_once(p("b & (c | a)"), "RPAP", G) is None


def test_normalization_preserves_fr_on_brpa():
    for t in all_terms(4):
        assert equivalent(t, normal_form(t, "BRPA"), "fr")


@pytest.mark.parametrize("rid", ["RA1", "RA2", "RA3", "RA5", "RC8", "RD1", "RD3", "RTI1", "RRN1"])
def test_soundness_check_passes(rid):
    rep = soundness_check(rid, samples=15)
    assert rep.ok, rep.failures[:1]


def test_soundness_check_catches_a_corrupted_rule():
    bad = axioms.RewriteRule("BADX", p("x + y"), p("x"), frozenset({"BRPA"}))
    axioms.RULE_PHASE["BADX"] = "BRPA"
    try:
        rep = soundness_check(bad, samples=15)
    finally:
        del axioms.RULE_PHASE["BADX"]
    assert not rep.ok and rep.failures[0][2]


def test_instances_respect_side_conditions():
    rng = random.Random(0)
    for rid in ("RD1", "RD3", "RTI1", "RTI2"):
        rule = RULE_BY_ID[rid]
        for _ in range(10):
            lhs, rhs = axioms.sample_instance(rule, rng, G)
            assert lhs != rhs or rid == "RTI1"
