import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racp.gen import SIGNATURES, TermGen, standard_gamma
from racp.parser import parse_spec, parse_term, render
from racp.sos import TERMINATED, Fwd, Rev, engine, forward_steps, is_done, reverse_steps
from racp.term import History, history_free, keys

G = standard_gamma()


def fwd(text, gamma=G, defs=None):
    return {(str(s.label), render(s.target)) for s in forward_steps(parse_term(text), gamma, defs)}


def test_prefix_step_allocates_key_one():
    assert fwd("a.b") == {("a[1]", "a[1] . b")}
    assert fwd("a[1].b") == {("b[2]", "a[1] . b[2]")}


def test_expansion_law_counterexample():
    assert forward_steps(parse_term("a.b+b.a"), G) == []


def test_choice_discards_the_other_branch():
    assert fwd("a+b") == {("a[1]", "a[1] + b"), ("b[1]", "a + b[1]")}
    # b can no longer happen once a was chosen
    assert fwd("a[1]+b") == set()


def test_parallel_interleaves_and_communicates():
    assert fwd("a||b") == {("a[1]", "a[1] || b"), ("b[1]", "a || b[1]"),
                           ("gab[1]", "a[1] || b[1]")}
    assert fwd("a|b") == {("a[1]", "a[1] | b"), ("b[1]", "a | b[1]")}
    assert fwd("a&b") == {("gab[1]", "a[1] & b[1]")}


def test_encapsulation_hiding_renaming():
    assert fwd("encap{a}(a.b+c)") == {("c[1]", "encap{a}(a . b + c[1])")}
    assert fwd("hide{a}(a.b)") == {("tau", "hide{a}(a[1] . b)")}
    assert fwd("rename{a->c}(a.b)") == {("c[1]", "rename{a->c}(a[1] . b)")}


def test_reverse_steps_undo_most_recent_per_thread():
    t = parse_term("a[1] | b[2]")
    got = {(str(s.label), render(s.target)) for s in reverse_steps(t, G)}
    assert got == {("rev a[1]", "a | b[2]"), ("rev b[2]", "a[1] | b")}
    assert reverse_steps(parse_term("a . b"), G) == []


def test_recursion_unfolds_through_definitions():
    sf = parse_spec("X = a . X;")
    (s,) = forward_steps(parse_term("<X>"), None, sf.defs)
    assert s.label == Fwd("a", 1)


def test_termination_predicate():
    assert is_done(parse_term("a[1] . b[2]"))
    assert not is_done(parse_term("a . b"))
    assert not is_done(parse_term("encap{a}(a)"))
    assert engine().done(parse_term("tau"))           # structural reading
    assert not engine().terminated(parse_term("tau"))  # predicate of the checkers


def _trace(t, rng, eng):
    path = [t]
    while True:
        st = eng.forward_steps(path[-1])
        if not st:
            return path
        nxt = rng.choice(st).target
        if nxt is TERMINATED:
            return path
        path.append(nxt)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_loop_property(seed):
    """Every forward step has the matching reverse step back to the source."""
    rng = random.Random(seed)
    t = TermGen(SIGNATURES["REVERSIBLE"], max_depth=3).term(rng)
    eng = engine(G)
    for s in _trace(t, rng, eng):
        for step in eng.forward_steps(s):
            if step.target is TERMINATED:
                continue
            back = {(r.label, r.target) for r in eng.reverse_steps(step.target)}
            assert (Rev(step.label.name, step.label.key), s) in back


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_keys_grow_by_one_per_forward_step(seed):
    rng = random.Random(seed)
    t = TermGen(SIGNATURES["REVERSIBLE"], max_depth=3).term(rng)
    path = _trace(t, rng, engine(G))
    for before, after in zip(path, path[1:]):
        assert len(keys(after)) == len(keys(before)) + 1
    assert history_free(path[0])


def test_merge_keeps_its_opening_communication_until_last():
    g = standard_gamma()
    t = parse_term("b[1] & (a[1] | b[2])")
    revs = {render(s.target) for s in reverse_steps(t, g)}
    # undoing the communication first would strand b[2] inside a merge
    assert revs == {"b[1] & (a[1] | b)"}
    t2 = parse_term("(b[1] | a[2]) & (a[2] | c[1])")
    assert all(s.label.key == 2 for s in reverse_steps(t2, g))
