import random

import pytest

from racp.lts import FORWARD_ABSTRACT, generate, rooted_branching_fr_bisimilar
from racp.parser import parse_spec, parse_term as p, render
from racp.recursion import (GuardednessInconclusive, NotLinear, RecSpec, UnguardedSpec,
                            cfar_reduce, check_guarded, clusters, exits, linearize,
                            match_up_to_renaming, rdp_unfold, rsp_equal)
from racp.sos import forward_steps
from racp.term import TermError, Var


def S(text):
    return RecSpec.from_specfile(parse_spec(text))


@pytest.mark.parametrize("text, expected", [
    ("X = a . X;", True),
    ("X = X + a;", False),
    ("X = tau . X;", False),
    ("X = a . Y + b; Y = c;", True),
    ("X = Y . X; Y = a;", True),
    ("X = X || a;", False),
    ("X = Y; Y = X;", False),
    ("X = tau . Y; Y = a . X;", True),
])
def test_check_guarded(text, expected):
    assert check_guarded(S(text)) is expected


def test_tau_counts_as_guard_when_not_tau_aware():
    assert check_guarded(S("X = tau . X;"), tau_aware=False) is True


def test_guardedness_budget_is_inconclusive_not_false():
    chain = "".join(f"X{i} = X{i + 1} + a;" for i in range(40)) + "X40 = a;"
    with pytest.raises(GuardednessInconclusive):
        check_guarded(S(chain), budget=32)
    assert check_guarded(S(chain), budget=64) is True


def test_classification_flags():
    s = S("X = a . X + tau . Y; Y = b;")
    assert s.linear and s.guarded and s.guarded_linear
    s = S("X = a . b . X;")
    assert not s.linear and s.guarded


def test_rdp_unfold():
    assert rdp_unfold("X", S("X = a . X;")) == p("a . <X>")
    assert render(rdp_unfold("X", S("X = a . Y + b; Y = c;"))) == "a . <Y> + b"
    with pytest.raises(TermError):
        rdp_unfold("Z", S("X = a . X;"))


def test_rdp_same_initial_steps():
    s = S("X = a . Y + b; Y = c . X + tau . X;")
    for x in s.equations:
        a = forward_steps(Var(x), None, s.equations)
        b = forward_steps(rdp_unfold(x, s), None, s.equations)
        assert [st.label for st in a] == [st.label for st in b]


@pytest.mark.parametrize("text, n", [("a.b", 2), ("a+b", 1), ("a.(b+c).d", 3)])
def test_linearize(text, n):
    spec = linearize(p(text))
    assert len(spec) == n and spec.linear and spec.guarded_linear
    l1 = generate(p(text), mode=FORWARD_ABSTRACT)
    l2 = generate(spec.root, None, spec.equations, FORWARD_ABSTRACT)
    assert len(l1) - 1 == len(l2) - 1 == n   # plus the terminated state


def test_linearize_rejects_parallel_when_strict():
    with pytest.raises(TermError):
        linearize(p("a || b"))
    assert len(linearize(p("a || b"), strict=False)) == 3


def test_rsp_equal():
    assert rsp_equal(S("X = a . X;"), S("Y = a . Z; Z = a . Y;"))
    assert not rsp_equal(S("X = a . X;"), S("X = b . X;"))
    with pytest.raises(UnguardedSpec):
        rsp_equal(S("X = X + a;"), S("X = a;"))


def _random_linear_spec(rng, n=3, names=("a", "b", "tau")):
    eqs = []
    for i in range(n):
        summands = []
        for _ in range(rng.randint(1, 3)):
            u = rng.choice(names)
            summands.append(f"{u} . X{rng.randrange(n)}" if rng.random() < 0.7 else u)
        eqs.append(f"X{i} = {' + '.join(summands)};")
    return S("\n".join(eqs))


def test_rsp_is_an_equivalence_on_samples():
    rng = random.Random(3)
    specs = [_random_linear_spec(rng, names=("a", "b")) for _ in range(12)]
    rel = [[bool(rsp_equal(s, t)) for t in specs] for s in specs]
    for i in range(len(specs)):
        assert rel[i][i]
        for j in range(len(specs)):
            assert rel[i][j] == rel[j][i]
            for k in range(len(specs)):
                if rel[i][j] and rel[j][k]:
                    assert rel[i][k]


def test_clusters_and_exits():
    s = S("X = tau . Y + a . Z; Y = tau . X + b; Z = c;")
    assert clusters(s, set()) == [["X", "Y"]]
    assert set(map(render, exits(s, ["X", "Y"], set()))) == {"a . <Z>", "b"}
    assert clusters(S("X = a . X;"), set()) == []
    assert clusters(S("X = a . X;"), {"a"}) == [["X"]]


def test_cfar_single_variable_cluster():
    s = S("X = tau . X + a;")
    r = cfar_reduce(s, set())
    assert render(r.equations["X"]) == "tau . a"
    l1 = generate(Var("X"), None, r.equations, FORWARD_ABSTRACT)
    l2 = generate(p("tau . a"), mode=FORWARD_ABSTRACT)
    assert rooted_branching_fr_bisimilar(l1, l2)


def test_cfar_without_clusters_is_identity():
    s = S("X = a . Y; Y = b;")
    assert cfar_reduce(s, set()).equations == s.equations


def test_cfar_preconditions():
    with pytest.raises(NotLinear):
        cfar_reduce(S("X = a . b . X;"), set())


def test_match_up_to_renaming():
    s1 = S("A = a . B; B = b . A;")
    s2 = S("Q = a . P; P = b . Q;")
    assert match_up_to_renaming(s1, s2) == {"A": "Q", "B": "P"}
    assert match_up_to_renaming(s1, S("Q = a . P; P = c . Q;")) is None


def test_static_parallel_in_recursion_is_rejected():
    with pytest.raises(TermError):
        S("X = a . X | b;")


def test_spec_text_round_trip():
    s = S("X = a . Y + b; Y = c . X;")
    again = S(s.to_text())
    assert again.equations == s.equations
