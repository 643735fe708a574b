import random

import pytest
from hypothesis import strategies as st

from racp.gen import SIGNATURES, TermGen, standard_gamma
from racp.term import (DELTA, TAU, Action, Choice, CommMerge, Encap, Hide, History,
                       Parallel, Rename, Seq, StaticPar)

NAMES = ("a", "b", "c")

names = st.sampled_from(NAMES)
name_sets = st.frozensets(names, min_size=1, max_size=2)


def _leaves(histories):
    base = [names.map(Action), st.just(DELTA), st.just(TAU)]
    if histories:
        base.append(st.builds(History, names, st.integers(1, 5)))
    return st.one_of(*base)


def _extend(children):
    return st.one_of(
        st.builds(Choice, children, children),
        st.builds(Seq, children, children),
        st.builds(Parallel, children, children),
        st.builds(StaticPar, children, children),
        st.builds(CommMerge, children, children),
        st.builds(Encap, name_sets, children),
        st.builds(Hide, name_sets, children),
        st.builds(lambda a, b, t: Rename(((a, b),), t), names, names, children),
    )


def terms(histories=True, max_leaves=12):
    """Arbitrary syntax trees, including histories unless disabled."""
    return st.recursive(_leaves(histories), _extend, max_leaves=max_leaves)


@pytest.fixture
def gamma():
    return standard_gamma()


@pytest.fixture
def rng():
    return random.Random(1234)


def random_terms(n, ops, seed=0, max_depth=3, alphabet=NAMES):
    gen = TermGen(ops=SIGNATURES[ops] if isinstance(ops, str) else ops,
                  alphabet=alphabet, max_depth=max_depth)
    r = random.Random(seed)
    return [gen.term(r) for _ in range(n)]
