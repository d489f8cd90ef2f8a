import itertools
import random

from hypothesis import given, settings, strategies as st

from tracewit import sfa as F
from tracewit import sre as S
from tracewit.guards import Var, all_events, eq
from tracewit.syntax import parse_sre

from conftest import (
    A, B, SAFETY, LINK, NOT_UNIQUE, SMALL_DOMAIN, SMALL_OPS, assignments, explore_pairs,
    random_sre, ref_accepts, traces_upto,
)

EVENTS = all_events(SMALL_OPS, SMALL_DOMAIN)
n0, n1 = Var("n0"), Var("n1")


def compile_(text_or_sre):
    r = parse_sre(text_or_sre) if isinstance(text_or_sre, str) else text_or_sre
    return F.compile(r, SMALL_OPS)


def test_compile_literal():
    a = compile_("<put a b>")
    assert a.num_states == 2 and len(a.edges) == 1


def test_compile_link_shape():
    a = compile_(LINK)
    edges = {(s, tuple(str(p) for p in g), d) for s, g, d in a.edges}
    assert a.num_states == 2 and a.initial == 0 and a.accepting == {1}
    assert edges == {(0, (".",), 0), (0, ("<put a b>",), 1), (1, ("~<put a _>",), 1)}


def test_compile_empty():
    a = compile_("0")
    assert not a.accepting and F.is_empty(a)
    assert F.sample_trace(a) is None


def test_intersection_nonempty_examples():
    x = F.intersect(compile_(LINK), compile_(".* <put n0 n1> (~<put n0 _>)*"))
    assert not F.is_empty(x)
    trace, sigma = F.nonempty_witness(x, {eq(n1, A)})
    assert sigma[n1] == sigma[A] and F.accepts(x, trace, sigma)


def test_identity_intersection():
    rng = random.Random(3)
    for _ in range(10):
        r = random_sre(rng, 3)
        a = compile_(r)
        x = F.intersect(a, compile_(".*"))
        for sigma in assignments(S.variables(r)):
            for t in traces_upto(EVENTS, 2):
                assert F.accepts(x, t, sigma) == F.accepts(a, t, sigma)


def test_emptiness_examples():
    trace, sigma = F.nonempty_witness(compile_(LINK), assignment={A: 1, B: 2}, domain_size=4)
    assert [str(e) for e in trace] == ["<put 1 2>"]
    got = F.sample_trace(compile_(LINK), domain_size=4, max_len=6)
    assert got is not None and S.accepts(parse_sre(LINK), *got)
    trace, sigma = F.sample_trace(compile_(NOT_UNIQUE), domain_size=4, max_len=6)
    assert len(trace) == 2 and trace[0].args[1] == trace[1].args[1] and trace[0].args[0] != trace[1].args[0]
    assert S.accepts(parse_sre(NOT_UNIQUE), trace, sigma)


def reach(starts, edges):
    seen = set(starts)
    while True:
        more = {d for s, _, d in edges if s in seen} - seen
        if not more:
            return seen
        seen |= more


def test_trimmed():
    rng = random.Random(11)
    for _ in range(40):
        a = compile_(random_sre(rng))
        if not a.accepting:
            assert not a.edges
            continue
        for q in a.states:
            assert q in reach([a.initial], a.edges)
            assert q in reach(a.accepting, [(d, g, s) for s, g, d in a.edges])


# -- differential properties -------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_compile_agrees_with_derivatives(seed):
    r = random_sre(random.Random(seed))
    a = compile_(r)
    for sigma in assignments(S.variables(r)):
        assert explore_pairs(r, a, sigma, EVENTS, 4) == []


def test_pair_walk_matches_full_enumeration():
    # the deduplicated walk used above, checked against brute force on short traces
    rng = random.Random(5)
    for _ in range(8):
        r = random_sre(rng, 3)
        a = compile_(r)
        for sigma in itertools.islice(assignments(S.variables(r)), 3):
            for t in traces_upto(EVENTS, 2):
                assert F.accepts(a, t, sigma) == ref_accepts(r, t, sigma)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_intersection_law(seed):
    rng = random.Random(seed)
    r1, r2 = random_sre(rng, 3), random_sre(rng, 3)
    a1, a2 = compile_(r1), compile_(r2)
    x = F.intersect(a1, a2)
    for sigma in assignments(S.variables(r1) | S.variables(r2)):
        for t in traces_upto(EVENTS, 2):
            assert F.accepts(x, t, sigma) == (F.accepts(a1, t, sigma) and F.accepts(a2, t, sigma))


def split_soundness(a, sigma, max_len=2):
    """Every accepted prefix followed by every accepted suffix is accepted by ``a``."""
    for sp in F.enumerate_splits(a):
        pre = [t for t in traces_upto(EVENTS, max_len) if F.accepts(sp.prefix, t, sigma)]
        suf = [t for t in traces_upto(EVENTS, max_len) if F.accepts(sp.suffix, t, sigma)]
        assert not F.accepts(sp.suffix, (), sigma)
        for p in pre[:40]:
            for s in suf[:40]:
                assert F.accepts(a, p + s, sigma)


def split_coverage(a, sigma, max_len=3):
    splits = F.enumerate_splits(a)
    for t in traces_upto(EVENTS, max_len):
        if t and F.accepts(a, t, sigma):
            assert any(F.accepts(sp.prefix, t[:i], sigma) and F.accepts(sp.suffix, t[i:], sigma)
                       for sp in splits for i in range(len(t)))


def test_split_laws_on_named_specs():
    for text in (NOT_UNIQUE, LINK, SAFETY):
        a = compile_(text)
        for sigma in ({A: 0, B: 1}, {A: 1, B: 1}):
            split_soundness(a, sigma)
            split_coverage(a, sigma)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_split_laws_random(seed):
    r = random_sre(random.Random(seed), 3)
    a = compile_(r)
    sigma = {A: 0, B: 1}
    split_soundness(a, sigma)
    if a.initial not in a.accepting:
        split_coverage(a, sigma, 2)


def test_split_pivots_and_order():
    a = compile_(NOT_UNIQUE)
    splits = F.enumerate_splits(a)
    assert [sp.pivot for sp in splits] == [0, 1]
    assert S.to_text(F.to_sre(splits[1].prefix)) == LINK
    assert S.to_text(F.to_sre(splits[1].suffix)) == "(~<put a _>)* <put !a b> .*"
    assert F.enumerate_splits(compile_("0")) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_to_sre_preserves_language(seed):
    r = random_sre(random.Random(seed), 3)
    a = compile_(r)
    back = F.to_sre(a)
    for sigma in itertools.islice(assignments(S.variables(r)), 4):
        for t in traces_upto(EVENTS, 2):
            assert S.accepts(back, t, sigma) == S.accepts(r, t, sigma)


def test_emptiness_agrees_with_enumeration():
    rng = random.Random(17)
    for _ in range(40):
        r = random_sre(rng, 3)
        a = compile_(r)
        got = F.nonempty_witness(a, domain_size=SMALL_DOMAIN, max_len=2)
        exists = any(ref_accepts(r, t, sigma)
                     for sigma in assignments(S.variables(r)) for t in traces_upto(EVENTS, 2))
        assert (got is not None) == exists
        if got is not None:
            assert ref_accepts(r, *got)


def test_dot_export():
    dot = F.to_dot(compile_(LINK), "link")
    assert dot.startswith('digraph "link"') and 'label="<put a b>"' in dot and "doublecircle" in dot
