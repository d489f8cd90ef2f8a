import random

from hypothesis import given, settings, strategies as st

from tracewit import sre as S
from tracewit.guards import Const, Eq, Event, EventPattern, Var, all_events, eq, models, neq, store_of
from tracewit.syntax import parse_pattern, parse_sre, parse_trace

from conftest import (
    A, B, SAFETY, BAD_TRACE, NOT_UNIQUE, SMALL_DOMAIN, SMALL_OPS, VIOLATION, assignments, random_sre,
    ref_accepts, traces_upto,
)

EVENTS = all_events(SMALL_OPS, SMALL_DOMAIN)
n0, n1, n2 = Var("n0"), Var("n1"), Var("n2")


def put_ab():
    return S.Lit(parse_pattern("<put a b>"))


def test_smart_constructors():
    r = put_ab()
    assert S.concat(S.EMPTY, r) == S.EMPTY and S.concat(r, S.EMPTY) == S.EMPTY
    assert S.inter(S.EMPTY, r) == S.EMPTY
    assert S.union(S.EMPTY, r) == r
    assert S.concat(S.EPS, r) == r == S.concat(r, S.EPS)
    assert S.star(S.EPS) == S.EPS and S.star(S.EMPTY) == S.EPS
    assert S.star(S.star(r)) == S.star(r)
    assert S.inter(S.ANY_STAR, r) == r
    x = S.concat(S.concat(r, r), r)
    assert isinstance(x.right, S.Concat) and not isinstance(x.left, S.Concat)


def test_parse_shapes():
    r = parse_sre(NOT_UNIQUE)
    assert S.concat_items(r) == [
        S.ANY_STAR, put_ab(), S.Star(S.Lit(parse_pattern("~<put a _>"))),
        S.Lit(parse_pattern("<put !a b>")), S.ANY_STAR]
    assert parse_sre(".") == S.Lit(parse_pattern("."))
    eq1 = parse_sre(SAFETY)
    head, tail = S.concat_items(eq1)[:2], S.concat_items(eq1)[2]
    assert head == [S.ANY_STAR, put_ab()] and isinstance(tail, S.Union_)


def test_nullable_examples():
    assert S.nullable(S.Star(put_ab()))
    assert not S.nullable(put_ab())
    assert not S.nullable(parse_sre(VIOLATION))


def test_deriv_examples():
    s = {A: 1, B: 2}
    assert S.deriv_concrete(put_ab(), Event("put", (1, 2)), s) == S.EPS
    assert S.deriv_concrete(put_ab(), Event("put", (3, 2)), s) == S.EMPTY
    r = parse_sre(NOT_UNIQUE)
    for e in parse_trace(BAD_TRACE):
        r = S.deriv_concrete(r, e, s)
    assert S.nullable(r)


def test_accepts_examples():
    s = {A: 1, B: 2}
    assert S.accepts(parse_sre(SAFETY), parse_trace(BAD_TRACE), s)
    assert S.accepts(parse_sre(NOT_UNIQUE), parse_trace(BAD_TRACE), s)
    assert S.accepts(S.ANY_STAR, [], {})


def test_deriv_symbolic_examples():
    violation = parse_sre(VIOLATION)
    got = S.deriv_symbolic(violation, parse_pattern("<n1 <- get n0>"), frozenset())
    assert (violation, frozenset()) in got
    got = S.deriv_symbolic(violation, parse_pattern("<put n0 n2>"), store_of(eq(n2, B)))
    assert (S.ANY_STAR, store_of(eq(n2, B), neq(n0, A))) in got
    assert S.deriv_symbolic(put_ab(), parse_pattern("<get k>"), frozenset()) == []


def test_to_text_round_trips():
    for text in (SAFETY, NOT_UNIQUE, VIOLATION, "<put a b> & <put !a _> | 1", "(<x <- get 1>)* 0"):
        r = parse_sre(text)
        assert parse_sre(S.to_text(r)) == r


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_to_text_round_trip_random(seed):
    r = random_sre(random.Random(seed))
    assert parse_sre(S.to_text(r)) == r


# -- agreement with the reference matcher ------------------------------------

traces = st.lists(st.sampled_from(EVENTS), max_size=4)
sigmas = st.fixed_dictionaries({A: st.integers(0, 2), B: st.integers(0, 2)})


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10**9), traces, sigmas)
def test_accepts_matches_backtracking(seed, trace, sigma):
    r = random_sre(random.Random(seed))
    assert S.accepts(r, trace, sigma) == ref_accepts(r, trace, sigma)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from(EVENTS), traces, sigmas)
def test_deriv_preserves_language(seed, e, t, sigma):
    r = random_sre(random.Random(seed))
    assert S.accepts(S.deriv_concrete(r, e, sigma), t, sigma) == ref_accepts(r, [e, *t], sigma)


def test_accepts_exhaustive_small():
    rng = random.Random(7)
    for _ in range(15):
        r = random_sre(rng, 3)
        for sigma in assignments(S.variables(r)):
            for t in traces_upto(EVENTS, 2):
                assert S.accepts(r, t, sigma) == ref_accepts(r, t, sigma)


# -- symbolic derivative soundness -------------------------------------------

P, Q, R = Var("p"), Var("q"), Var("r")
pinned = st.one_of(
    st.builds(lambda x, y: EventPattern("put", (Eq(x), Eq(y))), st.sampled_from([P, Q]), st.sampled_from([Q, R, Const(0)])),
    st.builds(lambda x, y: EventPattern("get", (Eq(x),), Eq(y)), st.sampled_from([P, Q]), st.sampled_from([R, Const(1)])),
)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), pinned)
def test_deriv_symbolic_sound(seed, p):
    r = random_sre(random.Random(seed), 3)
    variables = sorted(S.variables(r) | p.variables() | {A, B})
    short = list(traces_upto(EVENTS[::3], 2))
    for r1, store in S.deriv_symbolic(r, p, frozenset(), SMALL_DOMAIN):
        for sigma in models(store, SMALL_DOMAIN, variables):
            e = next(e for e in EVENTS if ref_accepts(S.Lit(p), [e], sigma))
            for t in short:
                if S.accepts(r1, t, sigma):
                    assert ref_accepts(r, [e, *t], sigma)


def test_safety_regex_bindings_accepting_bad_trace():
    # frozen from the backtracking reference matcher, not from derivatives
    r, t = parse_sre(SAFETY), parse_trace(BAD_TRACE)
    expected = sorted((x, y) for x in range(1, 5) for y in range(1, 5) if ref_accepts(r, t, {A: x, B: y}))
    assert expected == [(1, 2), (3, 2), (3, 4)]
    got = sorted((x, y) for x in range(1, 5) for y in range(1, 5) if S.accepts(r, t, {A: x, B: y}))
    assert got == expected
