"""Shared fixtures and independent reference implementations for the tests."""

from __future__ import annotations

import itertools
import random
from functools import lru_cache
from pathlib import Path

import pytest

from tracewit import sfa as F
from tracewit import sre as S
from tracewit.guards import ANY, Const, Eq, Event, EventPattern, Neq, Var, WILD
from tracewit.syntax import parse_apis, parse_module

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# the small alphabet used by differential tests: two ops over {0, 1, 2}
SMALL_OPS = {"put": (2, False), "get": (1, True)}
SMALL_DOMAIN = 3
A, B = Var("a"), Var("b")

# the running example
SAFETY = ".* <put a b> ((~<put !a b>)* | (~<put !a b>)* <put a !b> .*)"
BAD_TRACE = "<put 1 2>;<put 3 2>;<put 3 4>;<put 1 2>"
NOT_UNIQUE = ".* <put a b> (~<put a _>)* <put !a b> .*"
LINK = ".* <put a b> (~<put a _>)*"
VIOLATION = "(~<put a _>)* <put !a b> .*"


@pytest.fixture(scope="session")
def apis():
    return parse_apis((CORPUS / "apis.tw").read_text())


@pytest.fixture(scope="session")
def specs(apis):
    return parse_module((CORPUS / "specs.tw").read_text(), apis).specs


@pytest.fixture(scope="session")
def programs(apis):
    return parse_module((CORPUS / "programs.tw").read_text(), apis).programs


# -- reference matcher ------------------------------------------------------
# Independent of derivatives and automata: computes the set of end positions
# reachable from a start position by structural recursion.

def ref_match_event(p: EventPattern, e: Event, sigma) -> bool:
    if p.any:
        return True
    if p.negated:
        return not ref_match_event(p.positive, e, sigma)
    if p.op != e.op or len(p.args) != len(e.args):
        return False
    values = list(e.args) + [e.result]
    for c, v in zip(p.args + ((p.result or WILD),), values):
        if c == WILD:
            continue
        if v is None:
            return False
        want = c.term.value if isinstance(c.term, Const) else sigma[c.term]
        if isinstance(c, Eq) and v != want:
            return False
        if isinstance(c, Neq) and v == want:
            return False
    return True


def ref_accepts(r, trace, sigma) -> bool:
    trace = tuple(trace)
    n = len(trace)

    @lru_cache(maxsize=None)
    def ends(node, i) -> frozenset:
        if isinstance(node, S.Empty):
            return frozenset()
        if isinstance(node, S.Epsilon):
            return frozenset([i])
        if isinstance(node, S.Lit):
            return frozenset([i + 1]) if i < n and ref_match_event(node.pattern, trace[i], sigma) else frozenset()
        if isinstance(node, S.Concat):
            return frozenset(k for j in ends(node.left, i) for k in ends(node.right, j))
        if isinstance(node, S.Union_):
            return ends(node.left, i) | ends(node.right, i)
        if isinstance(node, S.Inter):
            return ends(node.left, i) & ends(node.right, i)
        if isinstance(node, S.Star):
            seen = {i}
            todo = [i]
            while todo:
                j = todo.pop()
                for k in ends(node.body, j):
                    if k not in seen:
                        seen.add(k)
                        todo.append(k)
            return frozenset(seen)
        raise TypeError(node)

    return n in ends(r, 0)


# -- random SREs ------------------------------------------------------------

def random_pattern(rng: random.Random, variables=(A, B), domain=SMALL_DOMAIN, ops=SMALL_OPS) -> EventPattern:
    if rng.random() < 0.1:
        return ANY

    def slot():
        k = rng.random()
        if k < 0.3:
            return WILD
        t = Const(rng.randrange(domain)) if rng.random() < 0.25 else rng.choice(variables)
        return Eq(t) if k < 0.75 else Neq(t)

    op = rng.choice(sorted(ops))
    arity, has_result = ops[op]
    args = tuple(slot() for _ in range(arity))
    result = slot() if has_result and rng.random() < 0.5 else None
    return EventPattern(op, args, result, negated=rng.random() < 0.3)


def random_sre(rng: random.Random, depth: int = 4, **kw) -> S.SRE:
    if depth <= 1 or rng.random() < 0.25:
        k = rng.random()
        if k < 0.05:
            return S.EPS
        if k < 0.08:
            return S.EMPTY
        return S.Lit(random_pattern(rng, **kw))
    kind = rng.choice(["concat", "concat", "union", "inter", "star"])
    if kind == "star":
        return S.star(random_sre(rng, depth - 1, **kw))
    left, right = random_sre(rng, depth - 1, **kw), random_sre(rng, depth - 1, **kw)
    return {"concat": S.concat, "union": S.union, "inter": S.inter}[kind](left, right)


def random_sres(count: int, seed: int, depth: int = 4) -> list:
    rng = random.Random(seed)
    return [random_sre(rng, depth) for _ in range(count)]


def assignments(variables, domain=SMALL_DOMAIN):
    variables = sorted(variables)
    for values in itertools.product(range(domain), repeat=len(variables)):
        yield dict(zip(variables, values))


def traces_upto(events, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(events, repeat=n)


def explore_pairs(r, a, sigma, events, max_len):
    """Compare derivative and SFA membership on every trace up to ``max_len``.

    Traces that reach the same (residual, state set) pair behave identically
    on every extension, so the walk is over distinct pairs per length.
    Returns a list of disagreeing traces (empty when they agree).
    """
    stepper = F.Stepper(a, sigma, events)
    start = (r, frozenset([a.initial]))
    layer = {start: ()}
    bad = []
    for depth in range(max_len + 1):
        nxt: dict = {}
        for (res, states), trace in layer.items():
            if S.nullable(res) != bool(states & a.accepting):
                bad.append(trace)
            if depth == max_len:
                continue
            for e in events:
                key = (S.deriv_concrete(res, e, sigma), stepper.step(states, e))
                nxt.setdefault(key, trace + (e,))
        layer = nxt
    return bad
