"""Symbolic regular expressions over qualified events.

Nodes are built through the smart constructors (``concat``, ``union``,
``inter``, ``star``) which keep the tree normalized: Concat/Union/Inter are
right-nested, Empty and Epsilon are simplified away, Star bodies are never
Empty or Epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .guards import (
    ANY, DEFAULT_DOMAIN, Const, Eq, Event, EventPattern, Neq, Term, Var, Wild,
    match_concrete, overlap,
)


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Lit:
    pattern: EventPattern


@dataclass(frozen=True)
class Concat:
    left: "SRE"
    right: "SRE"


@dataclass(frozen=True)
class Union_:
    left: "SRE"
    right: "SRE"


@dataclass(frozen=True)
class Star:
    body: "SRE"


@dataclass(frozen=True)
class Inter:
    left: "SRE"
    right: "SRE"


SRE = Union[Empty, Epsilon, Lit, Concat, Union_, Star, Inter]

EMPTY = Empty()
EPS = Epsilon()
ANY_STAR = Star(Lit(ANY))


def lit(p: EventPattern) -> SRE:
    return Lit(p)


def concat(*rs: SRE) -> SRE:
    out: SRE = EPS
    for r in reversed(rs):
        out = _concat2(r, out)
    return out


def _concat2(a: SRE, b: SRE) -> SRE:
    if isinstance(a, Empty) or isinstance(b, Empty):
        return EMPTY
    if isinstance(a, Epsilon):
        return b
    if isinstance(b, Epsilon):
        return a
    if isinstance(a, Concat):
        return _concat2(a.left, _concat2(a.right, b))
    return Concat(a, b)


def _flatten(r: SRE, cls) -> list:
    out = []
    while isinstance(r, cls):
        out.extend(_flatten(r.left, cls))
        r = r.right
    out.append(r)
    return out


def union(*rs: SRE) -> SRE:
    items: list = []
    for r in rs:
        for x in _flatten(r, Union_):
            if not isinstance(x, Empty) and x not in items:
                items.append(x)
    if not items:
        return EMPTY
    out = items[-1]
    for x in reversed(items[:-1]):
        out = Union_(x, out)
    return out


def inter(*rs: SRE) -> SRE:
    items: list = []
    for r in rs:
        for x in _flatten(r, Inter):
            if isinstance(x, Empty):
                return EMPTY
            if x != ANY_STAR and x not in items:
                items.append(x)
    if not items:
        return ANY_STAR
    out = items[-1]
    for x in reversed(items[:-1]):
        out = Inter(x, out)
    return out


def star(r: SRE) -> SRE:
    if isinstance(r, (Empty, Epsilon)):
        return EPS
    if isinstance(r, Star):
        return r
    return Star(r)


@lru_cache(maxsize=None)
def nullable(r: SRE) -> bool:
    if isinstance(r, (Epsilon, Star)):
        return True
    if isinstance(r, (Empty, Lit)):
        return False
    if isinstance(r, (Concat, Inter)):
        return nullable(r.left) and nullable(r.right)
    return nullable(r.left) or nullable(r.right)


def deriv_concrete(r: SRE, e: Event, assignment: Mapping[Var, int]) -> SRE:
    """Brzozowski derivative of ``r`` by the concrete event ``e``."""
    if isinstance(r, (Empty, Epsilon)):
        return EMPTY
    if isinstance(r, Lit):
        return EPS if match_concrete(r.pattern, e, assignment) else EMPTY
    if isinstance(r, Concat):
        head = concat(deriv_concrete(r.left, e, assignment), r.right)
        if nullable(r.left):
            return union(head, deriv_concrete(r.right, e, assignment))
        return head
    if isinstance(r, Union_):
        return union(deriv_concrete(r.left, e, assignment), deriv_concrete(r.right, e, assignment))
    if isinstance(r, Star):
        return concat(deriv_concrete(r.body, e, assignment), r)
    return inter(deriv_concrete(r.left, e, assignment), deriv_concrete(r.right, e, assignment))


def accepts(r: SRE, trace: Iterable[Event], assignment: Mapping[Var, int]) -> bool:
    for e in trace:
        r = deriv_concrete(r, e, assignment)
        if isinstance(r, Empty):
            return False
    return nullable(r)


def deriv_symbolic(r: SRE, p: EventPattern, store: frozenset,
                   domain_size: int = DEFAULT_DOMAIN) -> list[tuple[SRE, frozenset]]:
    """Derivative of ``r`` by a program-produced pattern ``p``.

    ``p`` must pin every slot with an equality (as produced events do).  Each
    branch ``(r', S')`` extends ``store`` with the atoms abduced to make the
    event consume one leading literal of ``r``.
    """
    out: list = []
    for branch in _dsym(r, p, frozenset(store), domain_size):
        if branch not in out:
            out.append(branch)
    return out


def _dsym(r: SRE, p: EventPattern, store: frozenset, d: int) -> list:
    if isinstance(r, (Empty, Epsilon)):
        return []
    if isinstance(r, Lit):
        return [(EPS, s) for s in overlap((p, r.pattern), store, d)]
    if isinstance(r, Concat):
        out = [(concat(r1, r.right), s) for r1, s in _dsym(r.left, p, store, d)]
        if nullable(r.left):
            out += _dsym(r.right, p, store, d)
        return out
    if isinstance(r, Union_):
        return _dsym(r.left, p, store, d) + _dsym(r.right, p, store, d)
    if isinstance(r, Star):
        return [(concat(r1, r), s) for r1, s in _dsym(r.body, p, store, d)]
    out = []
    for r1, s1 in _dsym(r.left, p, store, d):
        for r2, s2 in _dsym(r.right, p, s1, d):
            out.append((inter(r1, r2), s2))
    return out


# -- traversal --------------------------------------------------------------

def literals(r: SRE) -> list[EventPattern]:
    """Patterns of all literals, left to right, without duplicates."""
    out: list = []

    def walk(x):
        if isinstance(x, Lit):
            if x.pattern not in out:
                out.append(x.pattern)
        elif isinstance(x, Star):
            walk(x.body)
        elif isinstance(x, (Concat, Union_, Inter)):
            walk(x.left)
            walk(x.right)

    walk(r)
    return out


def variables(r: SRE) -> frozenset:
    out: set = set()
    for p in literals(r):
        out |= p.variables()
    return frozenset(out)


def subst_pattern(p: EventPattern, mapping: Mapping[Var, Term]) -> EventPattern:
    if p.any:
        return p

    def sub(c):
        if isinstance(c, Eq):
            return Eq(mapping.get(c.term, c.term))
        if isinstance(c, Neq):
            return Neq(mapping.get(c.term, c.term))
        return c

    return EventPattern(p.op, tuple(sub(c) for c in p.args),
                        None if p.result is None else sub(p.result), p.negated)


def subst(r: SRE, mapping: Mapping[Var, Term]) -> SRE:
    """Simultaneous substitution of terms for variables."""
    if not mapping:
        return r
    if isinstance(r, Lit):
        return Lit(subst_pattern(r.pattern, mapping))
    if isinstance(r, Concat):
        return concat(subst(r.left, mapping), subst(r.right, mapping))
    if isinstance(r, Union_):
        return union(subst(r.left, mapping), subst(r.right, mapping))
    if isinstance(r, Inter):
        return inter(subst(r.left, mapping), subst(r.right, mapping))
    if isinstance(r, Star):
        return star(subst(r.body, mapping))
    return r


def concat_items(r: SRE) -> list:
    """Factors of a right-nested concatenation, left to right."""
    out = []
    while isinstance(r, Concat):
        out.append(r.left)
        r = r.right
    out.append(r)
    return out


def tail_star(r: SRE):
    """The trailing Star of a right-nested concatenation, if any."""
    while isinstance(r, Concat):
        r = r.right
    return r if isinstance(r, Star) else None


# -- printing ---------------------------------------------------------------

_PREC = {Union_: 0, Inter: 1, Concat: 2}


def to_text(r: SRE) -> str:
    """Concrete syntax; ``parse_sre(to_text(r)) == r``."""
    return _show(r, 0)


def _show(r: SRE, ctx: int) -> str:
    if isinstance(r, Empty):
        return "0"
    if isinstance(r, Epsilon):
        return "1"
    if isinstance(r, Lit):
        return str(r.pattern)
    if isinstance(r, Star):
        body = r.body
        inner = _show(body, 3)
        if isinstance(body, Lit) and body.pattern.negated:
            inner = f"({inner})"
        return inner + "*"
    prec = _PREC[type(r)]
    sep = {Union_: " | ", Inter: " & ", Concat: " "}[type(r)]
    parts = [_show(x, prec + 1) for x in _flatten(r, type(r))]
    text = sep.join(parts)
    return f"({text})" if prec < ctx else text


def pattern_of_event(e: Event) -> EventPattern:
    return EventPattern(e.op, tuple(Eq(Const(a)) for a in e.args),
                        None if e.result is None else Eq(Const(e.result)))


__all__ = [
    "SRE", "Empty", "Epsilon", "Lit", "Concat", "Union_", "Star", "Inter",
    "EMPTY", "EPS", "ANY_STAR", "lit", "concat", "union", "inter", "star",
    "nullable", "deriv_concrete", "accepts", "deriv_symbolic", "literals",
    "variables", "subst", "subst_pattern", "tail_star", "to_text", "Wild",
]
