"""Symbolic finite automata over qualified events.

An edge is labelled by a *guard*: a conjunction (tuple) of event patterns.
Single literals give one-pattern guards; intersection conjoins guards, which
keeps product languages exact without determinizing.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from . import sre as S
from .guards import (
    ANY, DEFAULT_DOMAIN, DEFAULT_OPS, EMPTY_STORE, Const, Event, Var, all_events, eq,
    match_guard, models, overlap, satisfiable, store_variables,
)


@dataclass(frozen=True)
class SFA:
    num_states: int
    initial: int
    accepting: frozenset
    edges: tuple  # ((src, guard, dst), ...)
    declared_vars: tuple = ()
    ops: tuple = tuple(DEFAULT_OPS.items())
    labels: tuple = ()  # optional per-state description (the residual SRE)

    @property
    def states(self) -> range:
        return range(self.num_states)

    def out_edges(self, q: int) -> list:
        return [(g, d) for s, g, d in self.edges if s == q]

    def op_table(self) -> dict:
        return dict(self.ops)

    def is_trivially_empty(self) -> bool:
        return not self.accepting


@dataclass(frozen=True)
class Split:
    prefix: SFA
    suffix: SFA
    pivot: int


# -- compilation ------------------------------------------------------------

@lru_cache(maxsize=None)
def linear_form(r: S.SRE) -> tuple:
    """Antimirov partial derivatives: ((guard, residual), ...)."""
    if isinstance(r, (S.Empty, S.Epsilon)):
        return ()
    if isinstance(r, S.Lit):
        return (((r.pattern,), S.EPS),)
    if isinstance(r, S.Concat):
        out = [(g, S.concat(x, r.right)) for g, x in linear_form(r.left)]
        if S.nullable(r.left):
            out += linear_form(r.right)
        return _dedupe(out)
    if isinstance(r, S.Union_):
        return _dedupe(linear_form(r.left) + linear_form(r.right))
    if isinstance(r, S.Star):
        return _dedupe([(g, S.concat(x, r)) for g, x in linear_form(r.body)])
    out = []
    for g1, x1 in linear_form(r.left):
        for g2, x2 in linear_form(r.right):
            g = _conj(g1, g2)
            if overlap(g):
                out.append((g, S.inter(x1, x2)))
    return _dedupe(out)


def _conj(g1: tuple, g2: tuple) -> tuple:
    out = list(g1)
    for p in g2:
        if p not in out:
            out.append(p)
    real = [p for p in out if not p.any]
    return tuple(real) if real else (ANY,)


def _dedupe(items) -> tuple:
    out = []
    for x in items:
        if isinstance(x[1], S.Empty):
            continue
        if x not in out:
            out.append(x)
    return tuple(out)


def compile(r: S.SRE, ops: Optional[Mapping[str, tuple[int, bool]]] = None,
            declared_vars: Iterable[Var] = ()) -> SFA:
    """One state per reachable partial-derivative class, trimmed."""
    index = {r: 0}
    order = [r]
    edges = []
    work = deque([r])
    while work:
        x = work.popleft()
        for g, y in linear_form(x):
            if y not in index:
                index[y] = len(order)
                order.append(y)
                work.append(y)
            edges.append((index[x], g, index[y]))
    accepting = frozenset(i for i, x in enumerate(order) if S.nullable(x))
    dv = tuple(sorted(set(declared_vars) | S.variables(r)))
    a = SFA(len(order), 0, accepting, tuple(edges), dv,
            tuple((ops or DEFAULT_OPS).items()), tuple(S.to_text(x) for x in order))
    return trim(a)


def trim(a: SFA) -> SFA:
    """Keep states on some initial-to-accepting path; renumber in BFS order."""
    fwd = _reach([a.initial], a.edges, forward=True)
    back = _reach(a.accepting, a.edges, forward=False)
    live = fwd & back
    if a.initial not in live:
        return SFA(1, 0, frozenset(), (), a.declared_vars, a.ops,
                   a.labels[a.initial:a.initial + 1] if a.labels else ())
    order = [a.initial]
    seen = {a.initial}
    queue = deque([a.initial])
    while queue:
        q = queue.popleft()
        for s, g, d in a.edges:
            if s == q and d in live and d not in seen:
                seen.add(d)
                order.append(d)
                queue.append(d)
    ren = {q: i for i, q in enumerate(order)}
    edges = tuple((ren[s], g, ren[d]) for s, g, d in a.edges if s in ren and d in ren)
    labels = tuple(a.labels[q] for q in order) if a.labels else ()
    return SFA(len(order), 0, frozenset(ren[q] for q in a.accepting if q in ren),
               edges, a.declared_vars, a.ops, labels)


def _reach(starts: Iterable[int], edges, forward: bool) -> set:
    succ: dict = {}
    for s, _, d in edges:
        if forward:
            succ.setdefault(s, []).append(d)
        else:
            succ.setdefault(d, []).append(s)
    seen = set(starts)
    stack = list(seen)
    while stack:
        q = stack.pop()
        for n in succ.get(q, ()):
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return seen


def intersect(a: SFA, b: SFA) -> SFA:
    """Product automaton; edge guards are the conjunction of both guards."""
    index = {(a.initial, b.initial): 0}
    order = [(a.initial, b.initial)]
    edges = []
    work = deque(order)
    a_out = {q: a.out_edges(q) for q in a.states}
    b_out = {q: b.out_edges(q) for q in b.states}
    while work:
        p, q = work.popleft()
        for g1, d1 in a_out[p]:
            for g2, d2 in b_out[q]:
                g = _conj(g1, g2)
                if not overlap(g):
                    continue
                key = (d1, d2)
                if key not in index:
                    index[key] = len(order)
                    order.append(key)
                    work.append(key)
                edges.append((index[(p, q)], g, index[key]))
    accepting = frozenset(i for i, (p, q) in enumerate(order)
                          if p in a.accepting and q in b.accepting)
    ops = dict(a.ops)
    ops.update(dict(b.ops))
    labels = ()
    if a.labels and b.labels:
        labels = tuple(f"{a.labels[p]} & {b.labels[q]}" for p, q in order)
    dv = tuple(sorted(set(a.declared_vars) | set(b.declared_vars)))
    return trim(SFA(len(order), 0, accepting, tuple(edges), dv, tuple(ops.items()), labels))


def with_accepting(a: SFA, accepting: Iterable[int]) -> SFA:
    return trim(SFA(a.num_states, a.initial, frozenset(accepting), a.edges,
                    a.declared_vars, a.ops, a.labels))


def with_initial(a: SFA, initial: int) -> SFA:
    return trim(SFA(a.num_states, initial, a.accepting, a.edges,
                    a.declared_vars, a.ops, a.labels))


# -- concrete runs ----------------------------------------------------------

def step(a: SFA, states: frozenset, e: Event, assignment: Mapping[Var, int]) -> frozenset:
    return frozenset(d for s, g, d in a.edges if s in states and match_guard(g, e, assignment))


def run(a: SFA, trace: Iterable[Event], assignment: Mapping[Var, int],
        start: Optional[Iterable[int]] = None) -> frozenset:
    states = frozenset([a.initial] if start is None else start)
    for e in trace:
        if not states:
            break
        states = step(a, states, e, assignment)
    return states


def accepts(a: SFA, trace: Iterable[Event], assignment: Mapping[Var, int]) -> bool:
    return bool(run(a, trace, assignment) & a.accepting)


class Stepper:
    """Concrete transition table of ``a`` under one assignment."""

    def __init__(self, a: SFA, assignment: Mapping[Var, int], events: list[Event]):
        self.a = a
        self.index = {e: i for i, e in enumerate(events)}
        table: dict = {}
        for s, g, d in a.edges:
            for i, e in enumerate(events):
                if match_guard(g, e, assignment):
                    table.setdefault((s, i), set()).add(d)
        self.table = {k: frozenset(v) for k, v in table.items()}
        self._cache: dict = {}

    def step(self, states: frozenset, e: Event) -> frozenset:
        i = self.index[e]
        key = (states, i)
        got = self._cache.get(key)
        if got is None:
            out: set = set()
            for s in states:
                out |= self.table.get((s, i), frozenset())
            got = self._cache[key] = frozenset(out)
        return got

    def run(self, states: frozenset, trace: Iterable[Event]) -> frozenset:
        for e in trace:
            states = self.step(states, e)
        return states


# -- symbolic search --------------------------------------------------------

def _assignment_store(assignment: Optional[Mapping[Var, int]]) -> frozenset:
    if not assignment:
        return EMPTY_STORE
    return frozenset(eq(v, Const(c)) for v, c in assignment.items())


def _concretize(path: list, store: frozenset, variables, events, domain_size: int, max_models: int):
    for sigma in itertools.islice(models(store, domain_size, variables), max_models):
        trace = []
        for g in path:
            e = next((e for e in events if match_guard(g, e, sigma)), None)
            if e is None:
                break
            trace.append(e)
        else:
            return trace, dict(sigma)
    return None


def nonempty_witness(a: SFA, store: Iterable = EMPTY_STORE, domain_size: int = DEFAULT_DOMAIN,
                     max_len: Optional[int] = None,
                     assignment: Optional[Mapping[Var, int]] = None,
                     max_models: int = 256):
    """Shortest accepted concrete trace with a consistent assignment, or None.

    Breadth-first over (state, accumulated store); each edge extends the
    store with the atoms under which its guard is satisfiable.
    """
    store = frozenset(store) | _assignment_store(assignment)
    if not a.accepting or not satisfiable(store, domain_size):
        return None
    if max_len is None:
        max_len = max(1, a.num_states) * (domain_size ** 2 + domain_size)
    events = all_events(a.op_table(), domain_size)
    variables = set(a.declared_vars) | store_variables(store)
    for lits in (g for _, g, _ in a.edges):
        for p in lits:
            variables |= p.variables()
    start = (a.initial, store)
    parent: dict = {start: None}
    frontier = [start]
    out_edges = {q: a.out_edges(q) for q in a.states}
    for depth in range(max_len + 1):
        nxt = []
        for node in frontier:
            q, st = node
            if q in a.accepting:
                path = []
                cur = node
                while parent[cur] is not None:
                    prev, g = parent[cur]
                    path.append(g)
                    cur = prev
                path.reverse()
                got = _concretize(path, st, variables, events, domain_size, max_models)
                if got is not None:
                    return got
            if depth == max_len:
                continue
            for g, d in out_edges[q]:
                for st2 in overlap(g, st, domain_size):
                    child = (d, st2)
                    if child not in parent:
                        parent[child] = (node, g)
                        nxt.append(child)
        if not nxt:
            break
        frontier = nxt
    return None


def is_empty(a: SFA, store: Iterable = EMPTY_STORE, domain_size: int = DEFAULT_DOMAIN,
             assignment: Optional[Mapping[Var, int]] = None) -> bool:
    return nonempty_witness(a, store, domain_size, assignment=assignment) is None


def sample_trace(a: SFA, store: Iterable = EMPTY_STORE, domain_size: int = DEFAULT_DOMAIN,
                 max_len: int = 6):
    return nonempty_witness(a, store, domain_size, max_len=max_len)


# -- splits -----------------------------------------------------------------

def bfs_order(a: SFA) -> list[int]:
    order = [a.initial]
    seen = {a.initial}
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for s, _, d in a.edges:
            if s == q and d not in seen:
                seen.add(d)
                order.append(d)
                queue.append(d)
    return order


def enumerate_splits(a: SFA) -> list[Split]:
    """One split per state whose suffix rejects the empty trace, earliest first."""
    out = []
    for q in bfs_order(a):
        if q in a.accepting:
            continue
        prefix = with_accepting(a, [q])
        suffix = with_initial(a, q)
        if prefix.accepting and suffix.accepting:
            out.append(Split(prefix, suffix, q))
    return out


# -- conversions ------------------------------------------------------------

def guard_sre(g: tuple) -> S.SRE:
    return S.inter(*[S.Lit(p) for p in g])


def to_sre(a: SFA) -> S.SRE:
    """State elimination; exact language."""
    if not a.accepting:
        return S.EMPTY
    n = a.num_states
    start, final = n, n + 1
    arcs: dict = {}

    def add(s, d, r):
        arcs[(s, d)] = S.union(arcs[(s, d)], r) if (s, d) in arcs else r

    add(start, a.initial, S.EPS)
    for s, g, d in a.edges:
        add(s, d, guard_sre(g))
    for q in sorted(a.accepting):
        add(q, final, S.EPS)
    for q in bfs_order(a):
        loop = arcs.pop((q, q), None)
        mid = S.star(loop) if loop is not None else S.EPS
        ins = [(s, r) for (s, d), r in arcs.items() if d == q]
        outs = [(d, r) for (s, d), r in arcs.items() if s == q]
        for key in [k for k in arcs if q in k]:
            del arcs[key]
        for s, r1 in ins:
            for d, r2 in outs:
                add(s, d, S.concat(r1, mid, r2))
    return arcs.get((start, final), S.EMPTY)


def to_dot(a: SFA, name: str = "sfa") -> str:
    """Graphviz description of the automaton."""
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", '  init [shape=point];']
    for q in a.states:
        shape = "doublecircle" if q in a.accepting else "circle"
        tip = a.labels[q].replace('"', "'") if a.labels else ""
        lines.append(f'  q{q} [shape={shape}, tooltip="{tip}"];')
    lines.append(f"  init -> q{a.initial};")
    for s, g, d in a.edges:
        label = " & ".join(str(p) for p in g).replace('"', "'")
        lines.append(f'  q{s} -> q{d} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
