"""Qualified events and the equality/disequality logic over addresses.

Everything here is immutable.  Constraint stores are frozensets of atoms;
satisfiability is decided over a finite address domain ``range(domain_size)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Union

DEFAULT_DOMAIN = 4

# op name -> (arity, returns a value)
DEFAULT_OPS: dict[str, tuple[int, bool]] = {"put": (2, False), "get": (1, True)}


class SortError(TypeError):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str = field(default="addr", compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


Term = Union[Var, Const]
NU = Var("nu")


def term_key(t: Term) -> tuple:
    return (0, t.value, "") if isinstance(t, Const) else (1, 0, t.name)


# -- argument constraints ---------------------------------------------------

@dataclass(frozen=True)
class Wild:
    def __str__(self) -> str:
        return "_"


@dataclass(frozen=True)
class Eq:
    term: Term

    def __str__(self) -> str:
        return str(self.term)


@dataclass(frozen=True)
class Neq:
    term: Term

    def __str__(self) -> str:
        return "!" + str(self.term)


ArgConstraint = Union[Wild, Eq, Neq]
WILD = Wild()


@dataclass(frozen=True)
class EventPattern:
    op: str = ""
    args: tuple = ()
    result: Optional[ArgConstraint] = None
    negated: bool = False
    any: bool = False

    def __post_init__(self):
        if isinstance(self.result, Wild):
            object.__setattr__(self, "result", None)  # one spelling for "no constraint"
        if self.any and (self.op or self.args or self.result is not None or self.negated):
            raise ValueError("an any-event pattern carries no op, args, result or negation")

    @property
    def positive(self) -> "EventPattern":
        return EventPattern(self.op, self.args, self.result)

    def complement(self) -> "EventPattern":
        if self.any:
            raise ValueError("cannot complement the any-event pattern")
        return EventPattern(self.op, self.args, self.result, negated=not self.negated)

    def slots(self) -> tuple:
        """Argument constraints followed by the result constraint."""
        return self.args + ((self.result or WILD),)

    def variables(self) -> frozenset:
        out = set()
        for c in self.slots():
            if isinstance(c, (Eq, Neq)) and isinstance(c.term, Var):
                out.add(c.term)
        return frozenset(out)

    def __str__(self) -> str:
        if self.any:
            return "."
        body = " ".join([self.op] + [str(a) for a in self.args])
        if self.result is not None and not isinstance(self.result, Wild):
            body = f"{self.result} <- {body}"
        return ("~" if self.negated else "") + f"<{body}>"


ANY = EventPattern(any=True)


@dataclass(frozen=True)
class Event:
    op: str
    args: tuple
    result: Optional[int] = None

    def __str__(self) -> str:
        body = " ".join([self.op] + [str(a) for a in self.args])
        if self.result is not None:
            body = f"{self.result} <- {body}"
        return f"<{body}>"


# -- atoms and stores -------------------------------------------------------

@dataclass(frozen=True, order=True)
class Atom:
    kind: str  # "eq" | "neq"
    lhs: Term
    rhs: Term

    def negate(self) -> "Atom":
        return Atom("neq" if self.kind == "eq" else "eq", self.lhs, self.rhs)

    def terms(self) -> tuple:
        return (self.lhs, self.rhs)

    def variables(self) -> frozenset:
        return frozenset(t for t in self.terms() if isinstance(t, Var))

    def __str__(self) -> str:
        return f"{self.lhs} {'=' if self.kind == 'eq' else '!='} {self.rhs}"


def _atom(kind: str, x: Term, y: Term) -> Atom:
    for t in (x, y):
        if isinstance(t, Var) and t.sort not in ("addr", "int"):
            raise SortError(f"{t} has sort {t.sort}; only addr/int terms can be compared")
    if term_key(y) < term_key(x):
        x, y = y, x
    return Atom(kind, x, y)


def eq(x: Term, y: Term) -> Atom:
    return _atom("eq", x, y)


def neq(x: Term, y: Term) -> Atom:
    return _atom("neq", x, y)


ConstraintStore = frozenset
EMPTY_STORE: frozenset = frozenset()


def store_of(*atoms: Atom) -> frozenset:
    return frozenset(a for a in atoms if not (a.kind == "eq" and a.lhs == a.rhs))


def store_variables(store: Iterable[Atom]) -> frozenset:
    out: set = set()
    for a in store:
        out |= a.variables()
    return frozenset(out)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


def _classes(store: Iterable[Atom], extra: Iterable[Term] = ()):
    """Union-find over the equalities.  Returns (term -> class id, classes) or None."""
    uf = _UnionFind()
    for t in extra:
        uf.find(t)
    for a in store:
        uf.find(a.lhs)
        uf.find(a.rhs)
        if a.kind == "eq":
            uf.union(a.lhs, a.rhs)
    groups: dict = {}
    for t in list(uf.parent):
        groups.setdefault(uf.find(t), []).append(t)
    return uf, groups


def models(store: Iterable[Atom], domain_size: int = DEFAULT_DOMAIN,
           variables: Iterable[Var] = ()) -> Iterator[dict]:
    """Yield every assignment of the store's (and the given) variables into
    ``range(domain_size)`` satisfying all atoms, in lexicographic class order."""
    store = list(store)
    uf, groups = _classes(store, variables)
    domain = range(domain_size)
    cls_value: dict = {}
    free = []
    for rep, members in sorted(groups.items(), key=lambda kv: min(term_key(t) for t in kv[1])):
        consts = {t.value for t in members if isinstance(t, Const)}
        if len(consts) > 1:
            return
        if consts:
            (c,) = consts
            if c not in domain and any(isinstance(t, Var) for t in members):
                return
            cls_value[rep] = c
        else:
            free.append(rep)
    diseq: dict = {}
    for a in store:
        if a.kind != "neq":
            continue
        x, y = uf.find(a.lhs), uf.find(a.rhs)
        if x == y:
            return
        diseq.setdefault(x, set()).add(y)
        diseq.setdefault(y, set()).add(x)
    for x, ys in diseq.items():
        if x in cls_value:
            for y in ys:
                if y in cls_value and cls_value[y] == cls_value[x]:
                    return
    # pigeonhole: free classes that are pairwise disequal need distinct values
    if len(free) > domain_size:
        clique = _greedy_clique(free, diseq)
        if clique > domain_size:
            return

    def assign(i: int, current: dict) -> Iterator[dict]:
        if i == len(free):
            yield current
            return
        rep = free[i]
        taken = {current[y] for y in diseq.get(rep, ()) if y in current}
        for v in domain:
            if v in taken:
                continue
            current[rep] = v
            yield from assign(i + 1, current)
            del current[rep]

    members_of = {rep: [t for t in ms if isinstance(t, Var)] for rep, ms in groups.items()}
    for values in assign(0, dict(cls_value)):
        yield {v: values[rep] for rep, vs in members_of.items() for v in vs}


def _greedy_clique(nodes, diseq) -> int:
    best = 0
    for start in nodes:
        clique = [start]
        for n in nodes:
            if n != start and all(n in diseq.get(m, ()) for m in clique):
                clique.append(n)
        best = max(best, len(clique))
    return best


@lru_cache(maxsize=200_000)
def _satisfiable(store: frozenset, domain_size: int) -> bool:
    return next(models(store, domain_size), None) is not None


def satisfiable(store: Iterable[Atom], domain_size: int = DEFAULT_DOMAIN) -> bool:
    return _satisfiable(frozenset(store), domain_size)


def entails(store: Iterable[Atom], atom: Atom, domain_size: int = DEFAULT_DOMAIN) -> bool:
    store = frozenset(store)
    if not satisfiable(store, domain_size):
        raise ValueError("entailment queried against an unsatisfiable store")
    return not satisfiable(store | {atom.negate()}, domain_size)


def holds(atom: Atom, assignment: Mapping[Var, int]) -> bool:
    x, y = value_of(atom.lhs, assignment), value_of(atom.rhs, assignment)
    return (x == y) if atom.kind == "eq" else (x != y)


def value_of(t: Term, assignment: Mapping[Var, int]) -> int:
    if isinstance(t, Const):
        return t.value
    try:
        return assignment[t]
    except KeyError:
        raise KeyError(f"unbound variable {t}") from None


def representative(store: Iterable[Atom], order: Mapping[Var, int]) -> dict:
    """Map every variable to the canonical member of its equality class.

    Constants win; otherwise the variable earliest in ``order`` (unknown
    variables sort last, by name).
    """
    uf, groups = _classes(store)
    out = {}
    for members in groups.values():
        def rank(t):
            if isinstance(t, Const):
                return (0, t.value, "")
            return (1, order.get(t, len(order)), t.name)
        best = min(members, key=rank)
        for t in members:
            if isinstance(t, Var) and t != best:
                out[t] = best
    return out


# -- matching ---------------------------------------------------------------

def _slot_holds(c: ArgConstraint, value: Optional[int], assignment) -> bool:
    if isinstance(c, Wild):
        return True
    if value is None:
        return False
    if isinstance(c, Eq):
        return value == value_of(c.term, assignment)
    return value != value_of(c.term, assignment)


def match_concrete(p: EventPattern, e: Event, assignment: Mapping[Var, int]) -> bool:
    if p.any:
        return True
    if p.negated:
        return not match_concrete(p.positive, e, assignment)
    if p.op != e.op or len(p.args) != len(e.args):
        return False
    if not all(_slot_holds(c, v, assignment) for c, v in zip(p.args, e.args)):
        return False
    return p.result is None or _slot_holds(p.result, e.result, assignment)


def match_guard(guard: tuple, e: Event, assignment: Mapping[Var, int]) -> bool:
    """A guard is a conjunction of patterns."""
    return all(match_concrete(p, e, assignment) for p in guard)


def all_events(ops: Mapping[str, tuple[int, bool]], domain_size: int) -> list[Event]:
    out = []
    dom = range(domain_size)
    for op, (arity, has_result) in ops.items():
        for args in itertools.product(dom, repeat=arity):
            if has_result:
                out.extend(Event(op, args, r) for r in dom)
            else:
                out.append(Event(op, args))
    return out


# -- abduction --------------------------------------------------------------

def _flip(c: ArgConstraint) -> ArgConstraint:
    return Neq(c.term) if isinstance(c, Eq) else Eq(c.term)


def _slot_atoms(cs: list, domain_size: int) -> Optional[list]:
    """Atoms under which one value satisfies every constraint in ``cs``."""
    eqs = [c.term for c in cs if isinstance(c, Eq)]
    neqs = [c.term for c in cs if isinstance(c, Neq)]
    if eqs:
        t0 = eqs[0]
        return [eq(t0, t) for t in eqs[1:] if t != t0] + [neq(t0, u) for u in neqs]
    if len(set(neqs)) < domain_size:
        return []
    # every domain value is excluded unless two excluded terms coincide
    return None


def _branch_rank(store: frozenset, new: frozenset) -> int:
    added = new - store
    if any(a.kind == "eq" for a in added):
        return 0
    if added:
        return 1
    return 2


def overlap(patterns: Iterable[EventPattern], store: Iterable[Atom] = EMPTY_STORE,
            domain_size: int = DEFAULT_DOMAIN) -> list[frozenset]:
    """Extensions of ``store`` under which one event satisfies every pattern.

    Branches are ordered: new equalities first, then new disequalities, then
    the unextended store.
    """
    store = frozenset(store)
    if not satisfiable(store, domain_size):
        return []
    patterns = [p for p in patterns if not p.any]
    pos = [p for p in patterns if not p.negated]
    negs = [p.positive for p in patterns if p.negated]
    if not pos:
        # assumes the alphabet has some event outside every complemented pattern
        return [store]
    op = pos[0].op
    if any(p.op != op for p in pos):
        return []
    width = len(pos[0].args) + 1
    base = [[] for _ in range(width)]
    for p in pos:
        if len(p.args) + 1 != width:
            return []
        for i, c in enumerate(p.slots()):
            if not isinstance(c, Wild):
                base[i].append(c)
    choices = []
    for n in negs:
        if n.op != op:
            choices.append([None])
            continue
        opts = [(i, _flip(c)) for i, c in enumerate(n.slots()) if not isinstance(c, Wild)]
        if not opts:
            return []
        choices.append(opts)
    out: list = []
    for combo in itertools.product(*choices):
        slots = [list(cs) for cs in base]
        for pick in combo:
            if pick is not None:
                slots[pick[0]].append(pick[1])
        atoms: list = []
        for cs in slots:
            got = _slot_atoms(cs, domain_size)
            if got is None:
                break
            atoms.extend(got)
        else:
            new = store | store_of(*atoms)
            if new not in out and satisfiable(new, domain_size):
                out.append(new)
    out.sort(key=lambda s: _branch_rank(store, s))
    return out


def unify_symbolic(p: EventPattern, q: EventPattern, store: Iterable[Atom] = EMPTY_STORE,
                   domain_size: int = DEFAULT_DOMAIN) -> list[frozenset]:
    """Abduce the minimal atom sets under which some event matches both patterns."""
    return overlap((p, q), store, domain_size)


def pattern_entails(p: EventPattern, q: EventPattern, store: Iterable[Atom],
                    domain_size: int = DEFAULT_DOMAIN) -> bool:
    """Every event matching the fully-determined pattern ``p`` matches ``q``
    under every assignment of ``store``."""
    if q.any:
        return True
    store = frozenset(store)

    def slot_forced(c: ArgConstraint, d: ArgConstraint) -> bool:
        # does the value pinned by c always satisfy d?
        if isinstance(d, Wild):
            return True
        if not isinstance(c, Eq):
            return False
        atom = eq(c.term, d.term) if isinstance(d, Eq) else neq(c.term, d.term)
        return entails(store, atom, domain_size)

    if not q.negated:
        if p.op != q.op or len(p.args) != len(q.args):
            return False
        return all(slot_forced(c, d) for c, d in zip(p.slots(), q.slots()))
    body = q.positive
    if p.op != body.op:
        return True
    return any(not isinstance(d, Wild) and slot_forced(c, _flip(d))
               for c, d in zip(p.slots(), body.slots()))
