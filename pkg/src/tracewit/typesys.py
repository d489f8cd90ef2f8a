"""Coverage types, trace-augmented triple types and witness judgments."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

from . import sre as S
from .guards import (
    DEFAULT_DOMAIN, NU, Atom, Const, SortError, Term, Var, eq, entails, neq,
    representative, satisfiable, store_of,
)


class EliminationError(Exception):
    """A local variable could neither be substituted nor dropped."""


@dataclass(frozen=True)
class CoverageType:
    base: str = "addr"
    qualifier: tuple = ()  # conjunction of atoms over NU and context variables

    def variables(self) -> frozenset:
        out: set = set()
        for a in self.qualifier:
            out |= a.variables()
        return frozenset(out - {NU})

    def instantiate(self, t: Term) -> tuple:
        """Qualifier atoms with NU replaced by ``t``."""
        return tuple(subst_atom(a, {NU: t}) for a in self.qualifier)

    def __str__(self) -> str:
        if not self.qualifier:
            return f"{{{self.base} | true}}"
        body = " and ".join(show_qualifier_atom(a) for a in self.qualifier)
        return f"{{{self.base} | {body}}}"


def show_qualifier_atom(a: Atom) -> str:
    lhs, rhs = (a.rhs, a.lhs) if a.rhs == NU else (a.lhs, a.rhs)
    return f"{lhs} {'=' if a.kind == 'eq' else '!='} {rhs}"


TOP_ADDR = CoverageType("addr")
UNIT = CoverageType("unit")


@dataclass(frozen=True)
class TripleType:
    context: S.SRE
    result: CoverageType
    effect: S.SRE

    def __str__(self) -> str:
        return f"<{S.to_text(self.context)}> {self.result} <{S.to_text(self.effect)}>"


@dataclass(frozen=True)
class Judgment:
    context: tuple  # ((Var, CoverageType), ...)
    subject: str
    type: TripleType
    params: tuple = ()  # program parameters (Var), never eliminated

    def context_vars(self) -> list[Var]:
        return [x for x, _ in self.context]

    def qualifier_store(self) -> frozenset:
        return store_of(*[a for x, t in self.context for a in t.instantiate(x)])

    def __str__(self) -> str:
        ctx = ", ".join(f"{x}:{t}" for x, t in self.context)
        return f"{ctx} |- {self.subject} : {self.type}"


def subst_atom(a: Atom, mapping: Mapping[Var, Term]) -> Atom:
    lhs = mapping.get(a.lhs, a.lhs)
    rhs = mapping.get(a.rhs, a.rhs)
    return eq(lhs, rhs) if a.kind == "eq" else neq(lhs, rhs)


def _trivial(a: Atom) -> bool:
    return a.kind == "eq" and a.lhs == a.rhs


def subst_type(t: CoverageType, mapping: Mapping[Var, Term]) -> CoverageType:
    atoms = []
    for a in t.qualifier:
        b = subst_atom(a, mapping)
        if not _trivial(b) and b not in atoms:
            atoms.append(b)
    return CoverageType(t.base, tuple(atoms))


def subst_triple(t: TripleType, mapping: Mapping[Var, Term]) -> TripleType:
    return TripleType(S.subst(t.context, mapping), subst_type(t.result, mapping),
                      S.subst(t.effect, mapping))


def subst(j: Judgment, x: Var, t: Term) -> Judgment:
    """Replace ``x`` by ``t`` in every qualifier and SRE of ``j``."""
    if x == t:
        return j
    if isinstance(t, Var) and x.sort != t.sort:
        raise SortError(f"cannot substitute {t}:{t.sort} for {x}:{x.sort}")
    mapping = {x: t}
    ctx = tuple((y, subst_type(ty, mapping)) for y, ty in j.context)
    return replace(j, context=ctx, type=subst_triple(j.type, mapping))


def qualifiers_from_store(order: Iterable[Var], store: Iterable[Atom],
                          declared: Optional[Mapping[Var, CoverageType]] = None) -> tuple:
    """Distribute atoms over an ordered context: each atom goes to the latest
    variable it mentions, with that variable rewritten to NU."""
    order = list(order)
    index = {x: i for i, x in enumerate(order)}
    declared = declared or {}
    quals: dict = {x: [] for x in order}
    for a in sorted(store, key=str):
        vs = [v for v in a.variables() if v in index]
        if len(vs) != len(a.variables()) or not vs:
            continue
        last = max(vs, key=index.__getitem__)
        q = subst_atom(a, {last: NU})
        if q not in quals[last]:
            quals[last].append(q)
    out = []
    for x in order:
        base = declared.get(x, TOP_ADDR).base
        out.append((x, CoverageType(base, tuple(quals[x]))))
    return tuple(out)


def eliminate_locals(j: Judgment, locals_: Iterable[Var], store: Iterable[Atom],
                     domain_size: int = DEFAULT_DOMAIN) -> tuple[Judgment, frozenset]:
    """Remove local variables from ``j``.

    A local entailed equal to a constant or a non-local context variable is
    substituted away; a local absent from the type is dropped.  Returns the
    new judgment and the store rewritten over the remaining variables.
    """
    store = frozenset(store)
    locals_ = list(locals_)
    local_set = set(locals_)
    params = set(j.params)
    bad = local_set & params
    if bad:
        raise EliminationError(f"cannot eliminate program parameter(s) {sorted(v.name for v in bad)}")
    keep = [x for x in j.context_vars() if x not in local_set]
    order = {x: i for i, x in enumerate(keep)}
    reps = representative(store, order)
    mapping: dict = {}
    for x in locals_:
        if x.sort == "unit":
            continue
        r = reps.get(x)
        if r is not None and r not in local_set and (isinstance(r, Const) or r in order):
            mapping[x] = r
            continue
        for cand in keep:
            if cand.sort == x.sort and entails(store, eq(x, cand), domain_size):
                mapping[x] = cand
                break
    new_type = subst_triple(j.type, mapping)
    mentioned = S.variables(new_type.context) | S.variables(new_type.effect) | new_type.result.variables()
    leftover = [x for x in locals_ if x not in mapping and x in mentioned]
    if leftover:
        raise EliminationError(
            "local(s) neither determined nor unused: " + ", ".join(v.name for v in leftover))
    new_store = frozenset(
        b for b in (subst_atom(a, mapping) for a in store)
        if not _trivial(b) and not (b.variables() & local_set))
    declared = dict(j.context)
    ctx = qualifiers_from_store(keep, new_store, declared)
    return Judgment(ctx, j.subject, new_type, j.params), new_store


def check_value(v: Term, t: CoverageType, store: Iterable[Atom] = (),
                domain_size: int = DEFAULT_DOMAIN) -> bool:
    """Must-style check: every value the type denotes is the value of ``v``."""
    if isinstance(v, Var) and v.sort != t.base and t.base in ("addr", "int") and v.sort in ("addr", "int"):
        raise SortError(f"{v} has sort {v.sort}, expected {t.base}")
    if t.base == "unit":
        return True
    store = frozenset(store) | store_of(*t.qualifier)
    if not satisfiable(store, domain_size):
        return True
    return entails(store, eq(NU, v), domain_size)
