"""Witness synthesis: underapproximate, abduction-driven type inference.

For each split of the incorrectness automaton (a *hypothesis*: a context
prefix that happened before the program and an effect suffix the program
must produce) the program's calls are processed left to right:

* the call's required context is either discharged by abducing that its
  ghost literal aligns with a literal already guaranteed by the context, or
  intersected into the context;
* its effect literal is appended to the context and consumed by the effect
  suffix through a symbolic derivative, abducing atoms as needed.

Search is depth-first with fixed branch orders, so results are deterministic.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from . import sfa as F
from . import sre as S
from .guards import (
    DEFAULT_DOMAIN, NU, Atom, EventPattern, Var, eq, pattern_entails, representative,
    satisfiable, store_of, unify_symbolic,
)
from .lang import APISignature, Call, Program, op_table
from .typesys import (
    CoverageType, EliminationError, Judgment, TripleType, eliminate_locals,
    qualifiers_from_store, subst_type,
)


@dataclass(frozen=True)
class Budgets:
    max_hypotheses: int = 16
    max_branches: int = 10_000
    timeout: float = 10.0
    domain_size: int = DEFAULT_DOMAIN
    max_prefix: int = 6


@dataclass(frozen=True)
class Hypothesis:
    split: F.Split
    prefix: S.SRE
    suffix: S.SRE
    spec_vars: tuple  # ((Var, CoverageType), ...)


def enumerate_hypotheses(spec: S.SRE, spec_vars: Iterable = (), ops=None) -> Iterator[Hypothesis]:
    spec_vars = tuple(spec_vars)
    a = F.compile(spec, ops, [v for v, _ in spec_vars])
    for split in F.enumerate_splits(a):
        yield Hypothesis(split, F.to_sre(split.prefix), F.to_sre(split.suffix), spec_vars)


def spec_store(spec_vars: Iterable) -> frozenset:
    return store_of(*[a for v, t in spec_vars for a in t.instantiate(v)])


@dataclass(frozen=True)
class InferState:
    store: frozenset
    order: tuple  # every variable in scope, oldest first
    ctx_sre: S.SRE
    eff_remainder: S.SRE
    produced: tuple = ()  # EventPattern per call
    guarantees: tuple = ()  # SREs known to contain every trace of ctx_sre
    locals: tuple = ()
    pre_ctx: S.SRE = S.EPS  # context in front of the latest call
    result: CoverageType = CoverageType("unit")
    declared: tuple = ()  # ((Var, CoverageType), ...) for spec vars and params

    def typing_context(self) -> tuple:
        return qualifiers_from_store(self.order, self.store, dict(self.declared))


@dataclass
class InferStats:
    hypotheses: int = 0
    branches: int = 0
    elapsed: float = 0.0
    reason: str = ""


@dataclass
class InferResult:
    judgment: Optional[Judgment]
    hypothesis: Optional[Hypothesis] = None
    abduced: tuple = ()
    store: frozenset = frozenset()
    final_state: Optional[InferState] = None
    stats: InferStats = field(default_factory=InferStats)

    def __bool__(self) -> bool:
        return self.judgment is not None


class BudgetExceeded(Exception):
    pass


def _fresh(name: str, taken: set) -> Var:
    while name in taken:
        name += "'"
    return Var(name)


def instantiate(api: APISignature, bind: Optional[Var], args: tuple, call_index: int,
                taken: Iterable[str]) -> tuple[dict, list]:
    """Mapping for params and ghosts; returns (mapping, fresh ghost vars)."""
    taken = set(taken)
    mapping: dict = dict(zip(api.params, args))
    fresh = []
    for g in api.ghosts:
        pins_result = any(a.kind == "eq" and set(a.terms()) == {g, Var("nu")}
                          for a in api.ensures.qualifier)
        if bind is not None and pins_result:
            mapping[g] = bind
        else:
            v = _fresh(f"{g.name}_{call_index}", taken)
            taken.add(v.name)
            mapping[g] = v
            fresh.append(v)
    return mapping, fresh


def _canon(r: S.SRE, store: frozenset, order: Mapping[Var, int]) -> S.SRE:
    return S.subst(r, representative(store, order))


def _absorbs(g: S.SRE, p: EventPattern, store: frozenset, d: int) -> bool:
    if g == S.ANY_STAR:
        return True
    tail = S.tail_star(g)
    return (tail is not None and isinstance(tail.body, S.Lit)
            and pattern_entails(p, tail.body.pattern, store, d))


def _included(g: S.SRE, req: S.SRE, store: frozenset, d: int) -> bool:
    """Sufficient check that every trace of ``g`` is in ``req`` (both canonical).

    Handles ``req = [.*] X (~L)*`` against ``g = [...] X e1 .. ek`` where each
    trailing factor of ``g`` stays inside ``(~L)*``.
    """
    if g == req:
        return True
    gi, ri = S.concat_items(g), S.concat_items(req)
    body = None
    if len(ri) > 1 and isinstance(ri[-1], S.Star) and isinstance(ri[-1].body, S.Lit):
        body = ri[-1].body.pattern
        ri = ri[:-1]
    open_front = ri[0] == S.ANY_STAR
    core = ri[1:] if open_front else ri
    while True:
        if open_front and (not core or gi[-len(core):] == core) and len(gi) >= len(core):
            return True
        if not open_front and gi == core:
            return True
        if body is None or len(gi) <= 1:
            return False
        last = gi[-1]
        if isinstance(last, S.Star):
            last = last.body
        if not (isinstance(last, S.Lit) and pattern_entails(last.pattern, body, store, d)):
            return False
        gi = gi[:-1]


def _nonempty(r: S.SRE, store: frozenset, budgets: Budgets, extra_len: int, ops) -> bool:
    a = F.compile(r, ops)
    return F.nonempty_witness(a, store, budgets.domain_size,
                              max_len=budgets.max_prefix + extra_len) is not None


def step_call(s: InferState, bind: Optional[Var], api: APISignature, args: tuple,
              call_index: int = 0, budgets: Budgets = Budgets(),
              ops=None) -> list[InferState]:
    """All successor states of one API call, in exploration order."""
    d = budgets.domain_size
    mapping, fresh = instantiate(api, bind, args, call_index, [v.name for v in s.order])
    order = s.order + tuple(fresh) + ((bind,) if bind is not None else ())
    index = {v: i for i, v in enumerate(order)}
    requires = S.subst(api.requires, mapping)
    effect = S.subst(api.effect, mapping)
    if not isinstance(effect, S.Lit):
        raise ValueError(f"effect of {api.name} must be a single event literal")
    event = effect.pattern
    result = subst_type(api.ensures, mapping)

    # (store, ctx, guarantees) candidates: discharged first, then intersected
    discharged, aligned, plain = [], [], []
    if requires == S.ANY_STAR:
        discharged.append((s.store, s.ctx_sre, s.guarantees))
    else:
        ghosts = set(mapping[g] for g in api.ghosts)
        hooks = [p for p in S.literals(requires)
                 if not p.negated and not p.any and p.variables() & ghosts]
        stores = [s.store]
        for p in hooks:
            for g in s.guarantees:
                for q in S.literals(g):
                    if q.any or q.negated or q.op != p.op:
                        continue
                    for st in unify_symbolic(p, q, s.store, d):
                        if st not in stores:
                            stores.append(st)
        for st in stores:
            canon = _canon(requires, st, index)
            if any(_included(_canon(g, st, index), canon, st, d) for g in s.guarantees):
                discharged.append((st, s.ctx_sre, s.guarantees))
            else:
                bucket = plain if st == s.store else aligned
                bucket.append((st, S.inter(s.ctx_sre, requires), s.guarantees + (requires,)))
    out = []
    ops = ops or dict(F.DEFAULT_OPS)
    for st, ctx, guarantees in discharged + aligned + plain:
        if not _nonempty(ctx, st, budgets, call_index, ops):
            continue
        new_ctx = S.concat(ctx, S.Lit(event))
        for eff, st2 in S.deriv_symbolic(s.eff_remainder, event, st, d):
            if st2 != st and not _nonempty(new_ctx, st2, budgets, call_index + 1, ops):
                continue
            # every guarantee survives, extended by the event unless it absorbs it
            kept = tuple(g if _absorbs(g, event, st2, d) else S.concat(g, S.Lit(event))
                         for g in guarantees)
            mine = S.concat(S.ANY_STAR, S.Lit(event))
            if mine not in kept:
                kept += (mine,)
            out.append(InferState(
                store=st2, order=order, ctx_sre=new_ctx, eff_remainder=eff,
                produced=s.produced + (event,), guarantees=kept,
                locals=s.locals + tuple(fresh) + ((bind,) if bind is not None else ()),
                pre_ctx=ctx, result=result, declared=s.declared))
    return out


def _judgment(prog: Program, s: InferState) -> Judgment:
    if isinstance(prog.final, Call):
        triple = TripleType(s.pre_ctx, s.result, S.Lit(s.produced[-1]))
    else:
        x = prog.final
        base = x.sort if isinstance(x, Var) else "addr"
        triple = TripleType(s.ctx_sre, CoverageType(base, (eq(NU, x),)), S.EPS)
    return Judgment(s.typing_context(), prog.name, triple, tuple(prog.params))


def infer_witness(prog: Program, apis: Mapping[str, APISignature], spec: S.SRE,
                  spec_vars: Iterable = (), budgets: Budgets = Budgets()) -> InferResult:
    """First witness judgment in hypothesis-then-branch order, or a diagnostic."""
    start = time.monotonic()
    spec_vars = tuple(spec_vars)
    stats = InferStats()
    ops = op_table(apis)
    base = spec_store(spec_vars)
    declared = spec_vars + tuple((p, CoverageType(p.sort)) for p in prog.params)
    order0 = tuple(v for v, _ in spec_vars) + tuple(prog.params)
    calls = prog.calls()
    for c in [c for _, c in calls]:
        if c.api not in apis:
            raise KeyError(f"unknown API {c.api!r}")

    def tick():
        stats.branches += 1
        if stats.branches > budgets.max_branches:
            raise BudgetExceeded("branch budget exhausted")
        if time.monotonic() - start > budgets.timeout:
            raise BudgetExceeded("timeout")

    def dfs(s: InferState, i: int, hyp: Hypothesis):
        tick()
        if i == len(calls):
            if not S.nullable(s.eff_remainder):
                return None
            if not _nonempty(s.ctx_sre, s.store, budgets, len(calls), ops):
                return None
            j = _judgment(prog, s)
            try:
                j2, st = eliminate_locals(j, s.locals, s.store, budgets.domain_size)
            except EliminationError:
                return None
            return j2, st, s
        bind, call = calls[i]
        for nxt in step_call(s, bind, apis[call.api], call.args, i + 1, budgets, ops):
            got = dfs(nxt, i + 1, hyp)
            if got is not None:
                return got
        return None

    if satisfiable(base, budgets.domain_size):
        try:
            for hyp in itertools.islice(enumerate_hypotheses(spec, spec_vars, ops), budgets.max_hypotheses):
                stats.hypotheses += 1
                if not _nonempty(hyp.prefix, base, budgets, 0, ops):
                    continue
                s0 = InferState(store=base, order=order0, ctx_sre=hyp.prefix,
                                eff_remainder=hyp.suffix, guarantees=(hyp.prefix,),
                                pre_ctx=hyp.prefix, declared=declared)
                got = dfs(s0, 0, hyp)
                if got is not None:
                    j, st, leaf = got
                    stats.elapsed = time.monotonic() - start
                    stats.reason = "witness"
                    abduced = tuple(sorted(leaf.store - base, key=lambda a: _atom_rank(a, leaf)))
                    return InferResult(j, hyp, abduced, st, leaf, stats)
            stats.reason = "no witness"
        except BudgetExceeded as exc:
            stats.reason = str(exc)
    else:
        stats.reason = "unsatisfiable spec variable qualifiers"
    stats.elapsed = time.monotonic() - start
    return InferResult(None, stats=stats)


def _atom_rank(a: Atom, s: InferState):
    index = {v: i for i, v in enumerate(s.order)}
    hi = max((index.get(v, len(index)) for v in a.variables()), default=-1)
    return (hi, a.kind != "eq", str(a))


def show_atom(a: Atom, locals_: Iterable[Var] = ()) -> str:
    """Print an atom with a local variable, if any, on the left."""
    locals_ = set(locals_)
    lhs, rhs = a.lhs, a.rhs
    if rhs in locals_ and lhs not in locals_:
        lhs, rhs = rhs, lhs
    return f"{lhs} {'=' if a.kind == 'eq' else '!='} {rhs}"
