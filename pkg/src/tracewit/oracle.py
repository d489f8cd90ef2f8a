"""Ground truth by bounded enumeration and concrete replay.

Nothing in here calls the inference engine.  Searches are breadth-first over
store-coherent prefixes, deduplicated on (store contents, automaton states):
a program's behaviour after a prefix depends only on the store it leaves.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from . import sfa as F
from . import sre as S
from .guards import DEFAULT_DOMAIN, DEFAULT_OPS, Event, models
from .lang import Program, op_table, run_from_store
from .typesys import Judgment


@dataclass(frozen=True)
class OracleConfig:
    domain_size: int = DEFAULT_DOMAIN
    max_prefix_len: int = 6
    max_assignments: int = 100_000

    def __post_init__(self):
        if min(self.domain_size, self.max_prefix_len + 1, self.max_assignments) <= 0:
            raise ValueError("oracle bounds must be positive")


@dataclass
class Evidence:
    assignment: dict
    prefix: list
    produced: list

    def full_trace(self) -> list:
        return list(self.prefix) + list(self.produced)


@dataclass
class Validation:
    ok: bool
    evidence: Optional[Evidence] = None
    exhausted: bool = False
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def coherent_events(bindings: tuple, domain_size: int, ops=None) -> list[Event]:
    """Events that may follow a trace leaving ``bindings`` (key -> value or None)."""
    ops = DEFAULT_OPS if ops is None else ops
    out = []
    for op in ops:
        if op == "put":
            out.extend(Event("put", (k, v)) for k in range(domain_size) for v in range(domain_size))
        elif op == "get":
            out.extend(Event("get", (k,), bindings[k]) for k in range(domain_size) if bindings[k] is not None)
    return out


def _apply(bindings: tuple, e: Event) -> tuple:
    if e.op == "put":
        k, v = e.args
        return bindings[:k] + (v,) + bindings[k + 1:]
    return bindings


def enumerate_traces(ops=None, cfg: OracleConfig = OracleConfig()) -> Iterator[list[Event]]:
    """Every store-coherent trace up to ``max_prefix_len``, length first, then
    lexicographic in (op table order, arguments)."""
    ops = dict(DEFAULT_OPS if ops is None else ops)
    d = cfg.domain_size
    empty = (None,) * d

    def extend(prefix: list, bindings: tuple, n: int):
        if n == 0:
            yield list(prefix)
            return
        for e in coherent_events(bindings, d, ops):
            prefix.append(e)
            yield from extend(prefix, _apply(bindings, e), n - 1)
            prefix.pop()

    for n in range(cfg.max_prefix_len + 1):
        yield from extend([], empty, n)


def all_stores(domain_size: int) -> Iterator[tuple]:
    return itertools.product((None, *range(domain_size)), repeat=domain_size)


def _as_dict(bindings: tuple) -> dict:
    return {k: v for k, v in enumerate(bindings) if v is not None}


def _bfs(stepper: F.Stepper, extra: list, cfg: OracleConfig,
         done: Callable[[tuple, frozenset, tuple], Optional[object]]):
    """Shortest coherent prefix reaching a node where ``done`` returns non-None."""
    d = cfg.domain_size
    a = stepper.a
    start = ((None,) * d, frozenset([a.initial]), tuple(frozenset([x.a.initial]) for x in extra))
    parent: dict = {start: None}
    frontier = [start]
    for depth in range(cfg.max_prefix_len + 1):
        nxt = []
        for node in frontier:
            bindings, states, others = node
            got = done(bindings, states, others)
            if got is not None:
                trace = []
                cur = node
                while parent[cur] is not None:
                    cur, e = parent[cur]
                    trace.append(e)
                return trace[::-1], got
            if depth == cfg.max_prefix_len:
                continue
            for e in coherent_events(bindings, d, a.op_table()):
                states2 = stepper.step(states, e)
                if not states2:
                    continue
                others2 = tuple(x.step(o, e) for x, o in zip(extra, others))
                child = (_apply(bindings, e), states2, others2)
                if child not in parent:
                    parent[child] = (node, e)
                    nxt.append(child)
        frontier = nxt
    return None


def _assignments(variables, store, cfg: OracleConfig):
    """(assignments list, exhausted flag)."""
    got = list(itertools.islice(models(store, cfg.domain_size, variables), cfg.max_assignments + 1))
    return got[:cfg.max_assignments], len(got) > cfg.max_assignments


def validate_witness(j: Judgment, prog: Program, apis, hypothesis, cfg: OracleConfig = OracleConfig(),
                     ops=None) -> Validation:
    """Search for an assignment and a coherent prefix in the hypothesis prefix
    after which the program produces a trace in the hypothesis suffix, with
    prefix and produced trace together inhabiting the judgment's type."""
    ops = ops or (op_table(apis) if apis else dict(DEFAULT_OPS))
    qual = j.qualifier_store()
    variables = (set(j.context_vars()) | S.variables(j.type.context) | S.variables(j.type.effect)
                 | S.variables(hypothesis.prefix) | S.variables(hypothesis.suffix))
    sigmas, exhausted = _assignments(sorted(variables), qual, cfg)
    if not sigmas:
        return Validation(False, reason="judgment qualifiers are unsatisfiable")
    prefix_a = F.compile(hypothesis.prefix, ops)
    suffix_a = F.compile(hypothesis.suffix, ops)
    judged_a = F.compile(S.concat(j.type.context, j.type.effect), ops)
    events = F.all_events(ops, cfg.domain_size)
    params = list(prog.params)
    for sigma in sigmas:
        args = {p: sigma[p] for p in params}
        suffix = F.Stepper(suffix_a, sigma, events)
        runs: dict = {}

        def produced_for(bindings):
            if bindings not in runs:
                out = run_from_store(prog, _as_dict(bindings), args)
                if out is not None and not (suffix.run(frozenset([suffix_a.initial]), out)
                                            & suffix_a.accepting):
                    out = None
                runs[bindings] = out
            return runs[bindings]

        if all(produced_for(b) is None for b in all_stores(cfg.domain_size)):
            continue
        judged = F.Stepper(judged_a, sigma, events)

        def done(bindings, states, others):
            if not states & prefix_a.accepting:
                return None
            out = produced_for(bindings)
            if out is None:
                return None
            if judged.run(others[0], out) & judged_a.accepting:
                return out
            return None

        found = _bfs(F.Stepper(prefix_a, sigma, events), [judged], cfg, done)
        if found is not None:
            prefix, produced = found
            return Validation(True, Evidence(dict(sigma), prefix, produced))
    return Validation(False, exhausted=exhausted,
                      reason="assignment budget exhausted" if exhausted else "refuted within bounds")


def brute_force_witness(prog: Program, apis, spec: S.SRE, spec_vars: Iterable = (),
                        cfg: OracleConfig = OracleConfig(), ops=None) -> Optional[Evidence]:
    """Exhaustive search over assignments, split pivots and coherent prefixes."""
    ops = ops or (op_table(apis) if apis else dict(DEFAULT_OPS))
    spec_vars = tuple(spec_vars)
    a = F.compile(spec, ops, [v for v, _ in spec_vars])
    pivots = frozenset(sp.pivot for sp in F.enumerate_splits(a))
    if not pivots:
        return None
    qual = frozenset(x for v, t in spec_vars for x in t.instantiate(v))
    variables = sorted(set(v for v, _ in spec_vars) | set(prog.params) | S.variables(spec))
    sigmas, _ = _assignments(variables, qual, cfg)
    events = F.all_events(ops, cfg.domain_size)
    for sigma in sigmas:
        args = {p: sigma[p] for p in prog.params}
        step = F.Stepper(a, sigma, events)
        good: dict = {}
        for b in all_stores(cfg.domain_size):
            out = run_from_store(prog, _as_dict(b), args)
            if out is None:
                continue
            ok = frozenset(q for q in pivots if step.run(frozenset([q]), out) & a.accepting)
            if ok:
                good[b] = (ok, out)
        if not good:
            continue

        def done(bindings, states, _others):
            hit = good.get(bindings)
            if hit is not None and states & hit[0]:
                return hit[1]
            return None

        found = _bfs(step, [], cfg, done)
        if found is not None:
            prefix, produced = found
            return Evidence(dict(sigma), prefix, produced)
    return None
