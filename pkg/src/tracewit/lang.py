"""Straight-line client programs, API signatures and a replaying interpreter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from . import sre as S
from .guards import Const, Event, Term, Var, value_of
from .typesys import CoverageType


@dataclass(frozen=True)
class APISignature:
    name: str
    params: tuple  # (Var, ...)
    ghosts: tuple = ()  # (Var, ...)
    requires: S.SRE = S.ANY_STAR
    ensures: CoverageType = CoverageType("unit")
    effect: S.SRE = S.EPS

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def returns_value(self) -> bool:
        return self.ensures.base != "unit"


@dataclass(frozen=True)
class Call:
    api: str
    args: tuple  # (Term, ...)

    def __str__(self) -> str:
        return " ".join([self.api] + [str(a) for a in self.args])


@dataclass(frozen=True)
class Let:
    var: Var
    call: Call


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple  # (Var, ...)
    lets: tuple  # (Let, ...)
    final: Union[Call, Term]
    source: str = field(default="", compare=False)

    def calls(self) -> list[tuple[Optional[Var], Call]]:
        out: list = [(b.var, b.call) for b in self.lets]
        if isinstance(self.final, Call):
            out.append((None, self.final))
        return out

    def __str__(self) -> str:
        ps = ", ".join(f"{p.name}: {p.sort}" for p in self.params)
        body = "".join(f"let {b.var} = {b.call} in " for b in self.lets) + str(self.final)
        return f"fun {self.name}({ps}) = {body}"


def op_table(apis: Mapping[str, APISignature]) -> dict[str, tuple[int, bool]]:
    return {name: (a.arity, a.returns_value) for name, a in apis.items()}


class KVStore:
    """The single implicit key-value store the APIs act on."""

    def __init__(self, bindings: Optional[Mapping[int, int]] = None):
        self.bindings: dict[int, int] = dict(bindings or {})

    def apply(self, e: Event) -> bool:
        """Replay one event; False if it is inconsistent with the store."""
        if e.op == "put":
            k, v = e.args
            self.bindings[k] = v
            return True
        if e.op == "get":
            (k,) = e.args
            return self.bindings.get(k) == e.result
        raise ValueError(f"no concrete semantics for op {e.op!r}")

    def replay(self, trace: Iterable[Event]) -> bool:
        return all(self.apply(e) for e in trace)

    def frozen(self, domain_size: int) -> tuple:
        return tuple(self.bindings.get(k) for k in range(domain_size))


def run_concrete(prog: Program, prefix: Iterable[Event], args: Mapping[Var, int]) -> Optional[list[Event]]:
    """Run ``prog`` after replaying ``prefix``.

    Returns the events the program produces, or None when it gets stuck
    (a ``get`` on an unbound key, or an incoherent prefix).
    """
    store = KVStore()
    if not store.replay(prefix):
        return None
    return run_from_store(prog, store.bindings, args)


def run_from_store(prog: Program, bindings: Mapping[int, int], args: Mapping[Var, int]) -> Optional[list[Event]]:
    env: dict = {p: args[p] for p in prog.params}
    mem = dict(bindings)
    out: list[Event] = []

    def call(c: Call):
        vals = tuple(value_of(t, env) for t in c.args)
        if c.api == "put":
            mem[vals[0]] = vals[1]
            out.append(Event("put", vals))
            return None
        if c.api == "get":
            if vals[0] not in mem:
                raise _Stuck
            v = mem[vals[0]]
            out.append(Event("get", vals, v))
            return v
        raise ValueError(f"no concrete semantics for API {c.api!r}")

    try:
        for b in prog.lets:
            env[b.var] = call(b.call)
        if isinstance(prog.final, Call):
            call(prog.final)
    except _Stuck:
        return None
    return out


class _Stuck(Exception):
    pass


def random_program(rng, apis: Mapping[str, APISignature], max_calls: int = 4,
                   num_params: int = 2, domain_size: int = 4, name: str = "rand") -> Program:
    """A random straight-line let-chain over ``apis``.

    Arguments are drawn from in-scope addr variables and, occasionally, constants.
    ``rng`` is a ``random.Random``.
    """
    params = tuple(Var(f"p{i}") for i in range(num_params))
    scope = list(params)
    names = sorted(apis)
    n = rng.randint(1, max_calls)

    def arg() -> Term:
        if rng.random() < 0.15:
            return Const(rng.randrange(domain_size))
        return rng.choice(scope)

    lets = []
    for i in range(n - 1):
        api = apis[rng.choice(names)]
        call = Call(api.name, tuple(arg() for _ in api.params))
        v = Var(f"x{i}", api.ensures.base)
        lets.append(Let(v, call))
        if v.sort == "addr":
            scope.append(v)
    api = apis[rng.choice(names)]
    final: Union[Call, Term] = Call(api.name, tuple(arg() for _ in api.params))
    if lets and lets[-1].var.sort == "addr" and rng.random() < 0.25:
        final = lets[-1].var
    return Program(name, params, tuple(lets), final)
