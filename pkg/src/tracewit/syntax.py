"""Lexer and recursive-descent parsers for the ``.tw`` languages.

One file may hold any mix of declarations::

    api get(k: addr) : addr
      ghost v: addr
      requires .* <put k v> (~<put k _>)*
      ensures nu = v
      effect <v <- get k>

    fun bad(n0: addr) = let n1 = get n0 in let n2 = get n1 in put n0 n2

    spec not_unique(a: addr, b: {addr | nu != a}) =
      .* <put a b> (~<put a _>)* <put !a b> .*
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from . import sre as S
from .guards import (
    ANY, DEFAULT_OPS, NU, WILD, Const, Eq, Event, EventPattern, Neq, Var, eq, neq,
)
from .lang import APISignature, Call, Let, Program, op_table
from .typesys import CoverageType

KEYWORDS = {"api", "fun", "spec", "let", "in", "ghost", "requires", "ensures", "effect"}
SORTS = ("addr", "unit", "int")


class ParseError(ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{line}:{col}: {msg}")
        self.pos = pos


_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow><-)
  | (?P<neq>!=)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<sym>[<>.~()|&*!_;:,={}])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Tok]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind if kind != "sym" else m.group(), m.group(), pos))
        pos = m.end()
    out.append(Tok("eof", "", len(text)))
    return out


class Parser:
    def __init__(self, text: str, ops: Optional[Mapping[str, tuple[int, bool]]] = None):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.ops = dict(DEFAULT_OPS if ops is None else ops)

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None):
        raise ParseError(msg, self.text, (tok or self.tok).pos)

    def next(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> Optional[Tok]:
        if self.tok.kind == kind:
            return self.next()
        return None

    def expect(self, kind: str, what: str = "") -> Tok:
        if self.tok.kind != kind:
            self.error(f"expected {what or kind!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def keyword(self, word: str) -> bool:
        if self.tok.kind == "ident" and self.tok.text == word:
            self.i += 1
            return True
        return False

    def expect_keyword(self, word: str):
        if not self.keyword(word):
            self.error(f"expected {word!r}")

    def ident(self, what: str = "identifier") -> Tok:
        t = self.expect("ident", what)
        if t.text in KEYWORDS:
            self.error(f"{t.text!r} is a keyword", t)
        return t

    def at_end(self):
        self.expect("eof", "end of input")

    # -- terms and patterns
    def term(self, scope: Optional[Mapping[str, Var]]):
        t = self.tok
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            return self._var(t, scope)
        self.error("expected a variable or constant")

    def _var(self, t: Tok, scope):
        if scope is None:
            return Var(t.text)
        if t.text not in scope:
            self.error(f"unknown variable {t.text!r}", t)
        return scope[t.text]

    def slot(self, scope):
        if self.accept("_"):
            return WILD
        if self.accept("!"):
            return Neq(self.term(scope))
        return Eq(self.term(scope))

    def literal(self, scope) -> EventPattern:
        start = self.expect("<")
        result = None
        if not (self.tok.kind == "ident" and self.peek().kind != "arrow"):
            result = self.slot(scope)
            self.expect("arrow", "'<-'")
        op_tok = self.ident("operation name")
        op = op_tok.text
        args = []
        while self.tok.kind != ">":
            if self.tok.kind == "eof":
                self.error("unterminated event literal", start)
            args.append(self.slot(scope))
        self.next()
        if op not in self.ops:
            self.error(f"unknown operation {op!r}", op_tok)
        arity, has_result = self.ops[op]
        if len(args) != arity:
            self.error(f"{op} expects {arity} argument(s), got {len(args)}", op_tok)
        if result is not None and not has_result:
            self.error(f"{op} returns no value", op_tok)
        return EventPattern(op, tuple(args), result)

    # -- SREs
    def sre(self, scope) -> S.SRE:
        parts = [self.sre_inter(scope)]
        while self.accept("|"):
            parts.append(self.sre_inter(scope))
        return S.union(*parts)

    def sre_inter(self, scope) -> S.SRE:
        parts = [self.sre_seq(scope)]
        while self.accept("&"):
            parts.append(self.sre_seq(scope))
        return S.inter(*parts)

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("(", ".", "~", "<") or (t.kind == "int" and t.text in ("0", "1"))

    def sre_seq(self, scope) -> S.SRE:
        if not self._starts_atom():
            self.error("expected a regular expression")
        parts = []
        while self._starts_atom():
            parts.append(self.sre_postfix(scope))
        return S.concat(*parts)

    def sre_postfix(self, scope) -> S.SRE:
        r = self.sre_atom(scope)
        while self.accept("*"):
            r = S.star(r)
        return r

    def sre_atom(self, scope) -> S.SRE:
        t = self.tok
        if self.accept("("):
            r = self.sre(scope)
            self.expect(")", "')'")
            return r
        if self.accept("."):
            return S.Lit(ANY)
        if self.accept("~"):
            if self.tok.kind != "<":
                self.error("'~' applies to an event literal")
            return S.Lit(self.literal(scope).complement())
        if t.kind == "<":
            return S.Lit(self.literal(scope))
        self.next()
        return S.EMPTY if t.text == "0" else S.EPS

    # -- types and qualifiers
    def qualifier(self, scope) -> tuple:
        if self.keyword("true"):
            return ()
        atoms = [self.qatom(scope)]
        while self.keyword("and"):
            atoms.append(self.qatom(scope))
        return tuple(atoms)

    def qatom(self, scope):
        lhs = self.term(scope)
        if self.accept("="):
            return eq(lhs, self.term(scope))
        self.expect("neq", "'=' or '!='")
        return neq(lhs, self.term(scope))

    def sort(self) -> str:
        t = self.expect("ident", "sort")
        if t.text not in SORTS:
            self.error(f"unknown sort {t.text!r}", t)
        return t.text

    def coverage_type(self, scope) -> CoverageType:
        if not self.accept("{"):
            return CoverageType(self.sort())
        base = self.sort()
        self.expect("|", "'|'")
        inner = dict(scope)
        inner["nu"] = NU
        q = self.qualifier(inner)
        self.expect("}", "'}'")
        return CoverageType(base, q)

    def binder_list(self, scope: dict, typed: bool) -> list:
        """``(x: T, y: T, ...)`` extending ``scope`` left to right."""
        out = []
        self.expect("(", "'('")
        if self.tok.kind != ")":
            while True:
                name = self.ident("parameter name")
                if name.text in scope or name.text == "nu":
                    self.error(f"duplicate variable {name.text!r}", name)
                self.expect(":", "':'")
                ty = self.coverage_type(scope) if typed else CoverageType(self.sort())
                v = Var(name.text, ty.base)
                scope[name.text] = v
                out.append((v, ty))
                if not self.accept(","):
                    break
        self.expect(")", "')'")
        return out


# -- public entry points ---------------------------------------------------

def parse_sre(text: str, declared_vars: Optional[Iterable[Var]] = None,
              ops: Optional[Mapping[str, tuple[int, bool]]] = None) -> S.SRE:
    """Parse an SRE.  With ``declared_vars`` None every identifier is a variable."""
    p = Parser(text, ops)
    scope = None if declared_vars is None else {v.name: v for v in declared_vars}
    r = p.sre(scope)
    p.at_end()
    return r


def parse_pattern(text: str, declared_vars=None, ops=None) -> EventPattern:
    r = parse_sre(text, declared_vars, ops)
    if not isinstance(r, S.Lit):
        raise ParseError("expected a single event literal", text, 0)
    return r.pattern


def parse_trace(text: str, ops=None) -> list[Event]:
    """``<put 1 2>;<3 <- get 2>``; the empty string is the empty trace."""
    p = Parser(text, ops)
    out: list[Event] = []
    if p.tok.kind == "eof":
        return out
    while True:
        start = p.tok
        pat = p.literal({})
        vals = []
        for c in pat.slots()[:-1]:
            if not (isinstance(c, Eq) and isinstance(c.term, Const)):
                p.error("trace events take constant arguments", start)
            vals.append(c.term.value)
        res = pat.result
        if p.ops[pat.op][1]:
            if not (isinstance(res, Eq) and isinstance(res.term, Const)):
                p.error(f"{pat.op} events need a constant result", start)
            out.append(Event(pat.op, tuple(vals), res.term.value))
        else:
            out.append(Event(pat.op, tuple(vals)))
        if not p.accept(";"):
            break
    p.at_end()
    return out


def trace_text(trace: Iterable[Event]) -> str:
    return ";".join(str(e) for e in trace)


def parse_bindings(text: str) -> dict[Var, int]:
    """``a=1,b=2``"""
    out: dict = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = part.partition("=")
        if not sep or not name.strip() or not value.strip().isdigit():
            raise ParseError(f"bad binding {part!r}", text, text.find(part))
        out[Var(name.strip())] = int(value)
    return out


@dataclass
class SpecDecl:
    name: str
    vars: list  # [(Var, CoverageType)]
    sre: S.SRE
    source: str = ""

    def declared(self) -> dict:
        return dict(self.vars)


@dataclass
class Module:
    apis: dict = field(default_factory=dict)
    programs: dict = field(default_factory=dict)
    specs: dict = field(default_factory=dict)

    def update(self, other: "Module") -> "Module":
        self.apis.update(other.apis)
        self.programs.update(other.programs)
        self.specs.update(other.specs)
        return self


def _api_headers(text: str) -> dict[str, tuple[int, bool]]:
    p = Parser(text, {})
    ops: dict = {}
    while p.tok.kind != "eof":
        if p.tok.kind == "ident" and p.tok.text == "api":
            p.next()
            name = p.ident("API name").text
            params = p.binder_list({}, typed=False)
            p.expect(":", "':'")
            ops[name] = (len(params), p.sort() != "unit")
        else:
            p.next()
    return ops


def parse_module(text: str, apis: Optional[Mapping[str, APISignature]] = None) -> Module:
    headers = _api_headers(text)
    ops = dict(op_table(apis)) if apis else {}
    ops.update(headers)
    if not ops:
        ops = dict(DEFAULT_OPS)
    p = Parser(text, ops)
    mod = Module()
    known_apis = dict(apis or {})
    while p.tok.kind != "eof":
        start = p.tok.pos
        if p.keyword("api"):
            a = _api(p)
            mod.apis[a.name] = a
            known_apis[a.name] = a
        elif p.keyword("fun"):
            prog = _fun(p, known_apis)
            mod.programs[prog.name] = prog
        elif p.keyword("spec"):
            s = _spec(p)
            mod.specs[s.name] = s
        else:
            p.error("expected 'api', 'fun' or 'spec'")
            continue
        _attach_source(mod, text[start:p.tok.pos].strip())
    return mod


def _attach_source(mod: Module, src: str):
    head = src.split(None, 2)
    if len(head) < 2:
        return
    kind, name = head[0], re.match(r"[A-Za-z][A-Za-z0-9_']*", head[1]).group()
    if kind == "fun":
        prog = mod.programs[name]
        mod.programs[name] = Program(prog.name, prog.params, prog.lets, prog.final, src)
    elif kind == "spec":
        mod.specs[name].source = src


def _api(p: Parser) -> APISignature:
    name = p.ident("API name").text
    scope: dict = {}
    params = [v for v, _ in p.binder_list(scope, typed=False)]
    p.expect(":", "':'")
    ret = p.sort()
    ghosts = []
    while p.keyword("ghost"):
        g = p.ident("ghost name")
        if g.text in scope:
            p.error(f"duplicate variable {g.text!r}", g)
        p.expect(":", "':'")
        v = Var(g.text, p.sort())
        scope[g.text] = v
        ghosts.append(v)
    requires = S.ANY_STAR
    if p.keyword("requires"):
        requires = p.sre(scope)
    ensures = CoverageType(ret)
    if p.keyword("ensures"):
        inner = dict(scope)
        inner["nu"] = NU
        ensures = CoverageType(ret, p.qualifier(inner))
    p.expect_keyword("effect")
    effect = p.sre(scope)
    return APISignature(name, tuple(params), tuple(ghosts), requires, ensures, effect)


def _fun(p: Parser, apis: Mapping[str, APISignature]) -> Program:
    name = p.ident("function name").text
    scope: dict = {}
    params = [v for v, _ in p.binder_list(scope, typed=False)]
    p.expect("=", "'='")
    lets = []
    while p.keyword("let"):
        v = p.ident("variable")
        if v.text in scope:
            p.error(f"variable {v.text!r} is already bound", v)
        p.expect("=", "'='")
        call = _call(p, scope, apis)
        p.expect_keyword("in")
        var = Var(v.text, apis[call.api].ensures.base if call.api in apis else "addr")
        scope[v.text] = var
        lets.append(Let(var, call))
    if p.tok.kind == "ident" and p.tok.text not in KEYWORDS and p.tok.text not in scope:
        final = _call(p, scope, apis)
    else:
        final = p.term(scope)
    return Program(name, tuple(params), tuple(lets), final)


def _call(p: Parser, scope, apis) -> Call:
    t = p.ident("API name")
    if apis and t.text not in apis:
        p.error(f"unknown API {t.text!r}", t)
    if not apis and t.text not in p.ops:
        p.error(f"unknown API {t.text!r}", t)
    args = []
    while p.tok.kind == "int" or (p.tok.kind == "ident" and p.tok.text not in KEYWORDS):
        args.append(p.term(scope))
    arity = len(apis[t.text].params) if apis else p.ops[t.text][0]
    if len(args) != arity:
        p.error(f"{t.text} expects {arity} argument(s), got {len(args)}", t)
    for a in args:
        if isinstance(a, Var) and a.sort == "unit":
            p.error(f"{a} has sort unit", t)
    return Call(t.text, tuple(args))


def _spec(p: Parser) -> SpecDecl:
    name = p.ident("spec name").text
    scope: dict = {}
    vars_ = p.binder_list(scope, typed=True)
    p.expect("=", "'='")
    return SpecDecl(name, vars_, p.sre(scope))


def parse_program(text: str, apis: Optional[Mapping[str, APISignature]] = None) -> Program:
    mod = parse_module(text, apis)
    if len(mod.programs) != 1 or mod.apis or mod.specs:
        raise ParseError("expected exactly one 'fun' declaration", text, 0)
    return next(iter(mod.programs.values()))


def parse_apis(text: str) -> dict[str, APISignature]:
    mod = parse_module(text)
    if mod.programs or mod.specs:
        raise ParseError("expected only 'api' declarations", text, 0)
    return mod.apis


def parse_spec(text: str, apis: Optional[Mapping[str, APISignature]] = None) -> SpecDecl:
    mod = parse_module(text, apis)
    if len(mod.specs) != 1:
        raise ParseError("expected exactly one 'spec' declaration", text, 0)
    return next(iter(mod.specs.values()))


def parse_coverage_type(text: str, declared_vars: Iterable[Var] = ()) -> CoverageType:
    p = Parser(text)
    t = p.coverage_type({v.name: v for v in declared_vars})
    p.at_end()
    return t
