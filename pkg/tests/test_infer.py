import random

from tracewit import sfa as F
from tracewit import sre as S
from tracewit.guards import Var, eq, models, neq, satisfiable, store_of
from tracewit.infer import (
    Budgets, InferState, enumerate_hypotheses, infer_witness, show_atom, spec_store, step_call,
)
from tracewit.lang import op_table, random_program
from tracewit.oracle import validate_witness
from tracewit.syntax import parse_sre
from tracewit.typesys import CoverageType

from conftest import LINK, VIOLATION

a, b, n0, n1, n2 = (Var(x) for x in ("a", "b", "n0", "n1", "n2"))


def start_state(spec, prog, hyp):
    declared = tuple(spec.vars) + tuple((p, CoverageType(p.sort)) for p in prog.params)
    order = tuple(v for v, _ in spec.vars) + tuple(prog.params)
    return InferState(store=spec_store(spec.vars), order=order, ctx_sre=hyp.prefix,
                      eff_remainder=hyp.suffix, guarantees=(hyp.prefix,), pre_ctx=hyp.prefix,
                      declared=declared)


def test_hypotheses(specs, apis):
    spec = specs["not_unique"]
    hyps = list(enumerate_hypotheses(spec.sre, spec.vars, op_table(apis)))
    assert [S.to_text(h.prefix) for h in hyps] == [".*", LINK]
    assert S.to_text(hyps[1].suffix) == VIOLATION
    for h in hyps:
        assert not S.nullable(h.suffix)
    assert list(enumerate_hypotheses(parse_sre("0"))) == []


def test_e_bad_steps(specs, apis, programs):
    spec, prog = specs["not_unique"], programs["bad"]
    ops = op_table(apis)
    hyp = list(enumerate_hypotheses(spec.sre, spec.vars, ops))[1]
    s0 = start_state(spec, prog, hyp)
    (bind1, c1), (bind2, c2), (_, c3) = prog.calls()

    # first get: context grows by the get's requirement, no atoms abduced
    s1 = [s for s in step_call(s0, bind1, apis["get"], c1.args, 1, ops=ops) if s.store == s0.store][0]
    assert S.to_text(s1.ctx_sre) == "(.* <put a b> (~<put a _>)* & .* <put n0 n1> (~<put n0 _>)*) <n1 <- get n0>"
    assert s1.eff_remainder == hyp.suffix
    assert str(s1.result) == "{addr | nu = n1}"

    # second get: the aligned branch equates n1 with a and n2 with b
    s2s = step_call(s1, bind2, apis["get"], c2.args, 2, ops=ops)
    assert s2s[0].store - s1.store == store_of(eq(n1, a), eq(n2, b))

    # final put: consuming the violating literal forces n0 != a
    s3s = step_call(s2s[0], None, apis["put"], c3.args, 3, ops=ops)
    done = [s for s in s3s if S.nullable(s.eff_remainder)]
    assert done[0].eff_remainder == S.ANY_STAR
    assert done[0].store - s2s[0].store == store_of(neq(a, n0))


def test_e_bad_judgment(specs, apis, programs):
    spec, prog = specs["not_unique"], programs["bad"]
    res = infer_witness(prog, apis, spec.sre, spec.vars)
    j = res.judgment
    assert [f"{x}:{t}" for x, t in j.context] == ["a:{addr | true}", "b:{addr | nu != a}", "n0:{addr | nu != a}"]
    assert S.to_text(j.type.context) == \
        "(.* <put a b> (~<put a _>)* & .* <put n0 a> (~<put n0 _>)*) <a <- get n0> <b <- get a>"
    assert str(j.type.result) == "{unit | true}"
    assert S.to_text(j.type.effect) == "<put n0 b>"
    assert sorted(show_atom(x, res.final_state.locals) for x in res.abduced) == ["a != n0", "n1 = a", "n2 = b"]
    assert S.to_text(res.hypothesis.prefix) == LINK and S.to_text(res.hypothesis.suffix) == VIOLATION


def test_no_witness_cases(specs, apis, programs):
    spec = specs["not_unique"]
    assert infer_witness(programs["ok"], apis, spec.sre, spec.vars).judgment is None
    empty = specs["nothing"]
    res = infer_witness(programs["bad"], apis, empty.sre, empty.vars)
    assert res.judgment is None and res.stats.hypotheses == 0


def test_budget_diagnostics(specs, apis, programs):
    spec = specs["not_unique"]
    res = infer_witness(programs["bad"], apis, spec.sre, spec.vars, Budgets(max_branches=2))
    assert res.judgment is None and res.stats.reason == "branch budget exhausted"
    res = infer_witness(programs["bad"], apis, spec.sre, spec.vars, Budgets(timeout=0.0))
    assert res.stats.reason == "timeout"
    res = infer_witness(programs["bad"], apis, spec.sre, spec.vars, Budgets(max_hypotheses=1))
    assert res.judgment is None and res.stats.reason == "no witness"


def test_deterministic(specs, apis, programs):
    spec = specs["not_unique"]
    runs = [infer_witness(programs["bad"], apis, spec.sre, spec.vars) for _ in range(3)]
    assert len({str(r.judgment) for r in runs}) == 1
    assert len({r.abduced for r in runs}) == 1


def test_elimination_preserves_language(specs, apis, programs):
    """Traces of the pre-elimination type remain in the eliminated one."""
    spec, prog = specs["not_unique"], programs["bad"]
    res = infer_witness(prog, apis, spec.sre, spec.vars)
    leaf = res.final_state
    before = S.concat(leaf.pre_ctx, S.Lit(leaf.produced[-1]))
    after = S.concat(res.judgment.type.context, res.judgment.type.effect)
    a_before = F.compile(before, op_table(apis))
    variables = sorted(S.variables(before) | S.variables(after))
    checked = 0
    for sigma in list(models(leaf.store, 4, variables))[:12]:
        got = F.nonempty_witness(a_before, assignment=sigma, domain_size=4, max_len=6)
        if got is None:
            continue
        trace, full = got
        assert S.accepts(before, trace, full) and S.accepts(after, trace, full)
        checked += 1
    assert checked > 0


def test_leaf_invariants_on_corpus(specs, apis, programs):
    for spec in specs.values():
        for prog in programs.values():
            res = infer_witness(prog, apis, spec.sre, spec.vars)
            if res.judgment is None:
                continue
            leaf = res.final_state
            assert leaf.store >= spec_store(spec.vars) and satisfiable(leaf.store)
            assert len(leaf.produced) == len(prog.calls())
            assert validate_witness(res.judgment, prog, apis, res.hypothesis).ok


def test_random_programs_sound(specs, apis):
    spec = specs["not_unique"]
    rng = random.Random(2024)
    found = 0
    for i in range(40):
        prog = random_program(rng, apis, name=f"r{i}")
        res = infer_witness(prog, apis, spec.sre, spec.vars)
        if res.judgment is not None:
            found += 1
            assert validate_witness(res.judgment, prog, apis, res.hypothesis).ok, str(prog)
    assert found > 0
