"""Command-line front end.

    tracewit check SPEC PROGRAM APIS [--report OUT] [budgets...]
    tracewit member --sre TEXT --trace TEXT [--bind a=1,b=2]
    tracewit validate --report FILE [--domain N] [--max-prefix K]

Exit codes: 0 witness / true, 1 no witness / refuted / false, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

from . import sfa as F
from . import sre as S
from .guards import Var, holds
from .infer import Budgets, Hypothesis, enumerate_hypotheses, infer_witness, show_atom
from .lang import op_table, run_concrete
from .oracle import Evidence, OracleConfig, validate_witness
from .syntax import (
    ParseError, parse_apis, parse_bindings, parse_coverage_type, parse_module,
    parse_program, parse_sre, parse_trace, trace_text,
)
from .typesys import Judgment, TripleType

EXIT_WITNESS, EXIT_NONE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- reports ----------------------------------------------------------------

def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def load_report(text: str) -> dict:
    try:
        report = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed report: {exc}") from None
    if not isinstance(report, dict) or "judgment" not in report:
        raise UsageError("malformed report: missing 'judgment'")
    return report


def _evidence_json(ev: Evidence) -> dict:
    return {
        "assignment": {v.name: c for v, c in sorted(ev.assignment.items())},
        "prefix": trace_text(ev.prefix),
        "produced": trace_text(ev.produced),
    }


def build_report(*, program, program_source: str, apis_source: str, spec_name: str,
                 result, validation, budgets: Budgets, timings: dict) -> dict:
    j = result.judgment
    report: dict = {
        "program": program.name,
        "spec": spec_name,
        "status": "witness" if validation is not None and validation.ok else
                  ("refuted" if j is not None else "no-witness"),
        "reason": result.stats.reason if j is None else (validation.reason if validation else ""),
        "program_source": program_source,
        "apis_source": apis_source,
        "hypothesis": None,
        "judgment": None,
        "abduced": [],
        "evidence": None,
        "timings": timings,
        "budgets": {
            "domain": budgets.domain_size,
            "max_prefix": budgets.max_prefix,
            "max_hypotheses": budgets.max_hypotheses,
            "max_branches": budgets.max_branches,
            "timeout": budgets.timeout,
            "hypotheses_tried": result.stats.hypotheses,
            "branches_explored": result.stats.branches,
        },
    }
    if j is None:
        return report
    report["hypothesis"] = {
        "pivot": result.hypothesis.split.pivot,
        "prefix": S.to_text(result.hypothesis.prefix),
        "suffix": S.to_text(result.hypothesis.suffix),
    }
    report["judgment"] = {
        "context": [{"var": x.name, "type": str(t)} for x, t in j.context],
        "params": [p.name for p in j.params],
        "context_sre": S.to_text(j.type.context),
        "result": str(j.type.result),
        "effect_sre": S.to_text(j.type.effect),
        "text": str(j),
    }
    report["abduced"] = [show_atom(a, result.final_state.locals) for a in result.abduced]
    if validation is not None and validation.ok:
        report["evidence"] = _evidence_json(validation.evidence)
    return report


def judgment_from_report(report: dict, program, ops) -> tuple[Judgment, Hypothesis]:
    data = report["judgment"]
    if data is None or report.get("hypothesis") is None:
        raise UsageError("report holds no judgment")
    try:
        scope: list = []
        ctx = []
        for entry in data["context"]:
            t = parse_coverage_type(entry["type"], scope)
            v = Var(entry["var"], t.base)
            ctx.append((v, t))
            scope.append(v)
        triple = TripleType(parse_sre(data["context_sre"], scope, ops),
                            parse_coverage_type(data["result"], scope),
                            parse_sre(data["effect_sre"], scope, ops))
        hyp = report["hypothesis"]
        hypothesis = Hypothesis(None, parse_sre(hyp["prefix"], scope, ops),
                                parse_sre(hyp["suffix"], scope, ops), ())
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed report: {exc}") from None
    return Judgment(tuple(ctx), program.name, triple, tuple(program.params)), hypothesis


def evidence_replays(j: Judgment, hypothesis, program, ev: dict, ops) -> bool:
    """Replay recorded evidence and re-check every membership it claims."""
    sigma = {Var(k): v for k, v in ev["assignment"].items()}
    prefix = parse_trace(ev["prefix"], ops)
    produced = parse_trace(ev["produced"], ops)
    if any(p not in sigma for p in program.params):
        return False
    if run_concrete(program, prefix, {p: sigma[p] for p in program.params}) != produced:
        return False
    needed = S.variables(j.type.context) | S.variables(j.type.effect) | set(j.context_vars())
    if any(v not in sigma for v in needed):
        return False
    if not all(holds(a, sigma) for a in j.qualifier_store()):
        return False
    return (S.accepts(hypothesis.prefix, prefix, sigma)
            and S.accepts(hypothesis.suffix, produced, sigma)
            and S.accepts(S.concat(j.type.context, j.type.effect), prefix + produced, sigma))


# -- commands ---------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _pick(table: dict, name: Optional[str], what: str):
    if not table:
        raise UsageError(f"no {what} declared")
    if name is None:
        return next(iter(table.items()))
    if name not in table:
        raise UsageError(f"unknown {what} {name!r}; have {', '.join(table)}")
    return name, table[name]


def cmd_check(args) -> int:
    apis_source = _read(args.apis)
    apis = parse_apis(apis_source)
    spec_mod = parse_module(_read(args.spec), apis)
    prog_text = _read(args.program)
    prog_mod = parse_module(prog_text, apis)
    spec_name, spec = _pick(spec_mod.specs, args.spec_name, "spec")
    _, prog = _pick(prog_mod.programs, args.program_name, "program")
    if min(args.domain, args.max_hypotheses, args.max_branches) < 1 or args.max_prefix < 0 or args.timeout < 0:
        raise UsageError("budgets must be positive")
    budgets = Budgets(max_hypotheses=args.max_hypotheses, max_branches=args.max_branches,
                      timeout=args.timeout, domain_size=args.domain, max_prefix=args.max_prefix)
    ops = op_table(apis)
    if args.emit_sfa:
        _emit_sfas(Path(args.emit_sfa), spec, ops)
    t0 = time.monotonic()
    result = infer_witness(prog, apis, spec.sre, spec.vars, budgets)
    t1 = time.monotonic()
    validation = None
    if result.judgment is not None:
        cfg = OracleConfig(domain_size=args.domain, max_prefix_len=args.max_prefix)
        validation = validate_witness(result.judgment, prog, apis, result.hypothesis, cfg)
    t2 = time.monotonic()
    report = build_report(program=prog, program_source=prog.source or str(prog),
                          apis_source=apis_source, spec_name=spec_name, result=result,
                          validation=validation, budgets=budgets,
                          timings={"infer_s": round(t1 - t0, 6), "validate_s": round(t2 - t1, 6)})
    text = dump_report(report)
    if args.report:
        Path(args.report).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    return EXIT_WITNESS if report["status"] == "witness" else EXIT_NONE


def _emit_sfas(out: Path, spec, ops):
    out.mkdir(parents=True, exist_ok=True)
    a = F.compile(spec.sre, ops, [v for v, _ in spec.vars])
    (out / f"{spec.name}.dot").write_text(F.to_dot(a, spec.name))
    for i, hyp in enumerate(enumerate_hypotheses(spec.sre, spec.vars, ops)):
        (out / f"{spec.name}.h{i}.prefix.dot").write_text(F.to_dot(hyp.split.prefix, f"h{i} prefix"))
        (out / f"{spec.name}.h{i}.suffix.dot").write_text(F.to_dot(hyp.split.suffix, f"h{i} suffix"))


def cmd_member(args) -> int:
    ops = op_table(parse_apis(_read(args.apis))) if args.apis else None
    r = parse_sre(args.sre, None, ops)
    trace = parse_trace(args.trace, ops)
    sigma = parse_bindings(args.bind or "")
    missing = sorted(v.name for v in S.variables(r) if v not in sigma)
    if missing:
        raise UsageError(f"unbound variable(s): {', '.join(missing)}")
    ok = S.accepts(r, trace, sigma)
    print("true" if ok else "false")
    return EXIT_WITNESS if ok else EXIT_NONE


def cmd_validate(args) -> int:
    report = load_report(_read(args.report))
    try:
        apis = parse_apis(report["apis_source"])
        program = parse_program(report["program_source"], apis)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed report: {exc}") from None
    ops = op_table(apis)
    j, hyp = judgment_from_report(report, program, ops)
    cfg = OracleConfig(domain_size=args.domain, max_prefix_len=args.max_prefix)
    v = validate_witness(j, program, apis, hyp, cfg)
    recorded = report.get("evidence")
    replayed = recorded is not None and evidence_replays(j, hyp, program, recorded, ops)
    ok = v.ok and replayed
    print("validated" if ok else f"not validated ({v.reason or 'recorded evidence does not replay'})")
    return EXIT_WITNESS if ok else EXIT_NONE


# -- entry point ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tracewit", description="Type-based witnesses of trace incorrectness.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="infer and validate a witness")
    c.add_argument("spec", help=".tw file with spec declarations")
    c.add_argument("program", help=".tw file with fun declarations")
    c.add_argument("apis", help=".tw file with api declarations")
    c.add_argument("--spec-name")
    c.add_argument("--program-name")
    c.add_argument("--report", help="also write the report here")
    c.add_argument("--domain", type=int, default=4)
    c.add_argument("--max-prefix", type=int, default=6)
    c.add_argument("--max-hypotheses", type=int, default=16)
    c.add_argument("--max-branches", type=int, default=10_000)
    c.add_argument("--timeout", type=float, default=10.0)
    c.add_argument("--emit-sfa", metavar="DIR", help="write Graphviz files for the spec automaton and its splits")
    c.add_argument("-q", "--quiet", action="store_true")
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("member", help="trace membership in an SRE")
    m.add_argument("--sre", required=True)
    m.add_argument("--trace", required=True)
    m.add_argument("--bind", default="")
    m.add_argument("--apis")
    m.set_defaults(func=cmd_member)

    v = sub.add_parser("validate", help="replay a witness report")
    v.add_argument("--report", required=True)
    v.add_argument("--domain", type=int, default=4)
    v.add_argument("--max-prefix", type=int, default=6)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ParseError, ValueError, KeyError) as exc:
        print(f"tracewit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
