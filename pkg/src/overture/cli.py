"""Command-line front end.

Exit codes: 0 the checked property holds, 1 it fails, 2 usage or
structural error (bad arguments, parse errors, ill-formed protocols),
3 the solver returned an unknown verdict.
"""

import argparse
import json
import shlex
import sys
import time
from typing import Optional

from . import constraints as Cn
from .ast_core import ParseError, Protocol, parse_protocol, partitions, \
    pretty_protocol
from .field import FieldError, Prime
from .prelude_lang import PreludeError, expand_program, parse_codebase
from .semantics import AssertionFailure, input_vars, run

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


class UsageError(Exception):
    pass


def _load_protocol(path: str, prime: Prime) -> Protocol:
    source = open(path).read()
    if path.endswith(".pre"):
        return expand_program(parse_codebase(source, prime)).protocol
    return parse_protocol(source, prime)


def _load_pre(path: Optional[str], prime: Prime):
    if path is None:
        return None
    return Cn.parse_constraint(open(path).read(), prime)


def _solver(args) -> Optional[Cn.SolverClient]:
    if getattr(args, "solver_cmd", None):
        return Cn.SolverClient(shlex.split(args.solver_cmd))
    return None


def _parse_corrupt(spec: str, pi: Protocol):
    corrupt = frozenset(int(x) for x in spec.split(",") if x.strip())
    unknown = corrupt - pi.federation
    if unknown:
        raise UsageError(f"corrupt clients {sorted(unknown)} are not in the "
                         f"federation {sorted(pi.federation)}")
    return [(frozenset(pi.federation) - corrupt, corrupt)]


def _partitions(args, pi: Protocol):
    if args.corrupt:
        return _parse_corrupt(args.corrupt, pi)
    return list(partitions(pi, nonempty_corrupt=True))


def _model_str(model) -> str:
    return ", ".join(f"{v} = {model[v]}" for v in sorted(model, key=lambda v: v.sort_key()))


def _emit(args, report: dict) -> None:
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))


# Subcommands.

def cmd_parse(args) -> int:
    prime = Prime(args.prime)
    source = open(args.file).read()
    if args.file.endswith(".pre"):
        cb = parse_codebase(source, prime)
        print(f"functions: {', '.join(cb.order) or '(none)'}")
        print(f"main statements: {len(cb.main)}")
    else:
        pi = parse_protocol(source, prime)
        print(pretty_protocol(pi), end="")
    return EXIT_PASS


def cmd_expand(args) -> int:
    prime = Prime(args.prime)
    cb = parse_codebase(open(args.file).read(), prime)
    exp = expand_program(cb)
    print(pretty_protocol(exp.protocol), end="")
    for ob in exp.obligations:
        print(f"// requires ({ob.site}): {Cn.pretty_constraint(ob.constraint)}")
    return EXIT_PASS


def cmd_eval(args) -> int:
    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    memory = {}
    needed = input_vars(pi, e_pre)
    for binding in args.set or []:
        name, _, value = binding.partition("=")
        v = _find_var(needed, name.strip())
        memory[v] = int(value) % prime.p
    missing = [v for v in needed if v not in memory]
    if missing:
        raise UsageError("missing inputs: "
                         + ", ".join(str(v) for v in sorted(missing, key=lambda v: v.sort_key())))
    try:
        final = run(pi, memory)
    except AssertionFailure as exc:
        print(f"abort: assertion failed at client {exc.cmd.client}")
        return EXIT_FAIL
    print(_model_str(final))
    return EXIT_PASS


def _find_var(variables, name: str):
    for v in variables:
        if str(v) == name:
            return v
    raise UsageError(f"{name} is not an input of this protocol "
                     f"(inputs: {', '.join(str(v) for v in sorted(variables, key=lambda v: v.sort_key()))})")


def cmd_constraints(args) -> int:
    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    for c in Cn.conjuncts(Cn.toeq(pi)):
        print(Cn.pretty_constraint(c))
    return EXIT_PASS


def cmd_prove(args) -> int:
    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    goal = Cn.parse_constraint(args.goal, prime)
    base = Cn.toeq(pi)
    if e_pre is not None:
        base = Cn.CAnd(e_pre, base)
    t0 = time.time()
    res = Cn.entails(base, goal, prime, backend=args.backend,
                     solver=_solver(args))
    dt = time.time() - t0
    report = {"goal": args.goal, "holds": res.holds, "seconds": round(dt, 3)}
    if res.holds is True:
        print(f"valid ({dt:.3f}s)")
        _emit(args, report)
        return EXIT_PASS
    if res.holds is False:
        print(f"refuted ({dt:.3f}s)")
        if res.countermodel:
            print("countermodel: " + _model_str(res.countermodel))
            report["countermodel"] = {str(v): n
                                      for v, n in res.countermodel.items()}
        _emit(args, report)
        return EXIT_FAIL
    print(f"unknown: {res.reason}")
    _emit(args, report)
    return EXIT_UNKNOWN


def cmd_check_conf(args) -> int:
    from .conf_types import check_confidentiality

    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    solver = _solver(args)
    worst = EXIT_PASS
    report = {"analysis": "confidentiality", "partitions": []}
    for H, C in _partitions(args, pi):
        rep = check_confidentiality(pi, H, C, e_pre, args.backend, solver)
        verdict = "pass" if rep.ok else "FAIL"
        detail = ""
        if rep.leaked:
            detail = " leaks " + ", ".join(
                str(v) for v in sorted(rep.leaked, key=lambda v: v.sort_key()))
        elif rep.error:
            detail = f" ({rep.error})"
        print(f"corrupt={sorted(C)}: {verdict}{detail}")
        report["partitions"].append({
            "corrupt": sorted(C), "ok": rep.ok,
            "leaked": [str(v) for v in sorted(rep.leaked, key=lambda v: v.sort_key())],
            "error": rep.error})
        if not rep.ok:
            worst = EXIT_FAIL
    _emit(args, report)
    return worst


def cmd_check_int(args) -> int:
    from .int_types import check_integrity_typing

    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    solver = _solver(args)
    worst = EXIT_PASS
    report = {"analysis": "integrity", "partitions": []}
    for H, C in _partitions(args, pi):
        rep = check_integrity_typing(pi, H, C, e_pre, args.backend, solver)
        verdict = "pass" if rep.ok else "FAIL"
        detail = ""
        if rep.low_views:
            detail = " low: " + ", ".join(
                str(v) for v in sorted(rep.low_views, key=lambda v: v.sort_key()))
        print(f"corrupt={sorted(C)}: {verdict}{detail}")
        report["partitions"].append({
            "corrupt": sorted(C), "ok": rep.ok,
            "low_views": [str(v) for v in sorted(rep.low_views, key=lambda v: v.sort_key())]})
        if not rep.ok:
            worst = EXIT_FAIL
    _emit(args, report)
    return worst


def cmd_verify_sig(args) -> int:
    from .prelude_types import QueryLog, verify_signature

    prime = Prime(args.prime)
    cb = parse_codebase(open(args.file).read(), prime)
    solver = _solver(args)
    names = [args.fun] if args.fun else [
        n for n in cb.order
        if cb.funs[n].pre is not None or cb.funs[n].post is not None]
    log = QueryLog()
    worst = EXIT_PASS
    report = {"signatures": []}
    for name in names:
        if name not in cb.funs:
            raise UsageError(f"no function named {name}")
        rep = verify_signature(cb, name, args.backend, solver, log)
        entry = {"name": name, "ok": rep.ok}
        if rep.ok:
            print(f"{name}: verified")
        else:
            print(f"{name}: FAILED")
            if rep.post_result is not None and rep.post_result.holds is not True:
                if rep.post_result.holds is None:
                    worst = max(worst, EXIT_UNKNOWN)
                    print(f"  post: unknown ({rep.post_result.reason})")
                else:
                    print("  post: refuted")
                    if rep.post_result.countermodel:
                        print("  countermodel: "
                              + _model_str(rep.post_result.countermodel))
            for v, t, res in rep.hint_failures:
                print(f"  hint {v}: "
                      + ("unknown" if res.holds is None else "refuted"))
                if res.holds is None:
                    worst = max(worst, EXIT_UNKNOWN)
            if worst != EXIT_UNKNOWN:
                worst = EXIT_FAIL
        report["signatures"].append(entry)
    report["queries"] = {"post": log.count("post"), "hint": log.count("hint")}
    print(f"queries: {log.count('post')} post, {log.count('hint')} hint")
    _emit(args, report)
    return worst


def cmd_typecheck(args) -> int:
    from .prelude_types import QueryLog, typecheck_program

    prime = Prime(args.prime)
    cb = parse_codebase(open(args.file).read(), prime)
    e_pre = _load_pre(args.pre, prime)
    solver = _solver(args)
    log = QueryLog()
    rep = typecheck_program(cb, e_pre, args.backend, solver, log)
    report = {"ok": rep.ok, "signatures": {}, "obligations": [], "queries": {}}
    for name, sig in rep.codebase.signatures.items():
        print(f"sig {name}: {'verified' if sig.ok else 'FAILED'}")
        report["signatures"][name] = sig.ok
    if rep.codebase.program is not None:
        failed = {ob.site for ob, _ in rep.codebase.program.failures}
        for ob in rep.codebase.program.expansion.obligations:
            ok = ob.site not in failed
            print(f"pre ({ob.site}): {'discharged' if ok else 'FAILED'}")
            report["obligations"].append({"site": ob.site, "ok": ok})
    for C in sorted(rep.conf, key=sorted):
        print(f"corrupt={sorted(C)}: conf "
              f"{'pass' if rep.conf[C].ok else 'FAIL'}, int "
              f"{'pass' if rep.int_[C].ok else 'FAIL'}")
    report["queries"] = {"post": log.count("post"), "pre": log.count("pre"),
                         "hint": log.count("hint")}
    print(f"queries: {log.count('post')} post, {log.count('pre')} pre, "
          f"{log.count('hint')} hint")
    _emit(args, report)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    from .pmf_oracles import check_gradual_release, check_integrity, check_nimo

    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    worst = EXIT_PASS
    report = {"oracle": args.property, "partitions": []}
    for H, C in _partitions(args, pi):
        if args.property == "gr":
            ok, witness = check_gradual_release(pi, H, C, e_pre)
        elif args.property == "nimo":
            ok, witness = check_nimo(pi, H, C, e_pre)
        else:
            ok, witness, exhaustive = check_integrity(pi, H, C, e_pre)
        verdict = "holds" if ok else "REFUTED"
        print(f"corrupt={sorted(C)}: {verdict}")
        if not ok and witness is not None and args.verbose:
            print(f"  witness: {witness}")
        report["partitions"].append({"corrupt": sorted(C), "ok": ok})
        if not ok:
            worst = EXIT_FAIL
    _emit(args, report)
    return worst


def cmd_emit_smtlib(args) -> int:
    prime = Prime(args.prime)
    pi = _load_protocol(args.file, prime)
    e_pre = _load_pre(args.pre, prime)
    e = Cn.toeq(pi)
    if e_pre is not None:
        e = Cn.CAnd(e_pre, e)
    if args.goal:
        e = Cn.CAnd(e, Cn.CNot(Cn.parse_constraint(args.goal, prime)))
    script = Cn.emit_smtlib(e, prime)
    if args.output:
        open(args.output, "w").write(script)
    else:
        print(script, end="")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="overture",
        description="Verification toolkit for finite-field MPC protocols.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, pre=True, backend=False):
        p.add_argument("file", help="protocol (.ovt) or codebase (.pre)")
        p.add_argument("-p", "--prime", type=int, default=2,
                       help="field modulus (default 2)")
        p.add_argument("--json", action="store_true",
                       help="also print a JSON report")
        if pre:
            p.add_argument("--pre", metavar="FILE.eq",
                           help="preprocessing constraint file")
        if backend:
            p.add_argument("--backend", choices=["enum", "smt"],
                           default="enum")
            p.add_argument("--solver-cmd",
                           help="external solver command (reads SMT-LIB on "
                                "stdin); overrides the bundled shim")
        return p

    common(sub.add_parser("parse", help="parse and pretty-print"), pre=False)
    common(sub.add_parser("expand",
                          help="expand a codebase to a protocol"), pre=False)
    p = common(sub.add_parser("eval", help="run a protocol on given inputs"))
    p.add_argument("--set", action="append", metavar="VAR=VALUE",
                   help="input binding, e.g. 's[x]@1=1' (repeatable)")
    common(sub.add_parser("constraints",
                          help="print the protocol's equality constraints"))
    p = common(sub.add_parser("prove",
                              help="prove a constraint holds in every run"),
               backend=True)
    p.add_argument("--goal", required=True,
                   help="constraint to prove, e.g. 'out@1 == s[x]@1'")
    common(sub.add_parser("check-conf",
                          help="confidentiality typing per partition"),
           backend=True).add_argument("--corrupt", metavar="IDS",
                                      help="comma-separated corrupt clients")
    common(sub.add_parser("check-int",
                          help="integrity typing per partition"),
           backend=True).add_argument("--corrupt", metavar="IDS")
    p = common(sub.add_parser("verify-sig",
                              help="verify function signatures"),
               pre=False, backend=True)
    p.add_argument("--fun", help="verify only this function")
    common(sub.add_parser("typecheck",
                          help="compositional check of a codebase"),
           backend=True)
    p = sub.add_parser("oracle", help="brute-force hyperproperty oracles")
    p.add_argument("property", choices=["gr", "nimo", "integrity"])
    common(p)
    p.add_argument("--corrupt", metavar="IDS")
    p.add_argument("--verbose", action="store_true")
    p = common(sub.add_parser("emit-smtlib",
                              help="emit the SMT-LIB script for a protocol"))
    p.add_argument("--goal", help="negated and conjoined, for entailment")
    p.add_argument("-o", "--output", help="write the script to a file")
    return top


_DISPATCH = {
    "parse": cmd_parse,
    "expand": cmd_expand,
    "eval": cmd_eval,
    "constraints": cmd_constraints,
    "prove": cmd_prove,
    "check-conf": cmd_check_conf,
    "check-int": cmd_check_int,
    "verify-sig": cmd_verify_sig,
    "typecheck": cmd_typecheck,
    "oracle": cmd_oracle,
    "emit-smtlib": cmd_emit_smtlib,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (ParseError, PreludeError, FieldError, UsageError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
