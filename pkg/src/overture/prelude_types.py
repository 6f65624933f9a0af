"""Compositional verification of Prelude codebases.

A function signature is verified once, against fresh (symbolic) arguments:
the body is expanded, and its hints and postcondition are discharged from
the precondition and the body's equality constraints.  A program is then
checked compositionally: every recorded call-site precondition instance is
discharged against the whole-program constraints, without re-verifying the
callee bodies.  This keeps the solver-query count at one postcondition
query per signature plus one precondition query per call site.

`soundness_bridge` cross-checks the compositional verdict against direct
whole-program verification of every instantiated pre- and postcondition.
"""

from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional

from . import constraints as Cn
from .constraints import Constraint, EntailmentResult, SolverClient, TRUE
from .field import Prime
from .prelude_lang import (Codebase, Expansion, FreshName, NeedClient,
                           Obligation, PreludeError, expand_function,
                           expand_program)

@dataclass
class QueryLog:
    """Records every solver query made during verification."""

    entries: List[tuple] = dc_field(default_factory=list)  # (kind, label)

    def record(self, kind: str, label: str) -> None:
        self.entries.append((kind, label))

    def count(self, kind: Optional[str] = None) -> int:
        if kind is None:
            return len(self.entries)
        return sum(1 for k, _ in self.entries if k == kind)


def _max_client_literal(cb: Codebase) -> int:
    """Upper bound on the concrete client ids a codebase can mention: the
    largest integer literal anywhere in it (clients are small literals, so
    this overapproximation is safe and cheap)."""
    from .prelude_lang import MNum

    best = 0
    stack: list = [cb.main] + [cb.funs[n] for n in cb.order]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen or isinstance(node, (str, int, Prime)):
            continue
        seen.add(id(node))
        if isinstance(node, MNum):
            best = max(best, node.value)
            continue
        if isinstance(node, (list, tuple)):
            stack.extend(node)
            continue
        if hasattr(node, "__dataclass_fields__"):
            stack.extend(getattr(node, f) for f in node.__dataclass_fields__)
    return best


def instantiate_fresh(cb: Codebase, name: str) -> Expansion:
    """Expand a function at fresh arguments.

    Every parameter starts as a fresh name `$fresh_k` (the parser rejects
    `$` in sources, so these never collide with user identifiers);
    parameters that turn out to be used as client ids are retried as fresh
    clients numbered past every literal in the codebase."""
    f = cb.funs.get(name)
    if f is None:
        raise PreludeError(f"undefined function {name}")
    args: Dict[str, object] = {
        p: FreshName(f"$fresh_{k}", p) for k, p in enumerate(f.params, 1)}
    next_client = _max_client_literal(cb) + 1
    while True:
        try:
            return expand_function(cb, name, [args[p] for p in f.params])
        except NeedClient as exc:
            if not isinstance(args.get(exc.param), FreshName):
                raise PreludeError(
                    f"cannot infer a client for parameter {exc.param}")
            args[exc.param] = next_client
            next_client += 1


@dataclass
class SigReport:
    name: str
    ok: bool
    expansion: Expansion
    post_result: Optional[EntailmentResult]
    hint_failures: list  # of (Var, Term, EntailmentResult)

    def __bool__(self) -> bool:
        return self.ok


def verify_signature(cb: Codebase, name: str,
                     backend: str = "enum",
                     solver: Optional[SolverClient] = None,
                     log: Optional[QueryLog] = None) -> SigReport:
    """Discharge one function's hints and postcondition from its
    precondition and the equality constraints of its expanded body.

    Callee preconditions are not re-checked here; they become obligations
    at each application site (`check_program`)."""
    exp = instantiate_fresh(cb, name)
    pi = exp.protocol
    pre = exp.pre if exp.pre is not None else TRUE
    base = Cn.conj([pre, Cn.toeq(pi)])

    hint_failures = []
    for v, t in pi.hints:
        if log is not None:
            log.record("hint", f"{name}: {v}")
        res = Cn.entails(base, Cn.CEq(Cn.TVar(v), t), pi.prime,
                         backend=backend, solver=solver)
        if res.holds is not True:
            hint_failures.append((v, t, res))

    post_result = None
    if exp.post is not None:
        if log is not None:
            log.record("post", name)
        post_result = Cn.entails(base, exp.post, pi.prime,
                                 backend=backend, solver=solver)

    ok = not hint_failures and (post_result is None or post_result.holds is True)
    return SigReport(name, ok, exp, post_result, hint_failures)


@dataclass
class ProgramReport:
    ok: bool
    expansion: Expansion
    failures: List[tuple]  # of (Obligation, EntailmentResult)

    def __bool__(self) -> bool:
        return self.ok


def check_program(cb: Codebase,
                  e_pre: Optional[Constraint] = None,
                  backend: str = "enum",
                  solver: Optional[SolverClient] = None,
                  log: Optional[QueryLog] = None) -> ProgramReport:
    """Discharge every call-site precondition instance of the main program
    against the whole-program constraints (one query per call site)."""
    exp = expand_program(cb)
    base = Cn.toeq(exp.protocol)
    if e_pre is not None:
        base = Cn.CAnd(e_pre, base)
    failures = []
    for ob in exp.obligations:
        if log is not None:
            log.record("pre", ob.site)
        res = Cn.entails(base, ob.constraint, cb.prime,
                         backend=backend, solver=solver)
        if res.holds is not True:
            failures.append((ob, res))
    return ProgramReport(not failures, exp, failures)


@dataclass
class CodebaseReport:
    ok: bool
    signatures: Dict[str, SigReport]
    program: Optional[ProgramReport]

    def __bool__(self) -> bool:
        return self.ok


def check_codebase(cb: Codebase,
                   e_pre: Optional[Constraint] = None,
                   backend: str = "enum",
                   solver: Optional[SolverClient] = None,
                   log: Optional[QueryLog] = None) -> CodebaseReport:
    """Verify every signature once, then check the main program."""
    sigs: Dict[str, SigReport] = {}
    for name in cb.order:
        f = cb.funs[name]
        if f.pre is None and f.post is None and not _has_hints(cb, name):
            continue
        sigs[name] = verify_signature(cb, name, backend, solver, log)
    program = None
    if cb.main:
        program = check_program(cb, e_pre, backend, solver, log)
    ok = all(r.ok for r in sigs.values()) and (program is None or program.ok)
    return CodebaseReport(ok, sigs, program)


def _has_hints(cb: Codebase, name: str) -> bool:
    from .prelude_lang import SHint
    return any(isinstance(s, SHint) for s in cb.funs[name].body)


@dataclass
class TypecheckReport:
    """The compositional program check: signatures verified once, call-site
    preconditions discharged, and the (query-free) information-flow typing
    run on the expansion for every partition."""

    ok: bool
    codebase: CodebaseReport
    conf: Dict[frozenset, object]  # corrupt set -> ConfReport
    int_: Dict[frozenset, object]  # corrupt set -> IntReport

    def __bool__(self) -> bool:
        return self.ok


def typecheck_program(cb: Codebase,
                      e_pre: Optional[Constraint] = None,
                      backend: str = "enum",
                      solver: Optional[SolverClient] = None,
                      log: Optional[QueryLog] = None) -> TypecheckReport:
    """App-rule check of a whole codebase.

    Hints are trusted here (they were discharged during signature
    verification), so the confidentiality typing issues no solver queries;
    MAC-upgrade side conditions are validated once per assert and logged
    separately from the pre/post obligation counts."""
    from .ast_core import partitions
    from .conf_types import check_confidentiality
    from .int_types import check_integrity_typing

    base = check_codebase(cb, e_pre, backend, solver, log)
    pi = base.program.expansion.protocol if base.program else None
    conf: Dict[frozenset, object] = {}
    integ: Dict[frozenset, object] = {}
    ok = base.ok
    if pi is not None:
        for H, C in partitions(pi, nonempty_corrupt=True):
            conf[C] = check_confidentiality(pi, H, C, e_pre, backend, solver,
                                            check_hints=False)
            integ[C] = check_integrity_typing(pi, H, C, e_pre, backend, solver)
            ok = ok and conf[C].ok and integ[C].ok
    return TypecheckReport(ok, base, conf, integ)


@dataclass
class Disagreement:
    where: str
    kind: str  # "pre" | "post" | "conf" | "int"
    compositional: Optional[bool]
    direct: Optional[bool]


@dataclass
class BridgeReport:
    ok: bool
    disagreements: List[Disagreement]
    compositional: TypecheckReport

    def __bool__(self) -> bool:
        return self.ok


def soundness_bridge(cb: Codebase,
                     e_pre: Optional[Constraint] = None,
                     backend: str = "enum",
                     solver: Optional[SolverClient] = None) -> BridgeReport:
    """Cross-check compositional verification against the whole program.

    Two comparisons per corpus program: (1) for every partition, the
    compositional (hint-trusting) confidentiality and integrity verdicts
    against the whole-program analyses with full hint validation; (2) for
    every call site of the main program, the callee's instantiated pre-
    and postcondition verified directly against E_pre and the equality
    constraints of the full expansion.  A disagreement is anywhere the
    compositional verdict and the direct verdict differ."""
    from .ast_core import partitions
    from .conf_types import check_confidentiality
    from .int_types import check_integrity_typing

    comp = typecheck_program(cb, e_pre, backend, solver)
    if comp.codebase.program is None:
        return BridgeReport(True, [], comp)
    exp = comp.codebase.program.expansion
    pi = exp.protocol
    disagreements: List[Disagreement] = []

    for H, C in partitions(pi, nonempty_corrupt=True):
        whole_conf = check_confidentiality(pi, H, C, e_pre, backend, solver,
                                           check_hints=True)
        if whole_conf.ok != comp.conf[C].ok:
            disagreements.append(Disagreement(
                f"C={sorted(C)}", "conf", comp.conf[C].ok, whole_conf.ok))
        whole_int = check_integrity_typing(pi, H, C, e_pre, backend, solver)
        if whole_int.ok != comp.int_[C].ok:
            disagreements.append(Disagreement(
                f"C={sorted(C)}", "int", comp.int_[C].ok, whole_int.ok))

    base = Cn.toeq(pi)
    if e_pre is not None:
        base = Cn.CAnd(e_pre, base)
    failed_pres = {ob.site for ob, _ in comp.codebase.program.failures}

    for ob in exp.obligations:
        direct = Cn.entails(base, ob.constraint, cb.prime,
                            backend=backend, solver=solver).holds
        compositional = ob.site not in failed_pres
        if direct is not None and direct != compositional:
            disagreements.append(
                Disagreement(ob.site, "pre", compositional, direct))

    for g in exp.guarantees:
        sig = comp.codebase.signatures.get(g.callee)
        # The compositional checker trusts this postcondition instance when
        # the signature verified and the site's precondition discharged.
        compositional = (sig is not None and sig.ok
                         and g.site not in failed_pres)
        if not compositional:
            continue
        direct = Cn.entails(base, g.constraint, cb.prime,
                            backend=backend, solver=solver).holds
        if direct is False:
            disagreements.append(
                Disagreement(g.site, "post", compositional, direct))

    return BridgeReport(not disagreements, disagreements, comp)
