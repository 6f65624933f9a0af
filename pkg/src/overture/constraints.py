"""Constraints over finite fields and the toeq compilation.

Terms are field expressions that may cross party lines; constraints are
equalities closed under conjunction and negation. Entailment E1 |= E2 is
decided by unsatisfiability of E1 /\ ~E2, with two backends: an internal
model enumerator (with polynomial presolving so triangular protocols do
not blow up the search space) and an external SMT solver speaking the
finite-field theory.
"""

from __future__ import annotations

import itertools
import os
import shlex
import subprocess
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from .field import Prime
from . import ast_core as A
from .ast_core import (Var, Protocol, MesgAssign, RevealAssign, OutAssign,
                       Assert, Const, VRef, Add, Sub, Mul, OT, OT4,
                       ParseError, TokenStream, tokenize)


class ConstraintError(Exception):
    pass


class EnumerationBudgetError(ConstraintError):
    """The enumeration backend would exceed its assignment budget."""


# Terms.

@dataclass(frozen=True)
class TConst:
    value: int


@dataclass(frozen=True)
class TVar:
    var: Var


@dataclass(frozen=True)
class TAdd:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class TSub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class TMul:
    left: "Term"
    right: "Term"


Term = Union[TConst, TVar, TAdd, TSub, TMul]


@dataclass(frozen=True)
class CEq:
    left: Term
    right: Term


@dataclass(frozen=True)
class CAnd:
    left: "Constraint"
    right: "Constraint"


@dataclass(frozen=True)
class CNot:
    body: "Constraint"


Constraint = Union[CEq, CAnd, CNot]

TRUE = CEq(TConst(0), TConst(0))


def conj(parts: List[Constraint]) -> Constraint:
    if not parts:
        return TRUE
    e = parts[0]
    for p in parts[1:]:
        e = CAnd(e, p)
    return e


def conjuncts(e: Constraint) -> List[Constraint]:
    if isinstance(e, CAnd):
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def term_vars(t: Term) -> FrozenSet[Var]:
    if isinstance(t, TConst):
        return frozenset()
    if isinstance(t, TVar):
        return frozenset([t.var])
    return term_vars(t.left) | term_vars(t.right)


def constraint_vars(e: Constraint) -> FrozenSet[Var]:
    if isinstance(e, CEq):
        return term_vars(e.left) | term_vars(e.right)
    if isinstance(e, CAnd):
        return constraint_vars(e.left) | constraint_vars(e.right)
    return constraint_vars(e.body)


def eval_term(m: Dict[Var, int], t: Term, p: int) -> int:
    if isinstance(t, TConst):
        return t.value % p
    if isinstance(t, TVar):
        v = m.get(t.var)
        if v is None:
            raise ConstraintError(f"unbound variable {t.var} in model")
        return v % p
    l = eval_term(m, t.left, p)
    r = eval_term(m, t.right, p)
    if isinstance(t, TAdd):
        return (l + r) % p
    if isinstance(t, TSub):
        return (l - r) % p
    return (l * r) % p


def eval_constraint(m: Dict[Var, int], e: Constraint, p: int) -> bool:
    if isinstance(e, CEq):
        return eval_term(m, e.left, p) == eval_term(m, e.right, p)
    if isinstance(e, CAnd):
        return eval_constraint(m, e.left, p) and eval_constraint(m, e.right, p)
    return not eval_constraint(m, e.body, p)


# toeq: compiling protocols to constraints.

def toeq_expr(e: A.Expr, p: Prime, side: Optional[list] = None) -> Term:
    """Interpret an (owner-resolved) Overture expression as a term.

    `side` collects boolean side constraints for OT choices at p != 2.
    """
    e = A.desugar(e)
    return _toeq_core(e, p, side if side is not None else [])


def _mux_term(c: Term, low: Term, high: Term) -> Term:
    return TAdd(TMul(TSub(TConst(1), c), low), TMul(c, high))


def _toeq_core(e: A.Expr, p: Prime, side: list) -> Term:
    if isinstance(e, Const):
        return TConst(e.value % p.p)
    if isinstance(e, VRef):
        return TVar(e.var)
    if isinstance(e, Add):
        return TAdd(_toeq_core(e.left, p, side), _toeq_core(e.right, p, side))
    if isinstance(e, Sub):
        return TSub(_toeq_core(e.left, p, side), _toeq_core(e.right, p, side))
    if isinstance(e, Mul):
        return TMul(_toeq_core(e.left, p, side), _toeq_core(e.right, p, side))
    if isinstance(e, OT):
        c = _toeq_core(e.choice, p, side)
        _require_boolean_choice(e.choice, c, p, side)
        return _mux_term(c, _toeq_core(e.left, p, side),
                         _toeq_core(e.right, p, side))
    if isinstance(e, OT4):
        c1 = _toeq_core(e.choice1, p, side)
        c2 = _toeq_core(e.choice2, p, side)
        _require_boolean_choice(e.choice1, c1, p, side)
        _require_boolean_choice(e.choice2, c2, p, side)
        rows = [_toeq_core(r, p, side) for r in e.rows]
        return _mux_term(c1, _mux_term(c2, rows[0], rows[1]),
                         _mux_term(c2, rows[2], rows[3]))
    raise ConstraintError(f"cannot interpret {e!r}")


def _require_boolean_choice(orig: A.Expr, c: Term, p: Prime, side: list) -> None:
    if p.p == 2:
        return
    if not isinstance(orig, VRef):
        raise ConstraintError(
            "OT choice outside F_2 must be a plain variable")
    side.append(CEq(TMul(c, TSub(c, TConst(1))), TConst(0)))


def toeq_cmd(cmd: A.Cmd, p: Prime) -> Constraint:
    side: list = []
    if isinstance(cmd, Assert):
        eq = CEq(toeq_expr(cmd.lhs, p, side), toeq_expr(cmd.rhs, p, side))
    else:
        eq = CEq(TVar(A.assigned_var(cmd)), toeq_expr(cmd.body, p, side))
    return conj(side + [eq])


def toeq(pi: Protocol) -> Constraint:
    return conj([toeq_cmd(c, pi.prime) for c in pi.cmds])


# Polynomial normal forms over F_p, used by the enumeration backend.
# A polynomial is a dict from a monomial (sorted tuple of (var, exponent))
# to a nonzero coefficient in [1, p).

Mono = Tuple[Tuple[Var, int], ...]
Poly = Dict[Mono, int]


def _p_const(c: int, p: int) -> Poly:
    c %= p
    return {(): c} if c else {}


def _p_var(v: Var) -> Poly:
    return {((v, 1),): 1}


def _p_add(a: Poly, b: Poly, p: int) -> Poly:
    out = dict(a)
    for mono, c in b.items():
        nc = (out.get(mono, 0) + c) % p
        if nc:
            out[mono] = nc
        else:
            out.pop(mono, None)
    return out


def _p_neg(a: Poly, p: int) -> Poly:
    return {m: (-c) % p for m, c in a.items()}


def _reduce_mono(mono: Mono, p: int) -> Mono:
    # Fermat: x^p = x as a function on F_p, so exponents fold into [1, p-1].
    out = []
    for v, e in mono:
        if e >= p:
            e = ((e - 1) % (p - 1)) + 1
        out.append((v, e))
    return tuple(out)


def _p_mul(a: Poly, b: Poly, p: int) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        d1 = dict(m1)
        for m2, c2 in b.items():
            d = dict(d1)
            for v, e in m2:
                d[v] = d.get(v, 0) + e
            mono = _reduce_mono(
                tuple(sorted(d.items(), key=lambda kv: kv[0].sort_key())), p)
            nc = (out.get(mono, 0) + c1 * c2) % p
            if nc:
                out[mono] = nc
            else:
                out.pop(mono, None)
    return out


def _p_eval(a: Poly, env: Dict[Var, int], p: int) -> int:
    total = 0
    for mono, c in a.items():
        term = c
        for v, e in mono:
            term = term * pow(env[v], e, p) % p
        total = (total + term) % p
    return total


def _p_vars(a: Poly) -> FrozenSet[Var]:
    vs = set()
    for mono in a:
        for v, _ in mono:
            vs.add(v)
    return frozenset(vs)


def term_poly(t: Term, p: int, subst: Dict[Var, Poly]) -> Poly:
    if isinstance(t, TConst):
        return _p_const(t.value, p)
    if isinstance(t, TVar):
        if t.var in subst:
            return subst[t.var]
        return _p_var(t.var)
    l = term_poly(t.left, p, subst)
    r = term_poly(t.right, p, subst)
    if isinstance(t, TAdd):
        return _p_add(l, r, p)
    if isinstance(t, TSub):
        return _p_add(l, _p_neg(r, p), p)
    return _p_mul(l, r, p)


def _solvable_var(poly: Poly) -> Optional[Tuple[Var, int]]:
    """A variable occurring only as a degree-1 monomial with unit coefficient
    path: poly = c*x + rest, x not in rest. Returns (x, c)."""
    counts: Dict[Var, int] = {}
    linear: Dict[Var, int] = {}
    for mono, c in poly.items():
        for v, e in mono:
            counts[v] = counts.get(v, 0) + 1
            if len(mono) == 1 and e == 1:
                linear[v] = c
    for v, c in linear.items():
        if counts[v] == 1:
            return (v, c)
    return None


class _Presolved:
    """Result of constraint presolving: eliminated variable definitions (in
    order), residual conjunct polynomials / subformulas, and free variables."""

    def __init__(self, p: int):
        self.p = p
        self.elim: List[Tuple[Var, Poly]] = []
        self.residual: List[Constraint] = []
        self.residual_polys: List[Poly] = []
        self.unsat = False


def _presolve(e: Constraint, p: int) -> _Presolved:
    ps = _Presolved(p)
    subst: Dict[Var, Poly] = {}
    pending = conjuncts(e)
    eqs: List[CEq] = []
    others: List[Constraint] = []
    for c in pending:
        (eqs if isinstance(c, CEq) else others).append(c)
    remaining = list(eqs)
    progress = True
    while progress:
        progress = False
        keep = []
        for eq in remaining:
            poly = _p_add(term_poly(eq.left, p, subst),
                          _p_neg(term_poly(eq.right, p, subst), p), p)
            if not poly:
                progress = True
                continue  # identically satisfied
            if list(poly.keys()) == [()]:
                ps.unsat = True
                return ps
            sv = _solvable_var(poly)
            if sv is not None:
                x, c = sv
                # x = -c^-1 * (poly - c*x)
                rest = {m: co for m, co in poly.items() if m != ((x, 1),)}
                inv = pow(c, p - 2, p)
                defn = {m: (-co * inv) % p for m, co in rest.items()}
                subst[x] = defn
                # Re-substitute into previous definitions lazily at eval time;
                # instead keep definitions fully substituted now:
                for y in list(subst):
                    if y != x:
                        subst[y] = _subst_poly(subst[y], x, defn, p)
                ps.elim.append((x, defn))
                progress = True
            else:
                keep.append(eq)
        remaining = keep
        if progress:
            # Definitions changed: polynomials of kept equalities must be
            # recomputed next round (done at loop top).
            continue
    for eq in remaining:
        poly = _p_add(term_poly(eq.left, p, subst),
                      _p_neg(term_poly(eq.right, p, subst), p), p)
        if not poly:
            continue
        if list(poly.keys()) == [()]:
            ps.unsat = True
            return ps
        ps.residual_polys.append(poly)
    ps.subst = subst
    ps.others = others
    return ps


def _subst_poly(a: Poly, x: Var, defn: Poly, p: int) -> Poly:
    if x not in _p_vars(a):
        return a
    out: Poly = {}
    for mono, c in a.items():
        part = _p_const(c, p)
        for v, e in mono:
            base = defn if v == x else _p_var(v)
            for _ in range(e):
                part = _p_mul(part, base, p)
        out = _p_add(out, part, p)
    return out


def _apply_subst_constraint(e: Constraint, subst: Dict[Var, Poly], p: int):
    """Turn a residual subformula into an evaluable (poly-based) tree."""
    if isinstance(e, CEq):
        poly = _p_add(term_poly(e.left, p, subst),
                      _p_neg(term_poly(e.right, p, subst), p), p)
        return ("eq", poly)
    if isinstance(e, CAnd):
        return ("and", _apply_subst_constraint(e.left, subst, p),
                _apply_subst_constraint(e.right, subst, p))
    return ("not", _apply_subst_constraint(e.body, subst, p))


def _eval_tree(tree, env: Dict[Var, int], p: int) -> bool:
    tag = tree[0]
    if tag == "eq":
        return _p_eval(tree[1], env, p) == 0
    if tag == "and":
        return _eval_tree(tree[1], env, p) and _eval_tree(tree[2], env, p)
    return not _eval_tree(tree[1], env, p)


def _tree_vars(tree) -> FrozenSet[Var]:
    if tree[0] == "eq":
        return _p_vars(tree[1])
    if tree[0] == "and":
        return _tree_vars(tree[1]) | _tree_vars(tree[2])
    return _tree_vars(tree[1])


def _tree_const(tree, p: int) -> Optional[bool]:
    """Truth value of a variable-free tree, else None."""
    if _tree_vars(tree):
        return None
    return _eval_tree(tree, {}, p)


# Verdicts.

@dataclass
class Sat:
    model: Dict[Var, int]


@dataclass
class Unsat:
    pass


@dataclass
class Unknown:
    reason: str


Verdict = Union[Sat, Unsat, Unknown]

DEFAULT_BUDGET = 2 ** 20


def _enum_satisfiable(e: Constraint, p: int, budget: int) -> Verdict:
    ps = _presolve(e, p)
    if ps.unsat:
        return Unsat()
    trees = [("eq", poly) for poly in ps.residual_polys]
    trees += [_apply_subst_constraint(o, ps.subst, p) for o in ps.others]
    live = []
    for t in trees:
        c = _tree_const(t, p)
        if c is False:
            return Unsat()
        if c is None:
            live.append(t)
    free = sorted(set().union(*[_tree_vars(t) for t in live]) if live else set(),
                  key=lambda v: v.sort_key())
    if p ** len(free) > budget:
        raise EnumerationBudgetError(
            f"enumeration infeasible: {p}^{len(free)} assignments")
    for values in itertools.product(range(p), repeat=len(free)):
        env = dict(zip(free, values))
        if all(_eval_tree(t, env, p) for t in live):
            return Sat(_complete_model(e, env, ps, p))
    return Unsat()


def _complete_model(e: Constraint, env: Dict[Var, int], ps: _Presolved,
                    p: int) -> Dict[Var, int]:
    model = dict(env)
    for v in constraint_vars(e):
        if v not in model and v not in ps.subst:
            model[v] = 0
    for x, defn in reversed(ps.elim):
        # Definitions were kept fully substituted, so any remaining variables
        # in them are free/defaulted ones already in the model.
        model[x] = _p_eval(ps.subst[x], model, p)
    return model


def models_over(e: Constraint, variables, p: int,
                budget: int = DEFAULT_BUDGET) -> List[Dict[Var, int]]:
    """All models of e with domain exactly `variables` (exact, exhaustive).

    Presolves e first so that triangular constraint systems only enumerate
    genuinely free variables.
    """
    variables = sorted(set(variables), key=lambda v: v.sort_key())
    ps = _presolve(e, p)
    if ps.unsat:
        return []
    trees = [("eq", poly) for poly in ps.residual_polys]
    trees += [_apply_subst_constraint(o, ps.subst, p) for o in ps.others]
    live = []
    for t in trees:
        c = _tree_const(t, p)
        if c is False:
            return []
        if c is None:
            live.append(t)
    determined = [x for x, _ in ps.elim if x in set(variables)]
    free = [v for v in variables if v not in set(determined)]
    need = set().union(*[_tree_vars(t) for t in live]) if live else set()
    for x in determined:
        need |= _p_vars(ps.subst[x])
    hidden = sorted(need - set(free) - set(x for x, _ in ps.elim),
                    key=lambda v: v.sort_key())
    domain = free + hidden
    if p ** len(domain) > budget:
        raise EnumerationBudgetError(
            f"enumeration infeasible: {p}^{len(domain)} assignments")
    out = []
    seen = set()
    for values in itertools.product(range(p), repeat=len(domain)):
        env = dict(zip(domain, values))
        if not all(_eval_tree(t, env, p) for t in live):
            continue
        model = dict(env)
        for x in determined:
            model[x] = _p_eval(ps.subst[x], model, p)
        projected = {v: model[v] for v in variables}
        key = tuple(projected[v] for v in variables)
        if key not in seen:
            seen.add(key)
            out.append(projected)
    return out


# External solver backend.

_SHIM = os.path.join(os.path.dirname(__file__), "ff_solver.js")


def default_solver_cmd() -> List[str]:
    env = os.environ.get("OVERTURE_SOLVER_CMD")
    if env:
        return shlex.split(env)
    return ["node", _SHIM]


class SolverClient:
    """Talks to an external finite-field solver process.

    The bundled node shim is kept alive between queries (Z3's WASM init is
    expensive); each query still gets a fresh solver object inside the shim.
    A custom command is spawned once per query with the script on stdin and
    must print sat/unsat/unknown on the first line, then optional
    `name = value` model lines.
    """

    def __init__(self, cmd: Optional[List[str]] = None, timeout: float = 60.0):
        self.cmd = cmd or default_solver_cmd()
        self.timeout = timeout
        self.persistent = (len(self.cmd) == 2 and self.cmd[0] == "node"
                           and self.cmd[1].endswith("ff_solver.js"))
        self._proc = None

    def _ensure(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.cmd + ["--serve"], stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True)
        return self._proc

    def query(self, script: str) -> Tuple[str, Dict[str, int]]:
        if self.persistent:
            proc = self._ensure()
            proc.stdin.write(script + "\n(exit-query)\n")
            proc.stdin.flush()
            lines = []
            while True:
                line = proc.stdout.readline()
                if line == "":
                    raise ConstraintError("solver process died")
                line = line.strip()
                if line == "===":
                    break
                lines.append(line)
        else:
            try:
                res = subprocess.run(self.cmd, input=script, text=True,
                                     capture_output=True, timeout=self.timeout)
            except subprocess.TimeoutExpired:
                return ("unknown", {})
            lines = [l.strip() for l in res.stdout.splitlines() if l.strip()]
        if not lines:
            return ("unknown", {})
        verdict = lines[0]
        model: Dict[str, int] = {}
        for line in lines[1:]:
            if "=" in line:
                name, _, val = line.partition("=")
                model[name.strip()] = int(val.strip())
        return (verdict, model)

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
        self._proc = None


_default_client: Optional[SolverClient] = None


def shared_solver() -> SolverClient:
    global _default_client
    if _default_client is None:
        _default_client = SolverClient()
    return _default_client


def _smt_symbol(v: Var) -> str:
    return f"|{v}|"


def emit_smtlib(e: Constraint, p: Prime) -> str:
    """Deterministic SMT-LIB v2 script in the finite-field theory."""
    lines = ["(set-logic QF_FF)",
             f"(define-sort F () (_ FiniteField {p.p}))"]
    for v in sorted(constraint_vars(e), key=lambda x: x.sort_key()):
        lines.append(f"(declare-const {_smt_symbol(v)} F)")
    for c in conjuncts(e):
        lines.append(f"(assert {_smt_c(c, p.p)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def _smt_t(t: Term, p: int) -> str:
    if isinstance(t, TConst):
        return f"(as ff{t.value % p} F)"
    if isinstance(t, TVar):
        return _smt_symbol(t.var)
    l, r = _smt_t(t.left, p), _smt_t(t.right, p)
    if isinstance(t, TAdd):
        return f"(ff.add {l} {r})"
    if isinstance(t, TSub):
        return f"(ff.add {l} (ff.neg {r}))"
    return f"(ff.mul {l} {r})"


def _smt_c(e: Constraint, p: int) -> str:
    if isinstance(e, CEq):
        return f"(= {_smt_t(e.left, p)} {_smt_t(e.right, p)})"
    if isinstance(e, CAnd):
        return f"(and {_smt_c(e.left, p)} {_smt_c(e.right, p)})"
    return f"(not {_smt_c(e.body, p)})"


def _smt_satisfiable(e: Constraint, p: Prime,
                     client: Optional[SolverClient]) -> Verdict:
    client = client or shared_solver()
    script = emit_smtlib(e, p)
    verdict, raw_model = client.query(script)
    if verdict == "unsat":
        return Unsat()
    if verdict == "sat":
        by_name = {str(v): v for v in constraint_vars(e)}
        model = {}
        for name, val in raw_model.items():
            name = name.strip("|")
            if name in by_name:
                model[by_name[name]] = val % p.p
        for v in constraint_vars(e):
            model.setdefault(v, 0)
        return Sat(model)
    return Unknown(verdict or "no solver output")


def satisfiable(e: Constraint, p: Prime, backend: str = "enum",
                budget: int = DEFAULT_BUDGET,
                solver: Optional[SolverClient] = None) -> Verdict:
    if backend == "enum":
        try:
            return _enum_satisfiable(e, p.p, budget)
        except EnumerationBudgetError as exc:
            return Unknown(str(exc))
    if backend == "smt":
        return _smt_satisfiable(e, p, solver)
    raise ConstraintError(f"unknown backend {backend!r}")


def entails(e1: Constraint, e2: Constraint, p: Prime, backend: str = "enum",
            budget: int = DEFAULT_BUDGET,
            solver: Optional[SolverClient] = None):
    """True, False (with .countermodel), or Unknown."""
    v = satisfiable(CAnd(e1, CNot(e2)), p, backend, budget, solver)
    if isinstance(v, Unsat):
        return EntailmentResult(True, None)
    if isinstance(v, Sat):
        return EntailmentResult(False, v.model)
    return EntailmentResult(None, None, reason=v.reason)


@dataclass
class EntailmentResult:
    holds: Optional[bool]  # None means unknown
    countermodel: Optional[Dict[Var, int]]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds is True


# Constraint surface parser (.eq files, pre/post blocks, hints, goals).
# Terms use explicit owners: m[w]@2, s[x]@1, p[w]; a parenthesized term may
# carry a trailing @i that owns every unqualified variable inside it.

class _TermParser:
    def __init__(self, ts: TokenStream, p: Prime):
        self.ts = ts
        self.p = p

    def constraint(self) -> Constraint:
        parts = [self.disjunct()]
        while self.ts.at("/\\"):
            self.ts.next()
            parts.append(self.disjunct())
        return conj(parts)

    def disjunct(self) -> Constraint:
        if self.ts.at("~"):
            self.ts.next()
            if self.ts.at("("):
                self.ts.next()
                inner = self.constraint()
                self.ts.expect(")")
                return CNot(inner)
        t1 = self.term(None)
        self.ts.expect("==")
        t2 = self.term(None)
        return CEq(self._close(t1), self._close(t2))

    def term(self, client) -> Term:
        t = self.factor_chain(client)
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            rhs = self.factor_chain(client)
            t = TAdd(t, rhs) if op == "+" else TSub(t, rhs)
        return t

    def factor_chain(self, client) -> Term:
        t = self.atom(client)
        while self.ts.at("*"):
            self.ts.next()
            t = TMul(t, self.atom(client))
        return t

    def atom(self, client) -> Term:
        ts = self.ts
        t = ts.peek()
        if t.text == "~":
            ts.next()
            return TSub(TConst(1), self.atom(client))
        if t.text == "-":
            ts.next()
            return TSub(TConst(0), self.atom(client))
        if t.text == "(":
            ts.next()
            inner = self.term(client)
            ts.expect(")")
            if ts.at("@"):
                ts.next()
                owner = self._client_id()
                inner = _assign_owner(inner, owner)
            return inner
        if t.kind == "num":
            ts.next()
            return TConst(int(t.text) % self.p.p)
        if t.text in ("s", "r", "m", "p"):
            kind = {"s": A.SECRET, "r": A.FLIP, "m": A.MESG, "p": A.REVEAL}[t.text]
            ts.next()
            ts.expect("[")
            nt = ts.next()
            if nt.kind not in ("id", "num", "str"):
                raise ParseError("expected an identifier", nt.line, nt.col)
            name = nt.text.strip('"')
            ts.expect("]")
            if kind == A.REVEAL:
                return TVar(Var(A.REVEAL, name, None))
            if ts.at("@"):
                ts.next()
                return TVar(Var(kind, name, self._client_id()))
            return _OwnerlessVar(kind, name)
        if t.text == "out":
            ts.next()
            ts.expect("@")
            return TVar(Var(A.OUT, "", self._client_id()))
        ts.error("expected a term")

    def _client_id(self) -> int:
        t = self.ts.next()
        if t.kind != "num":
            raise ParseError("expected a client id", t.line, t.col)
        return int(t.text)

    def _close(self, t: Term) -> Term:
        for v in _collect_ownerless(t):
            raise ParseError(
                f"variable {v.kind}[{v.name}] needs an explicit @client here",
                self.ts.peek().line, self.ts.peek().col)
        return t


@dataclass(frozen=True)
class _OwnerlessVar:
    kind: str
    name: str


def _assign_owner(t, owner: int):
    if isinstance(t, _OwnerlessVar):
        return TVar(Var(t.kind, t.name, owner))
    if isinstance(t, TAdd):
        return TAdd(_assign_owner(t.left, owner), _assign_owner(t.right, owner))
    if isinstance(t, TSub):
        return TSub(_assign_owner(t.left, owner), _assign_owner(t.right, owner))
    if isinstance(t, TMul):
        return TMul(_assign_owner(t.left, owner), _assign_owner(t.right, owner))
    return t


def _collect_ownerless(t) -> list:
    if isinstance(t, _OwnerlessVar):
        return [t]
    if isinstance(t, (TAdd, TSub, TMul)):
        return _collect_ownerless(t.left) + _collect_ownerless(t.right)
    return []


def parse_constraint(source: str, p: Prime) -> Constraint:
    ts = TokenStream(tokenize(source))
    e = _TermParser(ts, p).constraint()
    t = ts.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return e


def pretty_term(t: Term) -> str:
    if isinstance(t, TConst):
        return str(t.value)
    if isinstance(t, TVar):
        return str(t.var)
    op = {"TAdd": "+", "TSub": "-", "TMul": "*"}[type(t).__name__]
    return f"({pretty_term(t.left)} {op} {pretty_term(t.right)})"


def pretty_constraint(e: Constraint) -> str:
    if isinstance(e, CEq):
        return f"{pretty_term(e.left)} == {pretty_term(e.right)}"
    if isinstance(e, CAnd):
        return f"{pretty_constraint(e.left)} /\\ {pretty_constraint(e.right)}"
    return f"~({pretty_constraint(e.body)})"
