"""The Prelude metalanguage: a non-recursive language of functions that
compute over names, client identities, expression fragments, and records,
and emit Overture protocols.

A codebase is a sequence of function definitions, each optionally preceded
by a pre: block and followed by a post: block, and then a main program of
top-level statements. Value-producing functions end in an expression or a
record; protocol-producing functions are statement sequences. Evaluation
is call-by-value and big-step; expanding a program yields the emitted
protocol together with hint annotations (`x as e` statements) and one
proof obligation per direct call to a function with a precondition.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Tuple, Union

from .field import Prime
from . import ast_core as A
from . import constraints as Cn
from .ast_core import (Var, Protocol, ParseError, OvertureError, Token,
                       TokenStream, tokenize, _Unresolved, _resolve)


class PreludeError(OvertureError):
    pass


# Meta abstract syntax.

@dataclass(frozen=True)
class MNum:
    value: int


@dataclass(frozen=True)
class MStr:
    value: str


@dataclass(frozen=True)
class MIdent:
    name: str


@dataclass(frozen=True)
class MConcat:
    left: "MExpr"
    right: "MExpr"


@dataclass(frozen=True)
class MVarFrag:
    kind: str
    name: "MExpr"
    client: Optional["MExpr"]  # None: owner comes from the context


@dataclass(frozen=True)
class MOutRef:
    client: "MExpr"


@dataclass(frozen=True)
class MBin:
    op: str  # + - *
    left: "MExpr"
    right: "MExpr"


@dataclass(frozen=True)
class MNot:
    body: "MExpr"


@dataclass(frozen=True)
class MMux:
    cond: "MExpr"
    low: "MExpr"
    high: "MExpr"


@dataclass(frozen=True)
class MAt:
    body: "MExpr"
    client: "MExpr"


@dataclass(frozen=True)
class MCall:
    name: str
    args: tuple


@dataclass(frozen=True)
class MRecord:
    fields: tuple  # of (name, MExpr)


MExpr = Union[MNum, MStr, MIdent, MConcat, MVarFrag, MOutRef, MBin, MNot,
              MMux, MAt, MCall, MRecord]


@dataclass(frozen=True)
class MEq:
    left: MExpr
    right: MExpr


@dataclass(frozen=True)
class MConj:
    parts: tuple  # of MEq


# Statements.

@dataclass(frozen=True)
class SLet:
    name: str
    value: MExpr


@dataclass(frozen=True)
class SMesg:
    name: MExpr
    owner: MExpr
    rhs: MExpr


@dataclass(frozen=True)
class SReveal:
    name: MExpr
    rhs: MExpr


@dataclass(frozen=True)
class SOut:
    client: MExpr
    rhs: MExpr


@dataclass(frozen=True)
class SAssert:
    lhs: MExpr
    rhs: MExpr
    client: MExpr


@dataclass(frozen=True)
class SHint:
    name: MExpr
    owner: MExpr
    term: MExpr


@dataclass(frozen=True)
class SExpr:
    """A call in statement position, or the final value of a value body."""
    value: MExpr


Stmt = Union[SLet, SMesg, SReveal, SOut, SAssert, SHint, SExpr]


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple
    body: tuple  # of Stmt
    pre: Optional[MConj]
    post: Optional[MConj]


@dataclass
class Codebase:
    funs: Dict[str, FunDef]
    order: List[str]
    main: Tuple[Stmt, ...]
    prime: Prime


# Parser.

class _PreParser:
    def __init__(self, source: str, prime: Prime):
        self.ts = TokenStream(tokenize(source))
        self.prime = prime

    def parse(self) -> Codebase:
        funs: Dict[str, FunDef] = {}
        order: List[str] = []
        main: List[Stmt] = []
        pending_pre: Optional[MConj] = None
        last_fun: Optional[str] = None
        while self.ts.peek().kind != "eof":
            t = self.ts.peek()
            if t.text in ("pre", "post") and self.ts.at(":", 1):
                which = self.ts.next().text
                self.ts.expect(":")
                self.ts.expect("{")
                block = self.constraint()
                self.ts.expect("}")
                if which == "pre":
                    if pending_pre is not None:
                        self.ts.error("two pre: blocks before a definition")
                    pending_pre = block
                else:
                    if last_fun is None or funs[last_fun].post is not None:
                        self.ts.error("post: block has no preceding definition")
                    f = funs[last_fun]
                    funs[last_fun] = FunDef(f.name, f.params, f.body, f.pre, block)
                continue
            if (t.kind == "id" and self.ts.at("(", 1)
                    and self._is_definition()):
                f = self.fundef(pending_pre)
                pending_pre = None
                if f.name in funs:
                    raise ParseError(f"function {f.name} defined twice",
                                     t.line, t.col)
                funs[f.name] = f
                order.append(f.name)
                last_fun = f.name
                continue
            if pending_pre is not None:
                self.ts.error("pre: block not followed by a definition")
            s = self.stmt()
            main.append(s)
            if not isinstance(s, SLet):
                self.ts.expect(";")
        cb = Codebase(funs, order, tuple(main), self.prime)
        _check_nonrecursive(cb)
        return cb

    def _is_definition(self) -> bool:
        """Distinguish `f(a,b){...}` from a call statement `f(a,b);` by
        scanning ahead for the brace after the matching paren."""
        depth = 0
        i = 1
        while True:
            t = self.ts.peek(i)
            if t.kind == "eof":
                return False
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return self.ts.peek(i + 1).text == "{"
            i += 1

    def fundef(self, pre: Optional[MConj]) -> FunDef:
        name = self.ts.next().text
        self.ts.expect("(")
        params = []
        if not self.ts.at(")"):
            params.append(self._param())
            while self.ts.at(","):
                self.ts.next()
                params.append(self._param())
        self.ts.expect(")")
        self.ts.expect("{")
        body = self.body()
        self.ts.expect("}")
        return FunDef(name, tuple(params), tuple(body), pre, None)

    def _param(self) -> str:
        t = self.ts.next()
        if t.kind != "id":
            raise ParseError("expected a parameter name", t.line, t.col)
        return t.text

    def body(self) -> List[Stmt]:
        stmts: List[Stmt] = []
        while True:
            s = self.stmt()
            stmts.append(s)
            if isinstance(s, SLet):
                continue
            if self.ts.at(";"):
                self.ts.next()
                if self.ts.at("}"):
                    break
                continue
            break
        return stmts

    def stmt(self) -> Stmt:
        ts = self.ts
        t = ts.peek()
        if t.text == "let":
            ts.next()
            name = self._param()
            ts.expect("=")
            value = self.mexpr()
            ts.expect("in")
            return SLet(name, value)
        if t.text == "assert":
            ts.next()
            ts.expect("(")
            lhs = self.mexpr()
            ts.expect("=")
            rhs = self.mexpr()
            ts.expect(")")
            ts.expect("@")
            client = self.catom()
            return SAssert(lhs, rhs, client)
        if t.text == "out" and ts.at("@", 1):
            ts.next()
            ts.next()
            client = self.catom()
            ts.expect(":=")
            return SOut(client, self.mexpr())
        if t.text == "m" and ts.at("[", 1):
            ts.next()
            ts.expect("[")
            name = self.mexpr()
            ts.expect("]")
            ts.expect("@")
            owner = self.catom()
            if ts.at("as"):
                ts.next()
                return SHint(name, owner, self.mexpr())
            ts.expect(":=")
            return SMesg(name, owner, self.mexpr())
        if t.text == "p" and ts.at("[", 1):
            ts.next()
            ts.expect("[")
            name = self.mexpr()
            ts.expect("]")
            ts.expect(":=")
            return SReveal(name, self.mexpr())
        return SExpr(self.mexpr())

    def constraint(self) -> MConj:
        parts = [self.eqn()]
        while self.ts.at("/\\") or self.ts.at(","):
            self.ts.next()
            parts.append(self.eqn())
        return MConj(tuple(parts))

    def eqn(self) -> MEq:
        lhs = self.mexpr()
        self.ts.expect("==")
        return MEq(lhs, self.mexpr())

    # Expressions. `@client` binds tighter than any binary operator;
    # `++` binds tighter than * which binds tighter than + and -.

    def mexpr(self) -> MExpr:
        e = self.mterm()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            e = MBin(op, e, self.mterm())
        return e

    def mterm(self) -> MExpr:
        e = self.mconcat()
        while self.ts.at("*"):
            self.ts.next()
            e = MBin("*", e, self.mconcat())
        return e

    def mconcat(self) -> MExpr:
        e = self.matom()
        while self.ts.at("++"):
            self.ts.next()
            e = MConcat(e, self.matom())
        return e

    def matom(self) -> MExpr:
        e = self._matom_core()
        while self.ts.at("@"):
            self.ts.next()
            e = MAt(e, self.catom())
        return e

    def _matom_core(self) -> MExpr:
        ts = self.ts
        t = ts.peek()
        if t.text == "~":
            ts.next()
            return MNot(self.matom())
        if t.text == "-":
            ts.next()
            return MBin("-", MNum(0), self.matom())
        if t.text == "(":
            ts.next()
            e = self.mexpr()
            ts.expect(")")
            return e
        if t.text == "{":
            ts.next()
            fields = []
            while not ts.at("}"):
                fname = self._param()
                ts.expect("=")
                fields.append((fname, self.mexpr()))
                if ts.at(";"):
                    ts.next()
            ts.expect("}")
            return MRecord(tuple(fields))
        if t.kind == "num":
            ts.next()
            return MNum(int(t.text))
        if t.kind == "str":
            ts.next()
            text = t.text[1:-1]
            if "$" in text:
                raise ParseError("'$' is reserved for fresh values",
                                 t.line, t.col)
            return MStr(text)
        if t.text == "mux":
            ts.next()
            ts.expect("(")
            c = self.mexpr()
            ts.expect(",")
            lo = self.mexpr()
            ts.expect(",")
            hi = self.mexpr()
            ts.expect(")")
            return MMux(c, lo, hi)
        if t.text in ("s", "r", "m", "p") and ts.at("[", 1):
            kind = {"s": A.SECRET, "r": A.FLIP, "m": A.MESG,
                    "p": A.REVEAL}[t.text]
            ts.next()
            ts.expect("[")
            name = self.mexpr()
            ts.expect("]")
            client = None
            if kind != A.REVEAL and ts.at("@"):
                ts.next()
                client = self.catom()
            return MVarFrag(kind, name, client)
        if t.text == "out" and ts.at("@", 1):
            ts.next()
            ts.next()
            return MOutRef(self.catom())
        if t.kind == "id":
            ts.next()
            if ts.at("("):
                ts.next()
                args = []
                if not ts.at(")"):
                    args.append(self.mexpr())
                    while ts.at(","):
                        ts.next()
                        args.append(self.mexpr())
                ts.expect(")")
                return MCall(t.text, tuple(args))
            return MIdent(t.text)
        ts.error("expected an expression")

    def catom(self) -> MExpr:
        t = self.ts.next()
        if t.kind == "num":
            return MNum(int(t.text))
        if t.kind == "id":
            return MIdent(t.text)
        raise ParseError("expected a client", t.line, t.col)


def _calls_in(stmts) -> set:
    out = set()

    def walk_expr(e):
        if isinstance(e, MCall):
            if e.name not in ("OT", "OT4"):
                out.add(e.name)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, (MConcat, MBin)):
            walk_expr(e.left)
            walk_expr(e.right)
        elif isinstance(e, MNot):
            walk_expr(e.body)
        elif isinstance(e, MMux):
            walk_expr(e.cond)
            walk_expr(e.low)
            walk_expr(e.high)
        elif isinstance(e, MAt):
            walk_expr(e.body)
        elif isinstance(e, MVarFrag):
            walk_expr(e.name)
        elif isinstance(e, MRecord):
            for _, fe in e.fields:
                walk_expr(fe)

    for s in stmts:
        if isinstance(s, SLet):
            walk_expr(s.value)
        elif isinstance(s, (SMesg, SReveal, SOut)):
            walk_expr(s.rhs)
        elif isinstance(s, SAssert):
            walk_expr(s.lhs)
            walk_expr(s.rhs)
        elif isinstance(s, SHint):
            walk_expr(s.term)
        elif isinstance(s, SExpr):
            walk_expr(s.value)
    return out


def _check_nonrecursive(cb: Codebase) -> None:
    """Functions may only call previously defined functions."""
    defined: set = set()
    for name in cb.order:
        f = cb.funs[name]
        for callee in _calls_in(f.body):
            if callee not in defined:
                raise PreludeError(
                    f"{name} calls {callee}, which is not defined earlier")
        defined.add(name)
    for callee in _calls_in(cb.main):
        if callee not in defined:
            raise PreludeError(f"main calls undefined function {callee}")


def parse_codebase(source: str, prime: Prime) -> Codebase:
    return _PreParser(source, prime).parse()


# Evaluation.

class FreshName(str):
    """A fresh string value standing in for an unknown name parameter."""

    param: str

    def __new__(cls, text: str, param: str):
        obj = super().__new__(cls, text)
        obj.param = param
        return obj


class NeedClient(PreludeError):
    """A fresh name parameter was used where a client id is required."""

    def __init__(self, param: str):
        super().__init__(f"parameter {param} is used as a client")
        self.param = param


@dataclass
class RecordValue:
    fields: dict  # name -> MetaValue


@dataclass(frozen=True)
class Obligation:
    callee: str
    constraint: Cn.Constraint
    site: str


@dataclass
class Emission:
    cmds: List[A.Cmd] = dc_field(default_factory=list)
    hints: List[tuple] = dc_field(default_factory=list)
    obligations: List[Obligation] = dc_field(default_factory=list)
    guarantees: List[Obligation] = dc_field(default_factory=list)


MetaValue = Union[int, str, A.Expr, _Unresolved, RecordValue]


class _Evaluator:
    def __init__(self, cb: Codebase):
        self.cb = cb
        self.prime = cb.prime
        self.site_counter = 0

    # Value contexts.

    def eval(self, e: MExpr, env: dict) -> MetaValue:
        if isinstance(e, MNum):
            return e.value
        if isinstance(e, MStr):
            return e.value
        if isinstance(e, MIdent):
            if e.name not in env:
                raise PreludeError(f"unbound name {e.name}")
            return env[e.name]
        if isinstance(e, MConcat):
            l = self.eval(e.left, env)
            r = self.eval(e.right, env)
            if not isinstance(l, str) or not isinstance(r, str):
                raise PreludeError("++ expects strings")
            if isinstance(l, FreshName):
                return FreshName(str(l) + str(r), l.param)
            if isinstance(r, FreshName):
                return FreshName(str(l) + str(r), r.param)
            return l + r
        if isinstance(e, MVarFrag):
            name = self._name(self.eval(e.name, env))
            if e.kind == A.REVEAL:
                return A.VRef(Var(A.REVEAL, name, None))
            if e.client is None:
                return _Unresolved(e.kind, name)
            return A.VRef(Var(e.kind, name, self._client(e.client, env)))
        if isinstance(e, MOutRef):
            return A.VRef(Var(A.OUT, "", self._client(e.client, env)))
        if isinstance(e, MBin):
            l = self._as_expr(self.eval(e.left, env))
            r = self._as_expr(self.eval(e.right, env))
            ctor = {"+": A.Add, "-": A.Sub, "*": A.Mul}[e.op]
            return ctor(l, r)
        if isinstance(e, MNot):
            return A.Not(self._as_expr(self.eval(e.body, env)))
        if isinstance(e, MMux):
            return A.Mux(self._as_expr(self.eval(e.cond, env)),
                         self._as_expr(self.eval(e.low, env)),
                         self._as_expr(self.eval(e.high, env)))
        if isinstance(e, MAt):
            client = self._client(e.client, env)
            return _resolve(self._as_expr(self.eval(e.body, env)), client)
        if isinstance(e, MRecord):
            return RecordValue({n: self.eval(fe, env) for n, fe in e.fields})
        if isinstance(e, MCall):
            if e.name in ("OT", "OT4"):
                raise PreludeError(f"{e.name} only appears on the right-hand "
                                   "side of a message assignment")
            return self.call(e, env, None)
        raise PreludeError(f"cannot evaluate {e!r}")

    def _name(self, v: MetaValue) -> str:
        if isinstance(v, str):
            return str(v)
        if isinstance(v, int):
            return str(v)
        raise PreludeError(f"expected a name, got {v!r}")

    def _client(self, e: MExpr, env: dict) -> int:
        v = self.eval(e, env)
        if isinstance(v, FreshName):
            raise NeedClient(v.param)
        if isinstance(v, int):
            return v
        raise PreludeError(f"expected a client, got {v!r}")

    def _as_expr(self, v: MetaValue):
        if isinstance(v, int):
            return A.Const(v % self.prime.p)
        if isinstance(v, (A.Const, A.VRef, A.Add, A.Sub, A.Mul, A.Not,
                          A.Mux, _Unresolved)):
            return v
        raise PreludeError(f"expected an expression, got {v!r}")

    # Protocol contexts.

    def call(self, e: MCall, env: dict, emission: Optional[Emission]):
        f = self.cb.funs.get(e.name)
        if f is None:
            raise PreludeError(f"undefined function {e.name}")
        if len(e.args) != len(f.params):
            raise PreludeError(
                f"{e.name} takes {len(f.params)} arguments, got {len(e.args)}")
        args = [self.eval(a, env) for a in e.args]
        callee_env = dict(zip(f.params, args))
        result = self.run_body(f.body, callee_env, e.name)
        if isinstance(result, Emission):
            if emission is None:
                raise PreludeError(
                    f"{e.name} emits protocol commands in a value position")
            if f.pre is not None or f.post is not None:
                self.site_counter += 1
                site = f"call {self.site_counter} to {e.name}"
                if f.pre is not None:
                    emission.obligations.append(Obligation(
                        e.name, self.eval_constraint(f.pre, callee_env), site))
                if f.post is not None:
                    emission.guarantees.append(Obligation(
                        e.name, self.eval_constraint(f.post, callee_env), site))
            emission.cmds.extend(result.cmds)
            emission.hints.extend(result.hints)
            return None
        return result

    def run_body(self, stmts, env: dict, where: str):
        """Execute a statement sequence. Returns an Emission for protocol
        bodies, or the final MetaValue for value bodies."""
        emission = Emission()
        env = dict(env)
        emitted = False
        for i, s in enumerate(stmts):
            if isinstance(s, SLet):
                env[s.name] = self.eval(s.value, env)
                continue
            if isinstance(s, SExpr):
                if isinstance(s.value, MCall) and \
                        s.value.name in self.cb.funs and \
                        self._is_protocol_fun(s.value.name):
                    self.call(s.value, env, emission)
                    emitted = True
                    continue
                value = self.eval(s.value, env)
                if i != len(stmts) - 1 or emitted:
                    raise PreludeError(
                        f"{where}: value in the middle of a protocol body")
                return value
            self.exec_cmd(s, env, emission)
            emitted = True
        return emission

    def _is_protocol_fun(self, name: str) -> bool:
        body = self.cb.funs[name].body
        tail = body[-1]
        if isinstance(tail, (SMesg, SReveal, SOut, SAssert, SHint)):
            return True
        if isinstance(tail, SExpr) and isinstance(tail.value, MCall) and \
                tail.value.name in self.cb.funs:
            return self._is_protocol_fun(tail.value.name)
        return False

    def exec_cmd(self, s: Stmt, env: dict, emission: Emission) -> None:
        if isinstance(s, SMesg):
            owner = self._client(s.owner, env)
            target = Var(A.MESG, self._name(self.eval(s.name, env)), owner)
            body, src = self.eval_rhs(s.rhs, env, receiver=owner)
            emission.cmds.append(A.MesgAssign(target, src, body))
            return
        if isinstance(s, SReveal):
            target = Var(A.REVEAL, self._name(self.eval(s.name, env)), None)
            body, src = self.eval_rhs(s.rhs, env, receiver=None)
            emission.cmds.append(A.RevealAssign(target, src, body))
            return
        if isinstance(s, SOut):
            client = self._client(s.client, env)
            body, src = self.eval_rhs(s.rhs, env, receiver=client)
            if src != client:
                raise PreludeError(
                    f"out@{client} must be computed by client {client}")
            emission.cmds.append(A.OutAssign(client, body))
            return
        if isinstance(s, SAssert):
            client = self._client(s.client, env)
            lhs = _resolve(self._as_expr(self.eval(s.lhs, env)), client)
            rhs = _resolve(self._as_expr(self.eval(s.rhs, env)), client)
            emission.cmds.append(A.Assert(lhs, rhs, client))
            return
        if isinstance(s, SHint):
            owner = self._client(s.owner, env)
            target = Var(A.MESG, self._name(self.eval(s.name, env)), owner)
            term_expr = self.eval(s.term, env)
            term = Cn.toeq_expr(self._closed(term_expr), self.prime)
            emission.hints.append((target, term))
            return
        raise PreludeError(f"cannot execute {s!r}")

    def _closed(self, v: MetaValue):
        e = self._as_expr(v)
        if _has_unresolved(e):
            raise PreludeError(
                "every variable here needs an explicit @client")
        return e

    def eval_rhs(self, rhs: MExpr, env: dict,
                 receiver: Optional[int]) -> Tuple[A.Expr, int]:
        """A command right-hand side: either an OT form carrying explicit
        receiver and sender, or an expression whose computing client is its
        top-level @ annotation."""
        if isinstance(rhs, MCall) and rhs.name in ("OT", "OT4"):
            return self._eval_ot(rhs, env, receiver)
        if isinstance(rhs, MAt):
            src = self._client(rhs.client, env)
            return _resolve(self._as_expr(self.eval(rhs.body, env)), src), src
        value = self.eval(rhs, env)
        e = self._as_expr(value)
        owners = {v.owner for v in A.expr_vars(e) if v.owner is not None} \
            if not _has_unresolved(e) else set()
        if len(owners) == 1:
            return e, owners.pop()
        raise PreludeError(
            "cannot determine the computing client; add an @client")

    def _eval_ot(self, rhs: MCall, env: dict,
                 receiver: Optional[int]) -> Tuple[A.Expr, int]:
        if receiver is None:
            raise PreludeError(f"{rhs.name} requires a message target")
        args = [self.eval(a, env) for a in rhs.args]
        if rhs.name == "OT":
            if len(args) != 5:
                raise PreludeError("OT takes (choice, left, right, "
                                   "receiver, sender)")
            recv, sender = self._int(args[3]), self._int(args[4])
            self._check_receiver(recv, receiver, "OT")
            return A.OT(_resolve(self._as_expr(args[0]), recv),
                        _resolve(self._as_expr(args[1]), sender),
                        _resolve(self._as_expr(args[2]), sender),
                        recv, sender), sender
        if len(args) == 5 and isinstance(args[2], RecordValue):
            c1, c2, table = args[0], args[1], args[2]
            recv, sender = self._int(args[3]), self._int(args[4])
            try:
                rows = [table.fields[k] for k in ("row1", "row2", "row3", "row4")]
            except KeyError:
                raise PreludeError("OT4 table needs fields row1..row4")
        elif len(args) == 8:
            c1, c2 = args[0], args[1]
            rows = args[2:6]
            recv, sender = self._int(args[6]), self._int(args[7])
        else:
            raise PreludeError("OT4 takes (choice1, choice2, table, "
                               "receiver, sender) or explicit rows")
        self._check_receiver(recv, receiver, "OT4")
        return A.OT4(_resolve(self._as_expr(c1), recv),
                     _resolve(self._as_expr(c2), recv),
                     tuple(_resolve(self._as_expr(r), sender) for r in rows),
                     recv, sender), sender

    def _check_receiver(self, recv: int, target_owner: int, form: str) -> None:
        if recv != target_owner:
            raise PreludeError(
                f"{form} receiver {recv} does not own the message target "
                f"(client {target_owner})")

    def _int(self, v: MetaValue) -> int:
        if isinstance(v, FreshName):
            raise NeedClient(v.param)
        if not isinstance(v, int):
            raise PreludeError(f"expected a client, got {v!r}")
        return v

    # Constraints.

    def eval_constraint(self, c: MConj, env: dict) -> Cn.Constraint:
        parts = []
        for eq in c.parts:
            lhs = Cn.toeq_expr(self._closed(self.eval(eq.left, env)), self.prime)
            rhs = Cn.toeq_expr(self._closed(self.eval(eq.right, env)), self.prime)
            parts.append(Cn.CEq(lhs, rhs))
        return Cn.conj(parts)


def _has_unresolved(e) -> bool:
    if isinstance(e, _Unresolved):
        return True
    if isinstance(e, (A.Add, A.Sub, A.Mul)):
        return _has_unresolved(e.left) or _has_unresolved(e.right)
    if isinstance(e, A.Not):
        return _has_unresolved(e.body)
    if isinstance(e, A.Mux):
        return any(_has_unresolved(x) for x in (e.cond, e.low, e.high))
    return False


def _protocol_of(emission: Emission, prime: Prime) -> Protocol:
    fed = set()
    for cmd in emission.cmds:
        fed.add(A.computing_client(cmd))
        for v in A.cmd_vars(cmd):
            if v.owner is not None:
                fed.add(v.owner)
    pi = Protocol(tuple(emission.cmds), frozenset(fed), prime,
                  tuple(emission.hints))
    pi.check_well_formed()
    return pi


@dataclass
class Expansion:
    protocol: Protocol
    obligations: List[Obligation]
    pre: Optional[Cn.Constraint] = None
    post: Optional[Cn.Constraint] = None
    guarantees: List[Obligation] = dc_field(default_factory=list)


def expand_program(cb: Codebase) -> Expansion:
    """Evaluate the main program to an Overture protocol."""
    if not cb.main:
        raise PreludeError("codebase has no main program")
    ev = _Evaluator(cb)
    result = ev.run_body(cb.main, {}, "main")
    if not isinstance(result, Emission):
        raise PreludeError("main must emit a protocol")
    return Expansion(_protocol_of(result, cb.prime), result.obligations,
                     guarantees=result.guarantees)


def expand_function(cb: Codebase, name: str, args: List[MetaValue]) -> Expansion:
    """Evaluate one function application to an Overture protocol, with its
    pre- and postcondition instantiated at the given arguments."""
    f = cb.funs.get(name)
    if f is None:
        raise PreludeError(f"undefined function {name}")
    if len(args) != len(f.params):
        raise PreludeError(
            f"{name} takes {len(f.params)} arguments, got {len(args)}")
    ev = _Evaluator(cb)
    env = dict(zip(f.params, args))
    result = ev.run_body(f.body, env, name)
    if not isinstance(result, Emission):
        raise PreludeError(f"{name} is value-producing, not a protocol")
    pre = ev.eval_constraint(f.pre, env) if f.pre is not None else None
    post = ev.eval_constraint(f.post, env) if f.post is not None else None
    return Expansion(_protocol_of(result, cb.prime), result.obligations,
                     pre, post, guarantees=result.guarantees)
