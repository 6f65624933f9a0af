"""Overture abstract syntax, surface parser, and pretty printer.

Variables are "kinded": secrets s[w]@i, flips r[w]@i, messages m[w]@i,
public reveals p[w] (no owner), and per-client outputs out@i (no name).
`r[local]` is ordinary surface syntax for a flip named "local" owned by
the computing client; distinct clients get distinct variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Optional, Union

from .field import Prime

SECRET = "secret"
FLIP = "flip"
MESG = "mesg"
REVEAL = "reveal"
OUT = "out"

_KIND_SIGIL = {SECRET: "s", FLIP: "r", MESG: "m", REVEAL: "p"}
_KIND_ORDER = {SECRET: 0, FLIP: 1, MESG: 2, REVEAL: 3, OUT: 4}


class OvertureError(Exception):
    """Structural or syntax error in a protocol."""


class ParseError(OvertureError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Var:
    kind: str
    name: str
    owner: Optional[int]

    def __post_init__(self) -> None:
        if self.kind in (SECRET, FLIP, MESG, OUT) and self.owner is None:
            raise OvertureError(f"{self.kind} variable needs an owner")
        if self.kind == REVEAL and self.owner is not None:
            raise OvertureError("reveals are public and have no owner")
        if self.kind == OUT and self.name != "":
            raise OvertureError("outputs have no name")

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.name, self.owner or 0)

    def __str__(self) -> str:
        if self.kind == OUT:
            return f"out@{self.owner}"
        if self.kind == REVEAL:
            return f"p[{self.name}]"
        return f"{_KIND_SIGIL[self.kind]}[{self.name}]@{self.owner}"


# Expressions. After desugar() only VRef/Const/Add/Sub/Mul/OT/OT4 remain.

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class VRef:
    var: Var


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    body: "Expr"


@dataclass(frozen=True)
class Mux:
    cond: "Expr"
    low: "Expr"
    high: "Expr"


@dataclass(frozen=True)
class OT:
    choice: "Expr"       # evaluated at the receiver
    left: "Expr"         # evaluated at the sender
    right: "Expr"
    receiver: int
    sender: int


@dataclass(frozen=True)
class OT4:
    choice1: "Expr"      # evaluated at the receiver
    choice2: "Expr"
    rows: tuple          # four sender expressions, index 2*b1 + b2
    receiver: int
    sender: int


Expr = Union[Const, VRef, Add, Sub, Mul, Not, Mux, OT, OT4]


# Commands.

@dataclass(frozen=True)
class MesgAssign:
    target: Var
    src: int
    body: Expr


@dataclass(frozen=True)
class RevealAssign:
    target: Var
    src: int
    body: Expr


@dataclass(frozen=True)
class OutAssign:
    client: int
    body: Expr

    @property
    def target(self) -> Var:
        return Var(OUT, "", self.client)


@dataclass(frozen=True)
class Assert:
    lhs: Expr
    rhs: Expr
    client: int


Cmd = Union[MesgAssign, RevealAssign, OutAssign, Assert]


def computing_client(cmd: Cmd) -> int:
    if isinstance(cmd, (MesgAssign, RevealAssign)):
        return cmd.src
    if isinstance(cmd, OutAssign):
        return cmd.client
    return cmd.client


def assigned_var(cmd: Cmd) -> Optional[Var]:
    if isinstance(cmd, (MesgAssign, RevealAssign)):
        return cmd.target
    if isinstance(cmd, OutAssign):
        return cmd.target
    return None


def expr_vars(e: Expr) -> frozenset:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, VRef):
        return frozenset([e.var])
    if isinstance(e, (Add, Sub, Mul)):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Not):
        return expr_vars(e.body)
    if isinstance(e, Mux):
        return expr_vars(e.cond) | expr_vars(e.low) | expr_vars(e.high)
    if isinstance(e, OT):
        return expr_vars(e.choice) | expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, OT4):
        vs = expr_vars(e.choice1) | expr_vars(e.choice2)
        for row in e.rows:
            vs |= expr_vars(row)
        return vs
    raise OvertureError(f"not an expression: {e!r}")


def cmd_vars(cmd: Cmd) -> frozenset:
    if isinstance(cmd, Assert):
        return expr_vars(cmd.lhs) | expr_vars(cmd.rhs)
    vs = expr_vars(cmd.body)
    tgt = assigned_var(cmd)
    return vs | frozenset([tgt])


def desugar(e: Expr) -> Expr:
    """Expand mux and ~ so only core forms remain."""
    if isinstance(e, (Const, VRef)):
        return e
    if isinstance(e, Add):
        return Add(desugar(e.left), desugar(e.right))
    if isinstance(e, Sub):
        return Sub(desugar(e.left), desugar(e.right))
    if isinstance(e, Mul):
        return Mul(desugar(e.left), desugar(e.right))
    if isinstance(e, Not):
        return Sub(Const(1), desugar(e.body))
    if isinstance(e, Mux):
        c = desugar(e.cond)
        return Add(Mul(Sub(Const(1), c), desugar(e.low)),
                   Mul(c, desugar(e.high)))
    if isinstance(e, OT):
        return OT(desugar(e.choice), desugar(e.left), desugar(e.right),
                  e.receiver, e.sender)
    if isinstance(e, OT4):
        return OT4(desugar(e.choice1), desugar(e.choice2),
                   tuple(desugar(r) for r in e.rows), e.receiver, e.sender)
    raise OvertureError(f"not an expression: {e!r}")


@dataclass(frozen=True)
class Protocol:
    cmds: tuple
    federation: frozenset
    prime: Prime
    hints: tuple = dc_field(default_factory=tuple)  # (Var, Term) pairs

    def check_well_formed(self) -> None:
        seen = set()
        for cmd in self.cmds:
            tgt = assigned_var(cmd)
            if tgt is not None:
                if tgt in seen:
                    raise OvertureError(f"variable {tgt} assigned twice")
                seen.add(tgt)
        for cmd in self.cmds:
            _check_ownership(cmd)

    def all_vars(self) -> frozenset:
        vs = frozenset()
        for cmd in self.cmds:
            vs |= cmd_vars(cmd)
        return vs

    def assigned_vars(self) -> frozenset:
        return frozenset(v for v in (assigned_var(c) for c in self.cmds)
                         if v is not None)

    def free_vars(self) -> frozenset:
        """Variables read but never assigned: secrets, flips, preprocessed."""
        return self.all_vars() - self.assigned_vars()


def _check_ownership(cmd: Cmd) -> None:
    """Every plain reference inside a command must be local to its client."""
    def chk(e: Expr, client: int) -> None:
        if isinstance(e, VRef):
            v = e.var
            if v.kind != REVEAL and v.owner != client:
                raise OvertureError(
                    f"variable {v} used at client {client} but owned by {v.owner}")
        elif isinstance(e, (Add, Sub, Mul)):
            chk(e.left, client)
            chk(e.right, client)
        elif isinstance(e, Not):
            chk(e.body, client)
        elif isinstance(e, Mux):
            chk(e.cond, client)
            chk(e.low, client)
            chk(e.high, client)
        elif isinstance(e, OT):
            chk(e.choice, e.receiver)
            chk(e.left, e.sender)
            chk(e.right, e.sender)
        elif isinstance(e, OT4):
            chk(e.choice1, e.receiver)
            chk(e.choice2, e.receiver)
            for row in e.rows:
                chk(row, e.sender)

    if isinstance(cmd, Assert):
        chk(cmd.lhs, cmd.client)
        chk(cmd.rhs, cmd.client)
    else:
        chk(cmd.body, computing_client(cmd))


# Role sets.

def role_sets(pi: Protocol) -> dict:
    vs = pi.all_vars()
    sets = {"S": set(), "R": set(), "M": set(), "P": set(), "O": set()}
    for v in vs:
        key = {SECRET: "S", FLIP: "R", MESG: "M", REVEAL: "P", OUT: "O"}[v.kind]
        sets[key].add(v)
    out = {k: frozenset(s) for k, s in sets.items()}
    out["V"] = out["M"] | out["P"]
    return out


def owned_by(vs, clients) -> frozenset:
    return frozenset(v for v in vs if v.owner in clients)


def views_split(pi: Protocol, H: frozenset, C: frozenset) -> dict:
    """Corrupt views V_H|>C and honest views V_C|>H."""
    H, C = frozenset(H), frozenset(C)
    if H & C or (H | C) != pi.federation:
        raise OvertureError("H and C must partition the federation")
    hc, ch = set(), set()
    for cmd in pi.cmds:
        if isinstance(cmd, RevealAssign):
            (hc if cmd.src in H else ch).add(cmd.target)
        elif isinstance(cmd, MesgAssign):
            if cmd.target.owner in C and cmd.src in H:
                hc.add(cmd.target)
            elif cmd.target.owner in H and cmd.src in C:
                ch.add(cmd.target)
    return {"V_HC": frozenset(hc), "V_CH": frozenset(ch)}


def partitions(pi: Protocol, nonempty_corrupt: bool = False) -> Iterator[tuple]:
    """All (H, C) splits of the federation, in a stable order."""
    fed = sorted(pi.federation)
    n = len(fed)
    for bits in range(2 ** n):
        C = frozenset(fed[i] for i in range(n) if bits & (1 << i))
        if nonempty_corrupt and not C:
            continue
        yield (frozenset(fed) - C, C)


# Tokenizer shared with the constraint and Prelude parsers.

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<str>"[^"\n]*")
  | (?P<op>:=|\+\+|==|/\\|[-+*~=@\[\](){};,.:])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str  # num | id | str | op | eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup != "ws":
            toks.append(Token(m.lastgroup, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


class TokenStream:
    def __init__(self, tokens: list):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def at(self, text: str, ahead: int = 0) -> bool:
        return self.peek(ahead).text == text

    def error(self, msg: str):
        t = self.peek()
        raise ParseError(msg + f" (found {t.text!r})", t.line, t.col)


# Surface parser for .ovt files.

class _OvtParser:
    def __init__(self, source: str, prime: Prime):
        self.ts = TokenStream(tokenize(source))
        self.prime = prime

    def parse(self) -> Protocol:
        cmds = []
        while not self.ts.at(""):
            if self.ts.peek().kind == "eof":
                break
            cmds.append(self.command())
            self.ts.expect(";")
        fed = set()
        for cmd in cmds:
            fed.add(computing_client(cmd))
            for v in cmd_vars(cmd):
                if v.owner is not None:
                    fed.add(v.owner)
        pi = Protocol(tuple(cmds), frozenset(fed), self.prime)
        pi.check_well_formed()
        return pi

    def command(self) -> Cmd:
        ts = self.ts
        t = ts.peek()
        if t.text == "assert":
            ts.next()
            ts.expect("(")
            client_holder = []
            lhs = self.expr(None)
            ts.expect("=")
            rhs = self.expr(None)
            ts.expect(")")
            ts.expect("@")
            client = self.client_id()
            return Assert(_resolve(lhs, client), _resolve(rhs, client), client)
        if t.text == "out":
            ts.next()
            ts.expect("@")
            client = self.client_id()
            ts.expect(":=")
            body, src = self.body()
            if src != client:
                raise ParseError(
                    f"out@{client} must be computed by client {client}, not {src}",
                    t.line, t.col)
            return OutAssign(client, body)
        if t.text in ("m", "p"):
            kind = MESG if t.text == "m" else REVEAL
            ts.next()
            ts.expect("[")
            name = self.name()
            ts.expect("]")
            if kind == MESG:
                ts.expect("@")
                owner = self.client_id()
                target = Var(MESG, name, owner)
            else:
                target = Var(REVEAL, name, None)
            ts.expect(":=")
            body, src = self.body(receiver=target.owner)
            if kind == MESG:
                return MesgAssign(target, src, body)
            return RevealAssign(target, src, body)
        ts.error("expected a command")

    def body(self, receiver: Optional[int] = None) -> tuple:
        """Right-hand side of an assignment: returns (expr, src client)."""
        ts = self.ts
        if ts.at("OT") or ts.at("OT4"):
            return self.ot_body(receiver)
        e = self.expr(None)
        ts.expect("@")
        src = self.client_id()
        return _resolve(e, src), src

    def ot_body(self, receiver: Optional[int]) -> tuple:
        ts = self.ts
        form = ts.next().text
        ts.expect("(")
        args = [self.expr(None)]
        while ts.at(","):
            ts.next()
            args.append(self.expr(None))
        ts.expect(")")
        ts.expect("@")
        sender = self.client_id()
        if receiver is None:
            ts.error(f"{form} requires a message target (the receiver)")
        if form == "OT":
            if len(args) != 3:
                ts.error("OT takes (choice, left, right)")
            return OT(_resolve(args[0], receiver), _resolve(args[1], sender),
                      _resolve(args[2], sender), receiver, sender), sender
        if len(args) != 6:
            ts.error("OT4 takes (choice1, choice2, row1, row2, row3, row4)")
        rows = tuple(_resolve(a, sender) for a in args[2:])
        return OT4(_resolve(args[0], receiver), _resolve(args[1], receiver),
                   rows, receiver, sender), sender

    def client_id(self) -> int:
        t = self.ts.next()
        if t.kind != "num":
            raise ParseError("expected a client id", t.line, t.col)
        return int(t.text)

    def name(self) -> str:
        t = self.ts.next()
        if t.kind not in ("id", "num"):
            raise ParseError("expected an identifier", t.line, t.col)
        if "$" in t.text:
            raise ParseError("'$' is reserved for fresh values", t.line, t.col)
        return t.text

    # Expression grammar with unresolved owners (client filled in later).

    def expr(self, _client) -> Expr:
        e = self.term()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.ts.at("*"):
            self.ts.next()
            e = Mul(e, self.factor())
        return e

    def factor(self) -> Expr:
        ts = self.ts
        t = ts.peek()
        if t.text == "~":
            ts.next()
            return Not(self.factor())
        if t.text == "-":
            ts.next()
            return Sub(Const(0), self.factor())
        if t.text == "(":
            ts.next()
            e = self.expr(None)
            ts.expect(")")
            return e
        if t.kind == "num":
            ts.next()
            return Const(int(t.text) % self.prime.p)
        if t.text == "mux":
            ts.next()
            ts.expect("(")
            c = self.expr(None)
            ts.expect(",")
            a = self.expr(None)
            ts.expect(",")
            b = self.expr(None)
            ts.expect(")")
            return Mux(c, a, b)
        if t.text in ("s", "r", "m", "p"):
            kind = {"s": SECRET, "r": FLIP, "m": MESG, "p": REVEAL}[t.text]
            ts.next()
            ts.expect("[")
            name = self.name()
            ts.expect("]")
            return _Unresolved(kind, name)
        ts.error("expected an expression")


@dataclass(frozen=True)
class _Unresolved:
    """A variable reference whose owner is the (not yet known) client."""
    kind: str
    name: str


def _resolve(e, client: int) -> Expr:
    if isinstance(e, _Unresolved):
        if e.kind == REVEAL:
            return VRef(Var(REVEAL, e.name, None))
        return VRef(Var(e.kind, e.name, client))
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(_resolve(e.left, client), _resolve(e.right, client))
    if isinstance(e, Sub):
        return Sub(_resolve(e.left, client), _resolve(e.right, client))
    if isinstance(e, Mul):
        return Mul(_resolve(e.left, client), _resolve(e.right, client))
    if isinstance(e, Not):
        return Not(_resolve(e.body, client))
    if isinstance(e, Mux):
        return Mux(_resolve(e.cond, client), _resolve(e.low, client),
                   _resolve(e.high, client))
    if isinstance(e, (OT, OT4, VRef)):
        return e
    raise OvertureError(f"cannot resolve {e!r}")


def parse_protocol(source: str, prime: Prime) -> Protocol:
    return _OvtParser(source, prime).parse()


# Pretty printer (inverse of the parser on resolved ASTs).

def _pp_expr(e: Expr, client: Optional[int]) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, VRef):
        v = e.var
        if v.kind == REVEAL:
            return f"p[{v.name}]"
        sig = _KIND_SIGIL[v.kind]
        return f"{sig}[{v.name}]"
    if isinstance(e, Add):
        return f"({_pp_expr(e.left, client)} + {_pp_expr(e.right, client)})"
    if isinstance(e, Sub):
        return f"({_pp_expr(e.left, client)} - {_pp_expr(e.right, client)})"
    if isinstance(e, Mul):
        return f"({_pp_expr(e.left, client)} * {_pp_expr(e.right, client)})"
    if isinstance(e, Not):
        return f"~{_pp_expr(e.body, client)}"
    if isinstance(e, Mux):
        return (f"mux({_pp_expr(e.cond, client)}, {_pp_expr(e.low, client)}, "
                f"{_pp_expr(e.high, client)})")
    raise OvertureError(f"cannot print {e!r}")


def pretty_cmd(cmd: Cmd) -> str:
    if isinstance(cmd, Assert):
        return (f"assert({_pp_expr(cmd.lhs, cmd.client)} = "
                f"{_pp_expr(cmd.rhs, cmd.client)})@{cmd.client};")
    if isinstance(cmd, OutAssign):
        return f"out@{cmd.client} := ({_pp_expr(cmd.body, cmd.client)})@{cmd.client};"
    body = cmd.body
    if isinstance(body, OT):
        rhs = (f"OT({_pp_expr(body.choice, body.receiver)}, "
               f"{_pp_expr(body.left, body.sender)}, "
               f"{_pp_expr(body.right, body.sender)})@{body.sender}")
    elif isinstance(body, OT4):
        rows = ", ".join(_pp_expr(r, body.sender) for r in body.rows)
        rhs = (f"OT4({_pp_expr(body.choice1, body.receiver)}, "
               f"{_pp_expr(body.choice2, body.receiver)}, {rows})@{body.sender}")
    else:
        rhs = f"({_pp_expr(body, cmd.src)})@{cmd.src}"
    return f"{pretty_target(cmd.target)} := {rhs};"


def pretty_target(v: Var) -> str:
    return str(v)


def pretty_protocol(pi: Protocol) -> str:
    return "\n".join(pretty_cmd(c) for c in pi.cmds) + "\n"
