"""Confidentiality typing for Overture protocols.

Each assigned variable gets a type: a set of atoms, where an atom is
either a variable (a plain dependency) or a cipher, a value masked by a
one-time-pad flip. Encodings are recognized syntactically (phi + r,
phi - r, r + phi with r a fresh flip of the computing client), and each
flip may serve as a pad at most once.

A partition (H, C) passes when the closure of what the corrupt clients
can read, decrypting ciphers whose pads they also hold, contains no
honest secret.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Set, Tuple, Union

from . import ast_core as A
from . import constraints as Cn
from .ast_core import (Var, Protocol, Assert, VRef, Const, Add, Sub, Mul,
                       OT, OT4, assigned_var, computing_client, expr_vars,
                       owned_by, role_sets)


class ConfTypeError(A.OvertureError):
    """The protocol is not confidentiality-typable."""


@dataclass(frozen=True)
class Cipher:
    pad: Var
    body: FrozenSet  # of Var | Cipher

    def __str__(self) -> str:
        inner = ", ".join(sorted(_atom_str(a) for a in self.body))
        return f"c({self.pad}, {{{inner}}})"


def _atom_str(a) -> str:
    return str(a)


ConfType = FrozenSet  # of Var | Cipher

Gamma = Dict[Var, ConfType]


def _term_to_expr(t: Cn.Term) -> A.Expr:
    if isinstance(t, Cn.TConst):
        return Const(t.value)
    if isinstance(t, Cn.TVar):
        return VRef(t.var)
    l, r = _term_to_expr(t.left), _term_to_expr(t.right)
    if isinstance(t, Cn.TAdd):
        return Add(l, r)
    if isinstance(t, Cn.TSub):
        return Sub(l, r)
    return Mul(l, r)


def _dep_type(e: A.Expr, gamma: Gamma) -> ConfType:
    deps: Set = set()
    for v in expr_vars(e):
        deps |= gamma.get(v, frozenset([v]))
    return frozenset(deps)


def _encode_split(e: A.Expr, client: int) -> Optional[Tuple[A.Expr, Var]]:
    """Match phi + r, phi - r, or r + phi with r a flip of `client` not
    occurring in phi. Returns (phi, r)."""
    def flip(x: A.Expr) -> Optional[Var]:
        if isinstance(x, VRef) and x.var.kind == A.FLIP and x.var.owner == client:
            return x.var
        return None

    if isinstance(e, (Add, Sub)):
        r = flip(e.right)
        if r is not None and r not in expr_vars(e.left):
            return (e.left, r)
    if isinstance(e, Add):
        r = flip(e.left)
        if r is not None and r not in expr_vars(e.right):
            return (e.right, r)
    return None


def _type_expr(e: A.Expr, client: int, gamma: Gamma,
               consumed: Set[Var]) -> ConfType:
    split = _encode_split(e, client)
    if split is not None:
        phi, pad = split
        if pad not in consumed:
            # A fresh pad makes this an encoding and uses the pad up. A
            # reused pad gives no secrecy, so the expression falls through
            # to the plain dependency rule below, exposing the pad and the
            # payload to the closure.
            consumed.add(pad)
            return frozenset(
                [Cipher(pad, _type_expr(phi, client, gamma, consumed))])
    if isinstance(e, VRef):
        return gamma.get(e.var, frozenset([e.var]))
    if isinstance(e, Const):
        return frozenset()
    return _dep_type(e, gamma)


def type_protocol(pi: Protocol) -> Tuple[Gamma, FrozenSet[Var]]:
    """Assign a confidentiality type to every assigned variable. Hints, when
    present for a variable, replace the body for typing purposes (their
    equivalence is discharged separately by validate_hints)."""
    gamma: Gamma = {}
    consumed: Set[Var] = set()
    hint_for = {v: t for v, t in pi.hints}
    for cmd in pi.cmds:
        if isinstance(cmd, Assert):
            continue
        tgt = assigned_var(cmd)
        client = computing_client(cmd)
        body = cmd.body
        if tgt in hint_for:
            body = _term_to_expr(hint_for[tgt])
        gamma[tgt] = _type_expr(A.desugar(body), client, gamma, consumed)
    return gamma, frozenset(consumed)


def validate_hints(pi: Protocol, e_pre: Optional[Cn.Constraint] = None,
                   backend: str = "enum",
                   solver: Optional[Cn.SolverClient] = None) -> list:
    """Each hint must be provably equal to the hinted variable in every run.
    Returns a list of (var, term, result) for hints that failed or came
    back unknown."""
    base = Cn.toeq(pi)
    if e_pre is not None:
        base = Cn.CAnd(e_pre, base)
    failures = []
    for v, t in pi.hints:
        res = Cn.entails(base, Cn.CEq(Cn.TVar(v), t), pi.prime,
                         backend=backend, solver=solver)
        if res.holds is not True:
            failures.append((v, t, res))
    return failures


def _splice(t: ConfType) -> Set:
    return set(t)


def leakage_closure(gamma: Gamma, pi: Protocol, H: frozenset, C: frozenset,
                    include_reveals: bool = False) -> FrozenSet[Var]:
    """Everything the corrupt coalition can derive from its received
    messages (plus, optionally, the public reveals): start from the types
    of those variables together with the corrupt clients' own secrets and
    flips, repeatedly decrypt ciphers whose pads are present, and erase
    whatever stays encrypted to its pad."""
    roles = role_sets(pi)
    seeds = set(owned_by(roles["M"], C))
    if include_reveals:
        seeds |= set(roles["P"])
    atoms: Set = set()
    for v in seeds:
        atoms |= _splice(gamma.get(v, frozenset([v])))
    for v in owned_by(roles["S"] | roles["R"], C):
        atoms.add(v)

    changed = True
    while changed:
        changed = False
        pads = {a for a in atoms if isinstance(a, Var)}
        for a in list(atoms):
            if isinstance(a, Cipher) and a.pad in pads:
                atoms.discard(a)
                atoms |= _splice(a.body)
                changed = True

    out: Set[Var] = set()
    for a in atoms:
        out.add(a.pad if isinstance(a, Cipher) else a)
    return frozenset(out)


@dataclass
class ConfReport:
    ok: bool
    leaked: FrozenSet[Var]
    closure: FrozenSet[Var]
    hint_failures: list
    error: Optional[str] = None


def check_confidentiality(pi: Protocol, H: frozenset, C: frozenset,
                          e_pre: Optional[Cn.Constraint] = None,
                          backend: str = "enum",
                          solver: Optional[Cn.SolverClient] = None,
                          check_hints: bool = True) -> ConfReport:
    try:
        gamma, _ = type_protocol(pi)
    except ConfTypeError as exc:
        return ConfReport(False, frozenset(), frozenset(), [], str(exc))
    hint_failures = []
    if check_hints and pi.hints:
        hint_failures = validate_hints(pi, e_pre, backend, solver)
        if hint_failures:
            return ConfReport(False, frozenset(), frozenset(), hint_failures,
                              "unverifiable hint")
    closure = leakage_closure(gamma, pi, H, C)
    roles = role_sets(pi)
    leaked = closure & owned_by(roles["S"], H)
    return ConfReport(not leaked, leaked, closure, hint_failures)
