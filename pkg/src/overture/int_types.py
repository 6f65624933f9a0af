"""Integrity typing for Overture protocols.

Every assigned variable gets an entry recording which client computed it
and which views (messages and reveals) its defining expression reads.
Under a partition (H, C), entries are labeled in order: a variable is Low
when its origin is corrupt or any view it depends on is Low, High
otherwise. A recognized MAC check (assert(a = k + delta * s)) upgrades the
checked share and tag to High at the asserting client, provided the
asserted equation is actually entailed by the rest of the protocol, so a
vacuous assert cannot launder tainted data.

A partition passes when every honest-to-corrupt view and every honest
output is High.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import ast_core as A
from . import constraints as Cn
from .ast_core import (Var, Protocol, Assert, VRef, Add, Mul,
                       assigned_var, computing_client, expr_vars, owned_by,
                       role_sets, views_split)

LOW = "low"
HIGH = "high"


@dataclass(frozen=True)
class VarEntry:
    var: Var
    origin: int
    deps: FrozenSet[Var]  # views read by the defining expression


@dataclass(frozen=True)
class UpgradeEntry:
    share: Var
    mac: Var
    client: int
    equation: Cn.CEq
    cmd_index: int


Delta = Tuple  # ordered VarEntry | UpgradeEntry


def _view_deps(e: A.Expr) -> FrozenSet[Var]:
    return frozenset(v for v in expr_vars(e)
                     if v.kind in (A.MESG, A.REVEAL))


def _mac_shape(cmd: Assert) -> Optional[Tuple[Var, Var, Var, Var]]:
    """Recognize assert(a = k + delta * s) modulo commutativity, with all
    four operands message variables at the asserting client, a named
    <stem>m, s named <stem>s (same stem), k ending in 'k', and delta named
    'delta'. Returns (a, k, delta, s)."""
    def mesg_at(e: A.Expr) -> Optional[Var]:
        if isinstance(e, VRef) and e.var.kind == A.MESG and e.var.owner == cmd.client:
            return e.var
        return None

    for lhs, rhs in ((cmd.lhs, cmd.rhs), (cmd.rhs, cmd.lhs)):
        a = mesg_at(lhs)
        if a is None or not isinstance(rhs, Add):
            continue
        for k_side, prod_side in ((rhs.left, rhs.right), (rhs.right, rhs.left)):
            k = mesg_at(k_side)
            if k is None or not isinstance(prod_side, Mul):
                continue
            for d_side, s_side in ((prod_side.left, prod_side.right),
                                   (prod_side.right, prod_side.left)):
                d = mesg_at(d_side)
                s = mesg_at(s_side)
                if d is None or s is None:
                    continue
                if (d.name == "delta" and k.name.endswith("k")
                        and a.name.endswith("m") and s.name.endswith("s")
                        and a.name[:-1] == s.name[:-1]):
                    return (a, k, d, s)
    return None


def build_delta(pi: Protocol) -> Delta:
    entries: List = []
    for i, cmd in enumerate(pi.cmds):
        if isinstance(cmd, Assert):
            mac = _mac_shape(cmd)
            if mac is not None:
                a, k, d, s = mac
                eq = Cn.CEq(Cn.toeq_expr(cmd.lhs, pi.prime),
                            Cn.toeq_expr(cmd.rhs, pi.prime))
                entries.append(UpgradeEntry(s, a, cmd.client, eq, i))
            continue
        tgt = assigned_var(cmd)
        entries.append(VarEntry(tgt, computing_client(cmd), _view_deps(cmd.body)))
    return tuple(entries)


def validate_upgrades(pi: Protocol, delta: Delta,
                      e_pre: Optional[Cn.Constraint] = None,
                      backend: str = "enum",
                      solver: Optional[Cn.SolverClient] = None) -> Dict[int, bool]:
    """An upgrade is valid when its equation is entailed by E_pre and the
    rest of the protocol with that assert removed. Returns validity per
    command index."""
    out: Dict[int, bool] = {}
    for entry in delta:
        if not isinstance(entry, UpgradeEntry):
            continue
        rest = Protocol(tuple(c for j, c in enumerate(pi.cmds)
                              if j != entry.cmd_index),
                        pi.federation, pi.prime, pi.hints)
        base = Cn.toeq(rest)
        if e_pre is not None:
            base = Cn.CAnd(e_pre, base)
        res = Cn.entails(base, entry.equation, pi.prime,
                         backend=backend, solver=solver)
        out[entry.cmd_index] = res.holds is True
    return out


def assign_labels(pi: Protocol, delta: Delta, H: frozenset, C: frozenset,
                  valid_upgrades: Optional[Dict[int, bool]] = None) -> Dict[Var, str]:
    """Label every assigned variable Low or High under the partition.
    Dependencies without a label (preprocessed views) default to the level
    of their owner."""
    labels: Dict[Var, str] = {}

    def dep_label(v: Var) -> str:
        if v in labels:
            return labels[v]
        if v.kind == A.REVEAL:
            return LOW  # an unassigned reveal has no trusted origin
        return HIGH if v.owner in H else LOW

    for entry in delta:
        if isinstance(entry, UpgradeEntry):
            valid = True if valid_upgrades is None else \
                valid_upgrades.get(entry.cmd_index, False)
            if entry.client in H and valid:
                labels[entry.share] = HIGH
                labels[entry.mac] = HIGH
            continue
        if entry.origin in C or any(dep_label(v) == LOW for v in entry.deps):
            labels[entry.var] = LOW
        else:
            labels[entry.var] = HIGH
    return labels


@dataclass
class IntReport:
    ok: bool
    low_views: FrozenSet[Var]
    labels: Dict[Var, str]
    invalid_upgrades: List[int] = dc_field(default_factory=list)


def check_integrity_typing(pi: Protocol, H: frozenset, C: frozenset,
                           e_pre: Optional[Cn.Constraint] = None,
                           backend: str = "enum",
                           solver: Optional[Cn.SolverClient] = None,
                           check_upgrades: bool = True) -> IntReport:
    delta = build_delta(pi)
    valid = None
    invalid = []
    if check_upgrades:
        valid = validate_upgrades(pi, delta, e_pre, backend, solver)
        invalid = sorted(i for i, ok in valid.items() if not ok)
    labels = assign_labels(pi, delta, H, C, valid)
    views = views_split(pi, H, C)["V_HC"]
    roles = role_sets(pi)
    must_be_high = views | owned_by(roles["O"], H)
    low = frozenset(v for v in must_be_high if labels.get(v, LOW) == LOW)
    return IntReport(not low, low, labels, invalid)
