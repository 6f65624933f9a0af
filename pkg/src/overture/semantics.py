"""Concrete execution of Overture protocols.

A memory is a partial map from variables to field values (plain ints in
[0, p)). Passive runs enumerate every assignment of the input variables
(secrets, flips, and any preprocessed values constrained by E_pre) and
execute the command sequence. Adversarial runs additionally rewrite the
commands computed by corrupt clients according to a strategy; honest
assert failures abort the run, leaving the partial memory accumulated so
far.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from . import ast_core as A
from .ast_core import (Var, Protocol, MesgAssign, RevealAssign, OutAssign,
                       Assert, Const, VRef, Add, Sub, Mul, OT, OT4,
                       OvertureError, assigned_var, computing_client,
                       expr_vars, role_sets)
from . import constraints as Cn

Memory = Dict[Var, int]


class AssertionFailure(OvertureError):
    """An assert command at an honest client evaluated to unequal sides."""

    def __init__(self, cmd: Assert, memory: Memory):
        super().__init__(f"assert failed at client {cmd.client}")
        self.cmd = cmd
        self.memory = memory


def eval_expr(mem: Memory, e: A.Expr, p: int) -> int:
    """Evaluate an owner-resolved expression. OT/OT4 use the mux reading
    (1-b)*left + b*right so evaluation agrees with the constraint
    compilation at every prime."""
    if isinstance(e, Const):
        return e.value % p
    if isinstance(e, VRef):
        if e.var not in mem:
            raise OvertureError(f"read of unassigned variable {e.var}")
        return mem[e.var] % p
    if isinstance(e, Add):
        return (eval_expr(mem, e.left, p) + eval_expr(mem, e.right, p)) % p
    if isinstance(e, Sub):
        return (eval_expr(mem, e.left, p) - eval_expr(mem, e.right, p)) % p
    if isinstance(e, Mul):
        return (eval_expr(mem, e.left, p) * eval_expr(mem, e.right, p)) % p
    if isinstance(e, A.Not):
        return (1 - eval_expr(mem, e.body, p)) % p
    if isinstance(e, A.Mux):
        c = eval_expr(mem, e.cond, p)
        lo = eval_expr(mem, e.low, p)
        hi = eval_expr(mem, e.high, p)
        return ((1 - c) * lo + c * hi) % p
    if isinstance(e, OT):
        c = eval_expr(mem, e.choice, p)
        lo = eval_expr(mem, e.left, p)
        hi = eval_expr(mem, e.right, p)
        return ((1 - c) * lo + c * hi) % p
    if isinstance(e, OT4):
        b1 = eval_expr(mem, e.choice1, p)
        b2 = eval_expr(mem, e.choice2, p)
        rows = [eval_expr(mem, r, p) for r in e.rows]
        inner_lo = ((1 - b2) * rows[0] + b2 * rows[1]) % p
        inner_hi = ((1 - b2) * rows[2] + b2 * rows[3]) % p
        return ((1 - b1) * inner_lo + b1 * inner_hi) % p
    raise OvertureError(f"cannot evaluate {e!r}")


def run(pi: Protocol, init: Memory) -> Memory:
    """Passive execution. Raises AssertionFailure if an assert trips."""
    p = pi.prime.p
    mem = dict(init)
    for cmd in pi.cmds:
        if isinstance(cmd, Assert):
            if eval_expr(mem, cmd.lhs, p) != eval_expr(mem, cmd.rhs, p):
                raise AssertionFailure(cmd, mem)
        else:
            mem[assigned_var(cmd)] = eval_expr(mem, cmd.body, p)
    return mem


def input_vars(pi: Protocol, e_pre: Optional[Cn.Constraint] = None) -> frozenset:
    """The initial-memory domain: variables read but never assigned, plus
    preprocessed variables mentioned by E_pre."""
    base = pi.free_vars()
    if e_pre is not None:
        pre_vars = Cn.constraint_vars(e_pre)
        clash = pre_vars & pi.assigned_vars()
        if clash:
            names = ", ".join(str(v) for v in sorted(clash, key=lambda v: v.sort_key()))
            raise OvertureError(
                f"preprocessed variables may not be assigned by the protocol: {names}")
        base = base | pre_vars
    return base


def initial_memories(pi: Protocol, e_pre: Optional[Cn.Constraint] = None,
                     budget: int = Cn.DEFAULT_BUDGET) -> List[Memory]:
    """All initial memories over the input variables, restricted to those
    satisfying E_pre when given. Deterministic order."""
    domain = sorted(input_vars(pi, e_pre), key=lambda v: v.sort_key())
    p = pi.prime.p
    if e_pre is None:
        if p ** len(domain) > budget:
            raise Cn.EnumerationBudgetError(
                f"enumeration infeasible: {p}^{len(domain)} initial memories")
        return [dict(zip(domain, values))
                for values in itertools.product(range(p), repeat=len(domain))]
    return Cn.models_over(e_pre, domain, p, budget)


def enumerate_runs(pi: Protocol, e_pre: Optional[Cn.Constraint] = None,
                   budget: int = Cn.DEFAULT_BUDGET) -> List[Memory]:
    """Final memories of all passive runs. Tapes whose execution trips an
    assert produce no run (matching the constraint-level model set)."""
    out = []
    for init in initial_memories(pi, e_pre, budget):
        try:
            out.append(run(pi, init))
        except AssertionFailure:
            pass
    return out


# Adversarial execution. A strategy maps each corrupt-computed command index
# to a rule for the value written there (asserts at corrupt clients are
# simply skipped, never rewritten).

HONEST = ("honest",)


def corrupt_sites(pi: Protocol, C: frozenset) -> List[int]:
    sites = []
    for i, cmd in enumerate(pi.cmds):
        if isinstance(cmd, Assert):
            continue
        if computing_client(cmd) in C:
            sites.append(i)
    return sites


def visible_vars(pi: Protocol, index: int, C: frozenset,
                 e_pre: Optional[Cn.Constraint] = None) -> List[Var]:
    """Variables a corrupt client can read when command `index` executes:
    everything in the memory domain so far that is corrupt-owned or public."""
    domain = set(input_vars(pi, e_pre))
    for cmd in pi.cmds[:index]:
        tgt = assigned_var(cmd)
        if tgt is not None:
            domain.add(tgt)
    vis = [v for v in domain if v.kind == A.REVEAL or v.owner in C]
    return sorted(vis, key=lambda v: v.sort_key())


Strategy = Dict[int, tuple]


def _site_value(rule: tuple, pi: Protocol, index: int, mem: Memory,
                C: frozenset, p: int,
                e_pre: Optional[Cn.Constraint]) -> int:
    kind = rule[0]
    if kind == "honest":
        return eval_expr(mem, pi.cmds[index].body, p)
    if kind == "const":
        return rule[1] % p
    if kind == "table":
        vis = visible_vars(pi, index, C, e_pre)
        key = tuple(mem[v] for v in vis)
        return rule[1][key] % p
    if kind == "fn":
        return rule[1](mem) % p
    raise OvertureError(f"unknown strategy rule {rule!r}")


def run_with_strategy(pi: Protocol, init: Memory, H: frozenset, C: frozenset,
                      strategy: Strategy,
                      e_pre: Optional[Cn.Constraint] = None) -> Tuple[Memory, bool]:
    """Adversarial execution. Returns (memory, aborted). An abort at an
    honest assert keeps the partial memory accumulated so far."""
    p = pi.prime.p
    mem = dict(init)
    for i, cmd in enumerate(pi.cmds):
        if isinstance(cmd, Assert):
            if cmd.client in C:
                continue
            if eval_expr(mem, cmd.lhs, p) != eval_expr(mem, cmd.rhs, p):
                return mem, True
            continue
        tgt = assigned_var(cmd)
        if computing_client(cmd) in C:
            rule = strategy.get(i, HONEST)
            mem[tgt] = _site_value(rule, pi, i, mem, C, p, e_pre)
        else:
            mem[tgt] = eval_expr(mem, cmd.body, p)
    return mem, False


def adversarial_runs(pi: Protocol, H: frozenset, C: frozenset,
                     strategy: Strategy,
                     e_pre: Optional[Cn.Constraint] = None,
                     budget: int = Cn.DEFAULT_BUDGET) -> List[Tuple[Memory, bool]]:
    return [run_with_strategy(pi, init, H, C, strategy, e_pre)
            for init in initial_memories(pi, e_pre, budget)]


def pad_bottom(mem: Memory, pi: Protocol) -> Dict[Var, Optional[int]]:
    """Extend a (possibly partial) memory with None at every view/output
    variable the run never assigned."""
    roles = role_sets(pi)
    out: Dict[Var, Optional[int]] = dict(mem)
    for v in roles["V"] | roles["O"]:
        out.setdefault(v, None)
    return out


def strategy_space(pi: Protocol, H: frozenset, C: frozenset,
                   e_pre: Optional[Cn.Constraint] = None,
                   table_limit: int = 3) -> Tuple[Iterator[Strategy], bool]:
    """All joint strategies from a bounded family, with a flag saying
    whether the family is exhaustive.

    At p = 2 with at most `table_limit` visible variables per site the
    per-site options are every function of the visible valuation, which is
    exhaustive for that site. Otherwise the site falls back to constants
    plus the honest computation and the family is a bounded sample.
    """
    p = pi.prime.p
    sites = corrupt_sites(pi, C)
    per_site: List[List[tuple]] = []
    exhaustive = True
    for i in sites:
        vis = visible_vars(pi, i, C, e_pre)
        if p == 2 and len(vis) <= table_limit:
            keys = list(itertools.product(range(p), repeat=len(vis)))
            options = [("table", dict(zip(keys, outputs)))
                       for outputs in itertools.product(range(p), repeat=len(keys))]
        else:
            options = [("const", c) for c in range(p)] + [HONEST]
            exhaustive = False
        per_site.append(options)

    def gen() -> Iterator[Strategy]:
        for combo in itertools.product(*per_site):
            yield dict(zip(sites, combo))

    return gen(), exhaustive


def passive_strategy() -> Strategy:
    return {}
