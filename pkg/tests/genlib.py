"""Random generators for property tests: small well-formed protocols and
constraint pairs with a bounded variable count."""

import random
from typing import List, Optional, Tuple

from overture import ast_core as A
from overture import constraints as Cn
from overture.ast_core import Protocol, Var
from overture.field import Prime


def random_expr(rng: random.Random, avail: List[Var], p: int,
                depth: int) -> A.Expr:
    if depth <= 0 or (not avail and rng.random() < 0.5):
        if avail and rng.random() < 0.75:
            return A.VRef(rng.choice(avail))
        return A.Const(rng.randrange(p))
    op = rng.choice(["add", "add", "sub", "mul", "not", "mux", "leaf"])
    if op == "leaf":
        return random_expr(rng, avail, p, 0)
    if op == "not":
        return A.Not(random_expr(rng, avail, p, depth - 1))
    if op == "mux":
        return A.Mux(random_expr(rng, avail, p, depth - 1),
                     random_expr(rng, avail, p, depth - 1),
                     random_expr(rng, avail, p, depth - 1))
    ctor = {"add": A.Add, "sub": A.Sub, "mul": A.Mul}[op]
    return ctor(random_expr(rng, avail, p, depth - 1),
                random_expr(rng, avail, p, depth - 1))


def random_protocol(rng: random.Random, p: int,
                    max_vars: int = 6) -> Tuple[Protocol, Optional[Cn.Constraint]]:
    """A small well-formed protocol, possibly with a preprocessing
    constraint over an unassigned message variable."""
    prime = Prime(p)
    fed = sorted(rng.sample([1, 2, 3], rng.choice([2, 2, 3])))

    inputs: List[Var] = []
    n_inputs = rng.randint(1, 3)
    for k in range(n_inputs):
        kind = rng.choice([A.SECRET, A.FLIP])
        inputs.append(Var(kind, f"i{k}", rng.choice(fed)))
    total = len(inputs)

    e_pre = None
    if rng.random() < 0.3 and total < max_vars:
        pre_var = Var(A.MESG, "pre", rng.choice(fed))
        owner_avail = [v for v in inputs]
        term = Cn.toeq_expr(random_expr(rng, owner_avail, p, 1), prime)
        e_pre = Cn.CEq(Cn.TVar(pre_var), term)
        inputs.append(pre_var)
        total += 1

    def avail(client: int, mesgs, reveals) -> List[Var]:
        out = [v for v in inputs if v.owner == client]
        out += [v for v in mesgs if v.owner == client]
        out += list(reveals)
        return out

    cmds: List[A.Cmd] = []
    mesgs: List[Var] = []
    reveals: List[Var] = []
    outs: set = set()
    fresh = 0
    for _ in range(rng.randint(1, 4)):
        kind = rng.choice(["mesg", "mesg", "reveal", "out", "assert"])
        src = rng.choice(fed)
        readable = avail(src, mesgs, reveals)
        if total >= max_vars and kind != "assert":
            kind = "assert"
        if kind == "mesg":
            target = Var(A.MESG, f"v{fresh}", rng.choice(fed))
            fresh += 1
            cmds.append(A.MesgAssign(target, src,
                                     random_expr(rng, readable, p, 2)))
            mesgs.append(target)
            total += 1
        elif kind == "reveal":
            target = Var(A.REVEAL, f"w{fresh}", None)
            fresh += 1
            cmds.append(A.RevealAssign(target, src,
                                       random_expr(rng, readable, p, 2)))
            reveals.append(target)
            total += 1
        elif kind == "out":
            if src in outs:
                continue
            cmds.append(A.OutAssign(src, random_expr(rng, readable, p, 2)))
            outs.add(src)
            total += 1
        else:
            cmds.append(A.Assert(random_expr(rng, readable, p, 1),
                                 random_expr(rng, readable, p, 1), src))
    if not any(not isinstance(c, A.Assert) for c in cmds):
        cmds.append(A.OutAssign(fed[0],
                                random_expr(rng, avail(fed[0], [], []), p, 1)))
    pi = Protocol(tuple(cmds), frozenset(fed), prime, ())
    pi.check_well_formed()
    return pi, e_pre


def random_term(rng: random.Random, pool: List[Var], p: int,
                depth: int) -> Cn.Term:
    if depth <= 0:
        if rng.random() < 0.7:
            return Cn.TVar(rng.choice(pool))
        return Cn.TConst(rng.randrange(p))
    ctor = rng.choice([Cn.TAdd, Cn.TAdd, Cn.TSub, Cn.TMul])
    return ctor(random_term(rng, pool, p, depth - 1),
                random_term(rng, pool, p, depth - 1))


def random_entailment(rng: random.Random, p: int,
                      max_vars: int = 5) -> Tuple[Cn.Constraint, Cn.Constraint]:
    pool = []
    for k in range(rng.randint(1, max_vars)):
        kind = rng.choice([A.SECRET, A.FLIP, A.MESG])
        pool.append(Var(kind, f"x{k}", rng.choice([1, 2])))
    lhs = Cn.conj([Cn.CEq(random_term(rng, pool, p, rng.randint(0, 2)),
                          random_term(rng, pool, p, rng.randint(0, 2)))
                   for _ in range(rng.randint(1, 3))])
    if rng.random() < 0.3:
        lhs = Cn.CAnd(lhs, Cn.CNot(Cn.CEq(random_term(rng, pool, p, 1),
                                          random_term(rng, pool, p, 1))))
    rhs = Cn.CEq(random_term(rng, pool, p, rng.randint(0, 2)),
                 random_term(rng, pool, p, rng.randint(0, 2)))
    return lhs, rhs
