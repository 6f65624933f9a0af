"""Exact probability mass functions and brute-force hyperproperty oracles.

Everything uses Fractions, so independence and conditional-equality checks
are exact. Outcomes are frozensets of (variable, value) pairs; a value of
None stands for "undefined" in runs that aborted before the variable was
assigned.

The three oracles here decide, by exhaustive enumeration, the properties
the static analyses are meant to guarantee: gradual release (corrupt
message views are independent of honest secrets), input independence
(corrupt views beyond the secrets and outputs carry no information about
honest secrets), and output integrity (whatever a bounded adversary does,
the honest party's view is explained by some honest run on the same honest
secrets).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from . import ast_core as A
from . import constraints as Cn
from . import semantics as Sem
from .ast_core import Var, Protocol, owned_by, role_sets, views_split

Outcome = FrozenSet[tuple]


def mem_outcome(mem: Dict[Var, Optional[int]],
                variables: Optional[Iterable[Var]] = None) -> Outcome:
    if variables is None:
        return frozenset(mem.items())
    return frozenset((v, mem.get(v)) for v in variables)


def restrict(outcome: Outcome, variables: Iterable[Var]) -> Outcome:
    variables = set(variables)
    return frozenset((v, x) for v, x in outcome if v in variables)


def consistent(outcome: Outcome, partial: Outcome) -> bool:
    return partial <= outcome


class Pmf:
    """A finitely supported pmf over outcomes. Weights sum to 1."""

    def __init__(self, probs: Dict[Outcome, Fraction]):
        self.probs = {o: w for o, w in probs.items() if w}
        total = sum(self.probs.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"pmf weights sum to {total}, not 1")

    @classmethod
    def uniform(cls, outcomes: Iterable[Outcome]) -> "Pmf":
        outcomes = list(outcomes)
        if not outcomes:
            raise ValueError("empty outcome list")
        w = Fraction(1, len(outcomes))
        probs: Dict[Outcome, Fraction] = {}
        for o in outcomes:
            probs[o] = probs.get(o, Fraction(0)) + w
        return cls(probs)

    def support(self) -> List[Outcome]:
        return list(self.probs)

    def marginal(self, variables: Iterable[Var]) -> "Pmf":
        variables = set(variables)
        probs: Dict[Outcome, Fraction] = {}
        for o, w in self.probs.items():
            r = restrict(o, variables)
            probs[r] = probs.get(r, Fraction(0)) + w
        return Pmf(probs)

    def prob(self, partial: Outcome) -> Fraction:
        return sum((w for o, w in self.probs.items() if consistent(o, partial)),
                   Fraction(0))

    def conditional(self, variables: Iterable[Var],
                    given: Outcome) -> Dict[Outcome, Fraction]:
        """The conditional distribution over `variables` given the partial
        assignment. When the conditioning event has probability zero the
        result is the zero function (an empty dict)."""
        variables = set(variables)
        num: Dict[Outcome, Fraction] = {}
        denom = Fraction(0)
        for o, w in self.probs.items():
            if consistent(o, given):
                denom += w
                r = restrict(o, variables)
                num[r] = num.get(r, Fraction(0)) + w
        if denom == 0:
            return {}
        return {o: w / denom for o, w in num.items()}

    def independent(self, avars: Iterable[Var],
                    bvars: Iterable[Var]) -> Optional[Tuple[Outcome, Outcome]]:
        """None if the marginals over avars and bvars are independent,
        otherwise a witness pair."""
        ma = self.marginal(avars)
        mb = self.marginal(bvars)
        mab = self.marginal(set(avars) | set(bvars))
        for a, wa in ma.probs.items():
            for b, wb in mb.probs.items():
                joint = mab.probs.get(a | b, Fraction(0))
                if joint != wa * wb:
                    return (a, b)
        return None


def all_mems(variables: Iterable[Var], p: int) -> Iterator[Outcome]:
    """Every total valuation of the given variables, in a stable order."""
    variables = sorted(set(variables), key=lambda v: v.sort_key())
    for values in itertools.product(range(p), repeat=len(variables)):
        yield frozenset(zip(variables, values))


def bd_passive(pi: Protocol, e_pre: Optional[Cn.Constraint] = None,
               budget: int = Cn.DEFAULT_BUDGET) -> Pmf:
    """The basic distribution: uniform over the set of passive runs."""
    runs = Sem.enumerate_runs(pi, e_pre, budget)
    return Pmf.uniform({mem_outcome(m) for m in runs})


def bd_adversarial(pi: Protocol, H: frozenset, C: frozenset,
                   strategy: Sem.Strategy,
                   e_pre: Optional[Cn.Constraint] = None,
                   budget: int = Cn.DEFAULT_BUDGET) -> Pmf:
    """The adversarial distribution over secrets, views, outputs, and
    flips, with None at variables an aborted run never assigned."""
    roles = role_sets(pi)
    keep = roles["S"] | roles["V"] | roles["O"] | roles["R"]
    outcomes = []
    for mem, _aborted in Sem.adversarial_runs(pi, H, C, strategy, e_pre, budget):
        padded = Sem.pad_bottom(mem, pi)
        outcomes.append(mem_outcome(padded, keep & set(padded)))
    return Pmf.uniform(outcomes)


# Oracles.

def check_gradual_release(pi: Protocol, H: frozenset, C: frozenset,
                          e_pre: Optional[Cn.Constraint] = None,
                          budget: int = Cn.DEFAULT_BUDGET):
    """Corrupt message views must be independent of honest secrets.
    Returns (True, None) or (False, witness)."""
    roles = role_sets(pi)
    s_h = owned_by(roles["S"], H)
    m_c = owned_by(roles["M"], C)
    if not s_h or not m_c:
        return True, None
    bd = bd_passive(pi, e_pre, budget)
    witness = bd.independent(m_c, s_h)
    if witness is None:
        return True, None
    return False, witness


def check_nimo(pi: Protocol, H: frozenset, C: frozenset,
               e_pre: Optional[Cn.Constraint] = None,
               budget: int = Cn.DEFAULT_BUDGET):
    """Noninteference modulo output: conditioned on the corrupt secrets and
    all outputs, the honest-to-corrupt views add nothing about honest
    secrets. Quantifies over every valuation, not just the support."""
    p = pi.prime.p
    roles = role_sets(pi)
    s_h = owned_by(roles["S"], H)
    s_c = owned_by(roles["S"], C)
    views = views_split(pi, H, C)["V_HC"]
    base_vars = s_c | roles["O"]
    if not s_h:
        return True, None
    bd = bd_passive(pi, e_pre, budget)
    relevant = bd.marginal(s_h | base_vars | views)
    for m1 in all_mems(base_vars, p):
        cond_base = relevant.conditional(s_h, m1)
        for m2 in all_mems(views, p):
            cond_joint = relevant.conditional(s_h, m1 | m2)
            if cond_joint != cond_base:
                return False, (m1, m2, cond_base, cond_joint)
    return True, None


def check_integrity(pi: Protocol, H: frozenset, C: frozenset,
                    e_pre: Optional[Cn.Constraint] = None,
                    strategies: Optional[Iterable[Sem.Strategy]] = None,
                    budget: int = Cn.DEFAULT_BUDGET):
    """Every adversarial run must be explained by an honest run on the same
    honest secrets: the conditional over the surviving honest-to-corrupt
    views and honest outputs under the adversary equals a passive
    conditional for some completion of the corrupt secrets.

    Returns (ok, witness, exhaustive) where exhaustive says whether the
    strategy family covered every adversary.
    """
    p = pi.prime.p
    roles = role_sets(pi)
    s_all = roles["S"]
    s_h = owned_by(s_all, H)
    s_c = s_all - s_h
    views = views_split(pi, H, C)
    v_hc = views["V_HC"]
    v_ch = views["V_CH"]
    o_h = owned_by(roles["O"], H)
    exhaustive = True
    if strategies is None:
        strategies, exhaustive = Sem.strategy_space(pi, H, C, e_pre)
    bd = bd_passive(pi, e_pre, budget)
    passive_conds: Dict[tuple, Dict[Outcome, Fraction]] = {}

    def passive_cond(x_vars: frozenset, m_sec: Outcome) -> Dict[Outcome, Fraction]:
        key = (x_vars, m_sec)
        if key not in passive_conds:
            passive_conds[key] = bd.conditional(x_vars, m_sec)
        return passive_conds[key]

    for strategy in strategies:
        runs = Sem.adversarial_runs(pi, H, C, strategy, e_pre, budget)
        bd_a = Pmf.uniform([mem_outcome(Sem.pad_bottom(m, pi),
                                        (s_all | roles["V"] | roles["O"]
                                         | roles["R"]))
                            for m, _ in runs])
        seen = set()
        for mem, _aborted in runs:
            x_vars = frozenset(v for v in (v_hc | o_h) if v in mem)
            padded = Sem.pad_bottom(mem, pi)
            given = mem_outcome(padded, s_h | v_ch)
            key = (x_vars, given)
            if key in seen:
                continue
            seen.add(key)
            cond_a = bd_a.conditional(x_vars, given)
            m_sh = mem_outcome(mem, s_h)
            explained = False
            for completion in all_mems(s_c, p):
                if cond_a == passive_cond(x_vars, m_sh | completion):
                    explained = True
                    break
            if not explained:
                return False, (strategy, mem), exhaustive
    return True, None, exhaustive
