"""The ten acceptance criteria, with pinned time tolerances."""

import random
import time

import pytest

from conftest import corpus
from genlib import random_entailment, random_protocol
from overture import constraints as Cn
from overture.ast_core import parse_protocol, partitions
from overture.conf_types import check_confidentiality
from overture.field import Prime
from overture.int_types import check_integrity_typing
from overture.pmf_oracles import (check_gradual_release, check_integrity,
                                  check_nimo)
from overture.prelude_lang import expand_function, parse_codebase
from overture.prelude_types import (QueryLog, check_program, soundness_bridge,
                                    verify_signature)
from overture.semantics import enumerate_runs, input_vars

BIG = 2**31 - 1

ADD3_GOAL = "out@1 == s[1]@1 + s[2]@2 + s[3]@3"


def entails_protocol(pi, goal, backend="enum", e_pre=None, solver=None):
    base = Cn.toeq(pi)
    if e_pre is not None:
        base = Cn.CAnd(e_pre, base)
    return Cn.entails(base, goal, pi.prime, backend=backend, solver=solver)


# 1. Correctness of 3-party additive sharing.

@pytest.mark.parametrize("p", [2, 3, 5])
def test_criterion_1_add3_small_primes_under_1s(p):
    prime = Prime(p)
    pi = parse_protocol(corpus("add3.ovt"), prime)
    goal = Cn.parse_constraint(ADD3_GOAL, prime)
    t0 = time.perf_counter()
    res = entails_protocol(pi, goal)
    elapsed = time.perf_counter() - t0
    assert res.holds is True
    assert elapsed < 1.0


def test_criterion_1_add3_large_prime_solver_under_10s(solver):
    prime = Prime(BIG)
    pi = parse_protocol(corpus("add3.ovt"), prime)
    goal = Cn.parse_constraint(ADD3_GOAL, prime)
    t0 = time.perf_counter()
    res = entails_protocol(pi, goal, backend="smt", solver=solver)
    elapsed = time.perf_counter() - t0
    assert res.holds is True
    assert elapsed < 10.0


# 2. GMW and-gate postcondition, both backends, and the mutated gate.

def test_criterion_2_gmw_post_both_backends(solver):
    cb = parse_codebase(corpus("gmw.pre"), Prime(2))
    exp = expand_function(cb, "andgmw", ["z", "x", "y"])
    enum_res = entails_protocol(exp.protocol, exp.post)
    smt_res = entails_protocol(exp.protocol, exp.post, backend="smt",
                               solver=solver)
    assert enum_res.holds is True
    assert smt_res.holds == enum_res.holds

    bad = parse_codebase(corpus("gmw_bad.pre"), Prime(2))
    bad_exp = expand_function(bad, "andgmw", ["z", "x", "y"])
    enum_bad = entails_protocol(bad_exp.protocol, bad_exp.post)
    smt_bad = entails_protocol(bad_exp.protocol, bad_exp.post, backend="smt",
                               solver=solver)
    assert enum_bad.holds is False and smt_bad.holds is False
    for res in (enum_bad, smt_bad):
        cm = res.countermodel
        assert cm is not None
        assert Cn.eval_constraint(cm, Cn.toeq(bad_exp.protocol), 2)
        assert not Cn.eval_constraint(cm, bad_exp.post, 2)


# 3. BDOZ mult postcondition.

@pytest.mark.parametrize("p", [2, 5])
def test_criterion_3_bdoz_mult_small_primes(p):
    cb = parse_codebase(corpus("bdoz_mult.pre"), Prime(p))
    exp = expand_function(cb, "mult", ["z", "x", "y"])
    res = Cn.entails(Cn.CAnd(exp.pre, Cn.toeq(exp.protocol)), exp.post,
                     Prime(p))
    assert res.holds is True


def test_criterion_3_bdoz_mult_large_prime_under_10s(solver):
    cb = parse_codebase(corpus("bdoz_mult.pre"), Prime(BIG))
    exp = expand_function(cb, "mult", ["z", "x", "y"])
    t0 = time.perf_counter()
    res = Cn.entails(Cn.CAnd(exp.pre, Cn.toeq(exp.protocol)), exp.post,
                     Prime(BIG), backend="smt", solver=solver)
    elapsed = time.perf_counter() - t0
    assert res.holds is True
    assert elapsed < 10.0


# 4. Constraint models are exactly the passive runs.

def test_criterion_4_models_equal_runs_on_200_random_protocols():
    rng = random.Random(20240811)
    checked = 0
    while checked < 200:
        p = rng.choice([2, 3])
        pi, e_pre = random_protocol(rng, p, max_vars=6)
        e = Cn.toeq(pi)
        if e_pre is not None:
            e = Cn.CAnd(e_pre, e)
        domain = sorted(input_vars(pi, e_pre) | pi.assigned_vars(),
                        key=lambda v: v.sort_key())
        models = {frozenset(m.items()) for m in Cn.models_over(e, domain, p)}
        runs = {frozenset(m.items()) for m in enumerate_runs(pi, e_pre)}
        assert models == runs, f"disagreement on protocol #{checked}"
        checked += 1
    assert checked >= 200


# 5. Confidentiality typing vs the gradual-release oracle.

def test_criterion_5_conf_typing_and_gr_oracle():
    p2 = Prime(2)
    gmw = parse_codebase(corpus("gmw.pre"), p2)
    from overture.prelude_lang import expand_program
    gmw_pi = expand_program(gmw).protocol
    add3 = parse_protocol(corpus("add3.ovt"), p2)
    for pi in (gmw_pi, add3):
        for H, C in partitions(pi, nonempty_corrupt=True):
            rep = check_confidentiality(pi, H, C)
            assert rep.ok
            ok, _ = check_gradual_release(pi, H, C)
            assert ok

    leaky = parse_protocol(corpus("leaky.ovt"), p2)
    H, C = frozenset({1}), frozenset({2})
    rep = check_confidentiality(leaky, H, C)
    assert not rep.ok
    ok, witness = check_gradual_release(leaky, H, C)
    assert not ok and witness is not None


# 6. Integrity typing vs the bounded-adversary oracle.

def test_criterion_6_int_typing_and_oracle():
    p2 = Prime(2)
    e_pre = Cn.parse_constraint(corpus("bdoz_pre.eq"), p2)
    from overture.prelude_lang import expand_program

    good = expand_program(
        parse_codebase(corpus("bdoz_sum_open.pre"), p2)).protocol
    for C in (frozenset({1}), frozenset({2})):
        H = frozenset(good.federation) - C
        assert check_integrity_typing(good, H, C, e_pre).ok

    mutant = expand_program(
        parse_codebase(corpus("bdoz_sum_open_noassert.pre"), p2)).protocol
    for C in (frozenset({1}), frozenset({2})):
        H = frozenset(mutant.federation) - C
        assert not check_integrity_typing(mutant, H, C, e_pre).ok
    H, C = frozenset({1}), frozenset({2})
    ok, witness, _ = check_integrity(mutant, H, C, e_pre)
    assert not ok and witness is not None


# 7. NIMO on 3-party addition.

def test_criterion_7_nimo_add3_under_30s():
    pi = parse_protocol(corpus("add3.ovt"), Prime(2))
    t0 = time.perf_counter()
    for H, C in partitions(pi, nonempty_corrupt=True):
        ok, witness = check_nimo(pi, H, C)
        assert ok, f"NIMO refuted at C={sorted(C)}: {witness}"
    assert time.perf_counter() - t0 < 30.0


# 8. Compositionality metric.

def test_criterion_8_query_counts_for_20_sum_chain():
    p2 = Prime(2)
    cb = parse_codebase(corpus("bdoz_chain20.pre"), p2)
    e_pre = Cn.parse_constraint(corpus("bdoz_pre.eq"), p2)
    log = QueryLog()
    sig = verify_signature(cb, "sum", log=log)
    assert sig.ok
    prog = check_program(cb, e_pre, log=log)
    assert prog.ok
    assert log.count("post") == 1
    assert log.count("pre") == 20
    assert log.count() == 21


# 9. Soundness bridge over the whole corpus.

def test_criterion_9_soundness_bridge_zero_disagreements():
    p2 = Prime(2)
    e_pre = Cn.parse_constraint(corpus("bdoz_pre.eq"), p2)
    programs = [("gmw.pre", None), ("gmw_bad.pre", None),
                ("bdoz_sum_open.pre", e_pre),
                ("bdoz_sum_open_noassert.pre", e_pre),
                ("bdoz_chain20.pre", e_pre),
                ("ygc_encode.pre", None)]
    for name, pre in programs:
        cb = parse_codebase(corpus(name), p2)
        br = soundness_bridge(cb, pre)
        assert br.ok, f"{name}: {br.disagreements}"


# 10. Backend agreement on random entailment queries.

def test_criterion_10_backend_agreement_100_queries(solver):
    rng = random.Random(20240812)
    agreements = 0
    for k in range(100):
        p = rng.choice([2, 3, 5])
        lhs, rhs = random_entailment(rng, p, max_vars=5)
        enum_res = Cn.entails(lhs, rhs, Prime(p), backend="enum")
        smt_res = Cn.entails(lhs, rhs, Prime(p), backend="smt", solver=solver)
        assert enum_res.holds is not None and smt_res.holds is not None
        assert enum_res.holds == smt_res.holds, f"query {k} at p={p}"
        agreements += 1
    assert agreements == 100
