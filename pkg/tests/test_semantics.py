import pytest

from conftest import corpus
from overture import ast_core as A
from overture import constraints as Cn
from overture import semantics as Sem
from overture.ast_core import Var, parse_protocol
from overture.field import Prime
from overture.semantics import (AssertionFailure, adversarial_runs,
                                enumerate_runs, eval_expr, input_vars,
                                pad_bottom, run, run_with_strategy,
                                strategy_space)

P2, P3 = Prime(2), Prime(3)


def test_add3_run_count_and_correctness():
    pi = parse_protocol(corpus("add3.ovt"), P2)
    runs = enumerate_runs(pi)
    # 3 secrets + 6 flips, no asserts: every tape yields one run
    assert len(runs) == 2 ** 9
    for mem in runs:
        total = sum(mem[Var(A.SECRET, str(i), i)] for i in (1, 2, 3)) % 2
        for i in (1, 2, 3):
            assert mem[Var(A.OUT, "", i)] == total


def test_hand_traced_run():
    pi = parse_protocol(corpus("add3.ovt"), P3)
    init = {Var(A.SECRET, "1", 1): 2, Var(A.SECRET, "2", 2): 1,
            Var(A.SECRET, "3", 3): 1}
    for i in (1, 2, 3):
        init[Var(A.FLIP, "local", i)] = 0
        init[Var(A.FLIP, "x", i)] = 1
    mem = run(pi, init)
    # m[s1]@2 = s1 - local - x = 2 - 0 - 1 = 1
    assert mem[Var(A.MESG, "s1", 2)] == 1
    assert mem[Var(A.OUT, "", 1)] == (2 + 1 + 1) % 3


def test_eval_expr_ot4_selects_row_index():
    rows = tuple(A.Const(n) for n in (10, 11, 12, 13))
    e = A.OT4(A.VRef(Var(A.MESG, "b1", 2)), A.VRef(Var(A.MESG, "b2", 2)),
              rows, 2, 1)
    p = 17
    for b1 in range(2):
        for b2 in range(2):
            mem = {Var(A.MESG, "b1", 2): b1, Var(A.MESG, "b2", 2): b2}
            assert eval_expr(mem, e, p) == 10 + 2 * b1 + b2


def test_assert_trips():
    src = "assert(s[x] = 1)@1;\nout@1 := (s[x])@1;"
    pi = parse_protocol(src, P2)
    x = Var(A.SECRET, "x", 1)
    with pytest.raises(AssertionFailure):
        run(pi, {x: 0})
    assert run(pi, {x: 1})[Var(A.OUT, "", 1)] == 1
    # failing tapes produce no passive run
    assert len(enumerate_runs(pi)) == 1


def test_input_vars_with_preprocessing():
    src = "out@1 := (m[pre] + s[x])@1;"
    pi = parse_protocol(src, P2)
    pre = Cn.parse_constraint("m[pre]@1 == r[a]@2", P2)
    vs = input_vars(pi, pre)
    assert Var(A.MESG, "pre", 1) in vs
    assert Var(A.FLIP, "a", 2) in vs
    # preprocessed variables may not be assigned by the protocol
    clash = parse_protocol("m[pre]@1 := (s[x])@1;\nout@1 := (m[pre])@1;", P2)
    with pytest.raises(Sem.OvertureError):
        input_vars(clash, pre)


def test_preprocessing_restricts_initial_memories():
    src = "out@1 := (m[pre])@1;"
    pi = parse_protocol(src, P2)
    pre = Cn.parse_constraint("m[pre]@1 == r[a]@2", P2)
    runs = enumerate_runs(pi, pre)
    assert len(runs) == 2
    for mem in runs:
        assert mem[Var(A.MESG, "pre", 1)] == mem[Var(A.FLIP, "a", 2)]


def test_adversarial_rewrite_at_corrupt_site():
    src = "m[a]@2 := (s[x])@1;\np[r] := (m[a])@2;\nout@1 := (p[r])@1;"
    pi = parse_protocol(src, P2)
    H, C = frozenset({1}), frozenset({2})
    x = Var(A.SECRET, "x", 1)
    # constant-1 strategy at client 2's reveal site
    strategy = {1: ("const", 1)}
    mem, aborted = run_with_strategy(pi, {x: 0}, H, C, strategy)
    assert not aborted
    assert mem[Var(A.REVEAL, "r", None)] == 1
    assert mem[Var(A.OUT, "", 1)] == 1


def test_corrupt_assert_skipped_honest_assert_aborts():
    src = ("m[a]@2 := (s[x])@1;\n"
           "assert(m[a] = 0)@2;\n"
           "assert(s[x] = 0)@1;\n"
           "out@1 := (s[x])@1;")
    pi = parse_protocol(src, P2)
    x = Var(A.SECRET, "x", 1)
    H, C = frozenset({1}), frozenset({2})
    # x = 1 trips the honest assert; the corrupt assert never does
    mem, aborted = run_with_strategy(pi, {x: 1}, H, C, {})
    assert aborted
    assert Var(A.OUT, "", 1) not in mem
    mem, aborted = run_with_strategy(pi, {x: 0}, H, C, {})
    assert not aborted


def test_pad_bottom_fills_unassigned():
    src = "assert(s[x] = 0)@1;\nout@1 := (s[x])@1;"
    pi = parse_protocol(src, P2)
    x = Var(A.SECRET, "x", 1)
    mem, aborted = run_with_strategy(pi, {x: 1}, frozenset({1}), frozenset(),
                                     {})
    padded = pad_bottom(mem, pi)
    assert padded[Var(A.OUT, "", 1)] is None


def test_strategy_space_exhaustive_at_p2():
    src = "m[a]@2 := (s[x])@1;\np[r] := (m[a])@2;\nout@1 := (p[r])@1;"
    pi = parse_protocol(src, P2)
    H, C = frozenset({1}), frozenset({2})
    strategies, exhaustive = strategy_space(pi, H, C)
    strategies = list(strategies)
    assert exhaustive
    # one corrupt site with one visible variable: 4 truth tables
    assert len(strategies) == 4
    runs = adversarial_runs(pi, H, C, strategies[0])
    assert len(runs) == 2
