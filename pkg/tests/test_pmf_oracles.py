from fractions import Fraction

from conftest import corpus
from overture import ast_core as A
from overture.ast_core import Var, parse_protocol, partitions
from overture.field import Prime
from overture.pmf_oracles import (Pmf, all_mems, bd_passive,
                                  check_gradual_release, check_integrity,
                                  check_nimo, mem_outcome)

P2 = Prime(2)

OTP = "m[c]@2 := (s[x] + r[k])@1;\nout@2 := (m[c])@2;"
LEAK = corpus("leaky.ovt")


def test_pmf_marginal_and_conditional():
    x, y = Var(A.SECRET, "x", 1), Var(A.FLIP, "y", 1)
    pmf = Pmf.uniform(list(all_mems([x, y], 2)))
    marg = pmf.marginal([x])
    assert marg.prob(frozenset({(x, 0)})) == Fraction(1, 2)
    cond = pmf.conditional([x], frozenset({(y, 1)}))
    assert cond[frozenset({(x, 0)})] == Fraction(1, 2)
    # conditioning on probability zero yields the zero function
    assert pmf.conditional([x], frozenset({(y, 5)})) == {}


def test_one_time_pad_independent_leak_not():
    otp = parse_protocol(OTP, P2)
    H, C = frozenset({1}), frozenset({2})
    bd = bd_passive(otp)
    x = Var(A.SECRET, "x", 1)
    c = Var(A.MESG, "c", 2)
    assert bd.independent([c], [x]) is None
    ok, witness = check_gradual_release(otp, H, C)
    assert ok

    leak = parse_protocol(LEAK, P2)
    ok, witness = check_gradual_release(leak, H, C)
    assert not ok and witness is not None


def test_gr_all_partitions_add3():
    pi = parse_protocol(corpus("add3.ovt"), P2)
    for H, C in partitions(pi, nonempty_corrupt=True):
        ok, _ = check_gradual_release(pi, H, C)
        assert ok, f"GR failed at C={sorted(C)}"


def test_nimo_distinguishes_masked_from_leaking_view():
    # a one-time-padded view adds nothing about the secret
    masked = parse_protocol("m[c]@2 := (s[x] + r[k])@1;", P2)
    H, C = frozenset({1}), frozenset({2})
    ok, _ = check_nimo(masked, H, C)
    assert ok
    # an unmasked view determines the secret
    view_leak = parse_protocol("m[c]@2 := (s[x])@1;", P2)
    ok, witness = check_nimo(view_leak, H, C)
    assert not ok and witness is not None


def test_integrity_garbled_relay_refuted():
    # client 2 relays an honest secret into client 1's output
    src = ("m[a]@2 := (s[x])@1;\n"
           "m[b]@1 := (m[a])@2;\n"
           "out@1 := (m[b])@1;")
    pi = parse_protocol(src, P2)
    H, C = frozenset({1}), frozenset({2})
    ok, witness, exhaustive = check_integrity(pi, H, C)
    assert not ok and witness is not None


def test_integrity_passive_only_protocol_holds():
    # the corrupt client computes nothing, so no strategy can deviate
    src = "m[a]@2 := (s[x])@1;\nout@1 := (s[x])@1;"
    pi = parse_protocol(src, P2)
    H, C = frozenset({1}), frozenset({2})
    ok, witness, exhaustive = check_integrity(pi, H, C)
    assert ok and exhaustive


def test_integrity_own_output_deviation_allowed():
    # a corrupt client garbling only its own output is not an aberration
    src = "m[a]@2 := (s[x])@1;\nout@2 := (m[a])@2;"
    pi = parse_protocol(src, P2)
    H, C = frozenset({1}), frozenset({2})
    ok, witness, exhaustive = check_integrity(pi, H, C)
    assert ok


def test_outcomes_include_bottom():
    src = "assert(s[x] = 0)@1;\nm[a]@2 := (s[x])@1;"
    pi = parse_protocol(src, P2)
    mem = {Var(A.SECRET, "x", 1): 1}
    from overture.semantics import pad_bottom, run_with_strategy
    final, aborted = run_with_strategy(pi, mem, frozenset({1, 2}),
                                       frozenset(), {})
    assert aborted
    padded = pad_bottom(final, pi)
    out = mem_outcome(padded)
    assert (Var(A.MESG, "a", 2), None) in out
