from conftest import corpus
from overture import ast_core as A
from overture.ast_core import Var, parse_protocol
from overture.conf_types import (Cipher, check_confidentiality,
                                 leakage_closure, type_protocol)
from overture.field import Prime
from overture.prelude_lang import expand_program, parse_codebase

P2 = Prime(2)


def test_add3_share_has_nested_cipher_type():
    pi = parse_protocol(corpus("add3.ovt"), P2)
    gamma, _ = type_protocol(pi)
    share = gamma[Var(A.MESG, "s1", 2)]
    # s[1] padded by r[local]@1, then by r[x]@1
    assert len(share) == 1
    outer = next(iter(share))
    assert isinstance(outer, Cipher)
    assert outer.pad == Var(A.FLIP, "x", 1)
    inner = next(iter(outer.body))
    assert isinstance(inner, Cipher)
    assert inner.pad == Var(A.FLIP, "local", 1)
    assert inner.body == frozenset({Var(A.SECRET, "1", 1)})


def test_add3_accepted_every_partition():
    pi = parse_protocol(corpus("add3.ovt"), P2)
    from overture.ast_core import partitions
    for H, C in partitions(pi, nonempty_corrupt=True):
        rep = check_confidentiality(pi, H, C)
        assert rep.ok, f"C={sorted(C)}: leaked {rep.leaked}"


def test_gmw_accepted_with_hint():
    cb = parse_codebase(corpus("gmw.pre"), P2)
    pi = expand_program(cb).protocol
    assert pi.hints
    from overture.ast_core import partitions
    for H, C in partitions(pi, nonempty_corrupt=True):
        rep = check_confidentiality(pi, H, C)
        assert rep.ok
        assert not rep.hint_failures


def test_bogus_hint_rejected():
    cb = parse_codebase(corpus("gmw.pre"), P2)
    pi = expand_program(cb).protocol
    v, t = pi.hints[0]
    from overture import constraints as Cn
    wrong = A.Protocol(pi.cmds, pi.federation, pi.prime,
                       ((v, Cn.TAdd(t, Cn.TConst(1))),))
    rep = check_confidentiality(wrong, frozenset({2}), frozenset({1}))
    assert not rep.ok
    assert rep.hint_failures


def test_direct_leak_rejected():
    pi = parse_protocol(corpus("leaky.ovt"), P2)
    rep = check_confidentiality(pi, frozenset({1}), frozenset({2}))
    assert not rep.ok
    assert Var(A.SECRET, "x", 1) in rep.leaked


def test_unpadded_operand_falls_through_to_dependencies():
    # s + s' is no encoding: both secrets flow to the message
    src = "m[c]@2 := (s[x] + s[y])@1;"
    pi = parse_protocol(src, P2)
    gamma, _ = type_protocol(pi)
    t = gamma[Var(A.MESG, "c", 2)]
    assert t == frozenset({Var(A.SECRET, "x", 1), Var(A.SECRET, "y", 1)})
    rep = check_confidentiality(pi, frozenset({1}), frozenset({2}))
    assert not rep.ok


def test_closure_decrypts_when_pad_leaks():
    # pad sent in the clear alongside the ciphertext
    src = ("m[c]@2 := (s[x] + r[k])@1;\n"
           "m[k]@2 := (r[k])@1;")
    pi = parse_protocol(src, P2)
    gamma, _ = type_protocol(pi)
    closure = leakage_closure(gamma, pi, frozenset({1}), frozenset({2}))
    assert Var(A.SECRET, "x", 1) in closure
    rep = check_confidentiality(pi, frozenset({1}), frozenset({2}))
    assert not rep.ok


def test_sub_encodings_count_left_pad_only():
    # phi - r encodes, but r - phi does not
    enc = parse_protocol("m[c]@2 := (s[x] - r[k])@1;", P2)
    gamma, _ = type_protocol(enc)
    assert isinstance(next(iter(gamma[Var(A.MESG, "c", 2)])), Cipher)
    non = parse_protocol("m[c]@2 := (r[k] - s[x])@1;", P2)
    gamma, _ = type_protocol(non)
    t = gamma[Var(A.MESG, "c", 2)]
    assert Var(A.SECRET, "x", 1) in t
