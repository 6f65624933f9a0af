import pytest

from conftest import corpus
from overture import ast_core as A
from overture import constraints as Cn
from overture.ast_core import Var, parse_protocol
from overture.field import Prime

P2, P3, P5 = Prime(2), Prime(3), Prime(5)


def sx(name, owner=1, kind=A.SECRET):
    return Var(kind, name, owner)


def test_toeq_shape_for_add3():
    pi = parse_protocol(corpus("add3.ovt"), P2)
    e = Cn.toeq(pi)
    parts = Cn.conjuncts(e)
    assert len(parts) == len(pi.cmds)
    assert all(isinstance(c, Cn.CEq) for c in parts)


def test_eval_constraint_matches_run():
    pi = parse_protocol(corpus("add3.ovt"), P3)
    from overture.semantics import enumerate_runs
    e = Cn.toeq(pi)
    for mem in enumerate_runs(pi):
        assert Cn.eval_constraint(mem, e, 3)


def test_ot_becomes_mux_polynomial():
    src = "m[z]@2 := OT(m[c], r[a], r[b])@1;"
    pi = parse_protocol(src, P2)
    e = Cn.toeq(pi)
    c, a, b, z = (Var(A.MESG, "c", 2), Var(A.FLIP, "a", 1),
                  Var(A.FLIP, "b", 1), Var(A.MESG, "z", 2))
    for cv in range(2):
        for av in range(2):
            for bv in range(2):
                want = bv if cv else av
                mem = {c: cv, a: av, b: bv, z: want}
                assert Cn.eval_constraint(mem, e, 2)


def test_ot_choice_gets_boolean_side_constraint_at_odd_p():
    src = "m[z]@2 := OT(m[c], r[a], r[b])@1;"
    pi = parse_protocol(src, P5)
    e = Cn.toeq(pi)
    c = Var(A.MESG, "c", 2)
    # choice = 2 violates the side constraint b(b-1) = 0
    mem = {c: 2, Var(A.FLIP, "a", 1): 1, Var(A.FLIP, "b", 1): 3,
           Var(A.MESG, "z", 2): 0}
    assert not Cn.eval_constraint(mem, e, 5)


def test_models_over_triangular_system():
    x, y = sx("x"), sx("y", kind=A.FLIP)
    m = Var(A.MESG, "m", 2)
    e = Cn.conj([Cn.CEq(Cn.TVar(m), Cn.TAdd(Cn.TVar(x), Cn.TVar(y)))])
    models = Cn.models_over(e, [x, y, m], 3)
    assert len(models) == 9
    assert all((mod[x] + mod[y]) % 3 == mod[m] for mod in models)


def test_models_over_unsat():
    x = sx("x")
    e = Cn.CAnd(Cn.CEq(Cn.TVar(x), Cn.TConst(0)),
                Cn.CEq(Cn.TVar(x), Cn.TConst(1)))
    assert Cn.models_over(e, [x], 2) == []


def test_presolve_handles_large_linear_chain():
    # 40 chained definitions at p = 5: naive enumeration would be 5^41
    vs = [sx(f"v{i}", kind=A.MESG, owner=1) for i in range(41)]
    parts = [Cn.CEq(Cn.TVar(vs[i + 1]),
                    Cn.TAdd(Cn.TVar(vs[i]), Cn.TConst(1)))
             for i in range(40)]
    e = Cn.conj(parts)
    models = Cn.models_over(e, vs, 5)
    assert len(models) == 5
    for mod in models:
        assert mod[vs[40]] == (mod[vs[0]] + 40) % 5


def test_entails_with_countermodel():
    x, y = sx("x"), sx("y", owner=2)
    e1 = Cn.CEq(Cn.TVar(x), Cn.TVar(x))
    e2 = Cn.CEq(Cn.TVar(x), Cn.TVar(y))
    res = Cn.entails(e1, e2, P3)
    assert res.holds is False
    cm = res.countermodel
    assert cm[x] != cm[y]


def test_entails_budget_exhaustion_is_unknown():
    vs = [sx(f"v{i}") for i in range(25)]
    e1 = Cn.CNot(Cn.CEq(Cn.TAdd(Cn.TVar(vs[0]), Cn.TVar(vs[1])),
                        Cn.TConst(5)))
    # force all 25 vars live with irreducible quadratic conjuncts
    parts = [e1] + [Cn.CEq(Cn.TMul(Cn.TVar(vs[i]), Cn.TVar(vs[i + 1])),
                           Cn.TConst(1))
                    for i in range(24)]
    res = Cn.satisfiable(Cn.conj(parts), P3, budget=100)
    assert isinstance(res, Cn.Unknown)


def test_emit_smtlib_deterministic_and_quoted():
    pi = parse_protocol(corpus("add3.ovt"), P5)
    s1 = Cn.emit_smtlib(Cn.toeq(pi), P5)
    s2 = Cn.emit_smtlib(Cn.toeq(pi), P5)
    assert s1 == s2
    assert "(set-logic QF_FF)" in s1
    assert "(_ FiniteField 5)" in s1
    assert "|s[1]@1|" in s1
    assert "(check-sat)" in s1


def test_constraint_parser_round_trip():
    src = corpus("bdoz_pre.eq")
    e = Cn.parse_constraint(src, P2)
    assert len(Cn.conjuncts(e)) == 14
    again = Cn.parse_constraint(
        " /\\ ".join(Cn.pretty_constraint(c) for c in Cn.conjuncts(e)), P2)
    assert again == e


def test_constraint_parser_distributes_owner():
    e = Cn.parse_constraint("(m[a] + r[b])@2 == s[x]@1", P2)
    eq = Cn.conjuncts(e)[0]
    assert Cn.term_vars(eq.left) == {Var(A.MESG, "a", 2), Var(A.FLIP, "b", 2)}


def test_constraint_parser_rejects_ownerless():
    with pytest.raises(A.ParseError):
        Cn.parse_constraint("m[a] == s[x]@1", P2)


def test_negated_constraint():
    x = sx("x")
    e = Cn.parse_constraint("~(s[x]@1 == 0)", P3)
    assert Cn.eval_constraint({x: 1}, e, 3)
    assert not Cn.eval_constraint({x: 0}, e, 3)
