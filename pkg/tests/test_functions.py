from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import minorant_oracle

from monoconvex.algebra import ExplicitWindow, NCombination
from monoconvex.errors import OffWindow, PreconditionFailed, RelationDoesNotHold
from monoconvex.functions import (
    UNDEFINED,
    FunctionTable,
    brute_force_minorant,
    check_convex,
    check_generalized_n_linear,
    check_homogeneous,
    check_n_sublinear,
    check_p_homogeneous_implies_convex,
    check_subadditive,
    classify_generalized_affine,
    core_probe,
    homogenize,
    homogenized_minorant_po,
    local_boundedness_bound,
    monotone_composition_check,
    pointwise_max,
    replay_certificate,
    replay_core,
    subadditive_minorant_p,
    three_slope_check,
    wedge_minorant,
)
from monoconvex.instances import (
    ArctanSemigroup,
    BoxWindow,
    DyadicRationals,
    DyadicWindow,
    FiniteCyclic,
    LatticeZd,
    SetAlgebraGroup,
)
from monoconvex.scalar import NINF, PINF, ZERO, ExtendedScalar

Z = LatticeZd(1)
D = DyadicRationals(1)


def ztable(rule, r=5, name="f"):
    return FunctionTable(Z, BoxWindow.cube(1, r), rule=lambda x: rule(x[0]), name=name)


def dtable(rule, radius=2, e=2, name="f"):
    return FunctionTable(D, DyadicWindow(1, radius, e), rule=lambda x: rule(x[0]), name=name)


# ---------------------------------------------------------------- tables


def test_outside_policies():
    f = ztable(lambda x: x, r=2)
    assert f((7,)) == PINF
    g = FunctionTable(Z, BoxWindow.cube(1, 2), rule=lambda x: 0, outside=UNDEFINED)
    with pytest.raises(OffWindow):
        g((7,))
    with pytest.raises(PreconditionFailed):
        FunctionTable(Z, BoxWindow.cube(1, 1), {(0,): 1})


# ---------------------------------------------------------------- convexity


def test_square_is_convex_and_negative_square_is_not():
    assert check_convex(ztable(lambda x: x * x), 2, 2).holds
    neg = ztable(lambda x: -x * x)
    v = check_convex(neg, 2, 2)
    assert not v.holds and v.tag == "Fails" and replay_certificate(neg, v)
    # the textbook violation is also real: 2 f(0) = 0 > f(-1) + f(1) = -2
    assert 2 * neg((0,)) > neg((-1,)) + neg((1,))


def test_square_root_on_square_dyadics_fails_convexity():
    W = ExplicitWindow((Fraction(k * k, 4),) for k in range(8))
    f = FunctionTable(D, W, rule=lambda x: Fraction(int(round((4 * x[0]) ** 0.5)), 2))
    assert all(v.value ** 2 == x[0] for x, v in f.items())
    v = check_convex(f, 2, 1)
    assert not v.holds and replay_certificate(f, v)


def test_subadditivity_examples():
    W = ExplicitWindow((k * k,) for k in range(6))
    root = FunctionTable(Z, W, rule=lambda x: int(round(x[0] ** 0.5)))
    assert check_subadditive(root).holds
    sq = FunctionTable(Z, BoxWindow((0,), (10,)), rule=lambda x: x[0] ** 2)
    v = check_subadditive(sq)
    assert not v.holds and v.certificate["pair"] == ((1,), (1,))
    assert check_subadditive(ztable(lambda x: 3 * x)).holds


def test_sublinearity_examples():
    assert check_n_sublinear(ztable(lambda x: 3 * x), 4).holds
    assert check_n_sublinear(ztable(abs), 4).holds
    v = check_n_sublinear(ztable(lambda x: x + 1), 4)
    assert not v.holds
    shifted = ztable(lambda x: x + 1)
    h = check_homogeneous(shifted, [2])
    assert h.certificate["m"] == 2 and replay_certificate(shifted, h)
    assert shifted((2,)) == 3 and 2 * shifted((1,)) == 4


def test_generalized_linear():
    assert check_generalized_n_linear(ztable(lambda x: -2 * x), 3).holds
    v = check_generalized_n_linear(ztable(abs), 3)
    assert not v.holds and v.certificate.get("negated")
    assert replay_certificate(ztable(abs), v)


def test_p_homogeneous_implies_convex():
    r = check_p_homogeneous_implies_convex(dtable(abs), 2, 2, 2)
    assert r.implication == "holds"
    S = SetAlgebraGroup(3)
    card = FunctionTable(S, S.default_window(), rule=lambda x: bin(x).count("1"))
    r = check_p_homogeneous_implies_convex(card, 3, 2, 2)
    assert r.parts["subadditive"].holds and not r.parts["p_homogeneous"].holds
    assert r.implication == "vacuous"
    zero = dtable(lambda x: 0)
    assert check_p_homogeneous_implies_convex(zero, 2, 2, 2).implication == "holds"
    with pytest.raises(PreconditionFailed):
        check_p_homogeneous_implies_convex(ztable(abs), 2, 2, 2)


def test_pointwise_max():
    up, down = ztable(lambda x: x), ztable(lambda x: -x)
    assert pointwise_max([up, down]) == ztable(abs)
    f = ztable(lambda x: x * x)
    assert pointwise_max([f, f]) == f
    g = ztable(lambda x: 2 * abs(x) - 3)
    assert check_convex(pointwise_max([f, g]), 2, 3).holds


@settings(max_examples=25)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-4, 4)), min_size=1, max_size=3))
def test_max_of_affine_pieces_is_convex(pieces):
    f = ztable(lambda x: max(a * x + c for a, c in pieces), r=4)
    assert check_convex(f, 2, 3).holds


# ---------------------------------------------------------------- minorants


def test_additive_table_is_its_own_minorant():
    f = ztable(lambda x: 3 * x, r=3)
    assert subadditive_minorant_p(f).values == f.values


def test_cyclic_minorant_example():
    S = FiniteCyclic(3)
    f = FunctionTable(S, S.default_window(), {0: 5, 1: 1, 2: 1})
    p = subadditive_minorant_p(f)
    assert [p.values[x] for x in (0, 1, 2)] == [2, 1, 1]
    assert brute_force_minorant(f) == p.values


def test_negative_cycle_gives_minus_infinity():
    vals = {(x,): PINF for x in range(-3, 4)}
    vals[(1,)], vals[(-1,)] = ExtendedScalar(1), ExtendedScalar(-2)
    f = FunctionTable(Z, BoxWindow.cube(1, 3), vals)
    p = subadditive_minorant_p(f)
    assert p((0,)) == NINF
    assert any(v == NINF for _, v in p.items())


@settings(max_examples=20)
@given(st.lists(st.integers(1, 6), min_size=5, max_size=5))
def test_minorant_equals_decomposition_oracle_on_z(vals):
    W = BoxWindow.cube(1, 2)
    table = dict(zip(Z.enumerate(W), map(Fraction, vals)))
    p = subadditive_minorant_p(FunctionTable(Z, W, table))
    oracle = minorant_oracle(Z, W, table)
    assert all(p.values[x] == oracle[x] for x in p.elements)
    assert check_subadditive(p).holds
    assert all(p.values[x] <= table[x] for x in p.elements)


@settings(max_examples=15)
@given(st.integers(2, 7), st.data())
def test_minorant_is_maximal_among_subadditive_minorants(n, data):
    S = FiniteCyclic(n)
    vals = data.draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    f = FunctionTable(S, S.default_window(), dict(enumerate(vals)))
    p = subadditive_minorant_p(f)
    # every subadditive g <= f lies below p; try g = p of a pointwise smaller table
    low = f.map(lambda v: v - 1 if v.finite and v.value > 0 else v)
    q = subadditive_minorant_p(low)
    assert all(q.values[x] <= p.values[x] for x in f.elements)


def test_arctan_minorant_tagged():
    A = ArctanSemigroup()
    f = FunctionTable(A, A.default_window(), rule=lambda x: 2)
    p = subadditive_minorant_p(f)
    assert p.tags["window_relative"] and not p.tags["truncated"]
    assert p.values == brute_force_minorant(f)


def test_homogenization():
    f = ztable(lambda x: 3 * x, r=3)
    po = homogenized_minorant_po(f, 3)
    assert po.values == f.values and po.tags["truncated"]
    S = FiniteCyclic(4)
    one = FunctionTable(S, S.default_window(), rule=lambda x: 1)
    assert homogenize(one, 4)(1) == ZERO
    dip = FunctionTable(S, S.default_window(), {0: 1, 1: 1, 2: -4, 3: 1})
    assert homogenize(dip, 4)(1) <= -2
    assert homogenize(dip, 4)(1) == -2


def test_wedge_minorant():
    f, g = ztable(lambda x: 2 * abs(x)), ztable(lambda x: 3 * abs(x))
    w = wedge_minorant(f, g, 3)
    assert all(w.values[x] <= f.values[x] for x in f.elements)
    same = wedge_minorant(f, f, 3)
    assert all(same.values[x] <= f.values[x] for x in f.elements)
    ray = ztable(lambda x: x if x >= 0 else PINF)
    fin = ztable(lambda x: abs(x) + 1)
    w2 = wedge_minorant(ray, fin, 2)
    assert all(w2.values[x] <= fin.values[x] for x in fin.elements)


# ---------------------------------------------------------------- lemmas


def test_local_boundedness():
    f = ztable(abs, r=10)
    B = [(b,) for b in range(-8, 9)]
    r = local_boundedness_bound(f, (0,), B, 8, 4)
    assert r.holds and r.details["bound"] == 2 and r.details["checked"] == 5
    assert local_boundedness_bound(ztable(lambda x: 7), (0,), B, 0, 3).holds
    with pytest.raises(PreconditionFailed):
        local_boundedness_bound(ztable(lambda x: x), (0,), [(0,), (1,), (2,)], 2, 1)


def test_three_slopes():
    f = ztable(lambda x: x * x)
    r = three_slope_check(f, (1,), (0,), (2,), 1, 1)
    d = r.details
    assert r.holds and (d["left"], d["middle"], d["right"]) == (1, 2, 3)
    assert d["right_from_x1"] == 4 and d["holds_with_right_from_x1"]
    aff = three_slope_check(ztable(lambda x: 2 * x + 1), (1,), (0,), (2,), 1, 1).details
    assert aff["left"] == aff["middle"] == aff["right"] == 2
    z = three_slope_check(f, (0,), (0,), (0,), 1, 1).details
    assert z["left"] == z["middle"] == z["right"] == 0
    with pytest.raises(RelationDoesNotHold):
        three_slope_check(f, (1,), (0,), (3,), 1, 1)


@settings(max_examples=30)
@given(st.integers(-3, 3), st.integers(1, 3), st.integers(1, 3), st.integers(-2, 2))
def test_three_slopes_hold_for_convex_quadratics(x1, m1, m2, shift):
    x2 = x1 + (m1 + m2) * 1
    x = x1 + m2  # (m1+m2) x = m1 x1 + m2 x2
    f = FunctionTable(Z, BoxWindow.cube(1, 15), rule=lambda t: (t[0] - shift) ** 2)
    assert three_slope_check(f, (x,), (x1,), (x2,), m1, m2).holds


def test_monotone_composition():
    outer = FunctionTable(Z, BoxWindow.cube(1, 20), rule=lambda t: 2 * t[0], name="2t")
    inner = ztable(lambda x: x * x, r=3)
    r = monotone_composition_check(outer, inner, 2, 2)
    assert r.holds and r.details["composed"] == ztable(lambda x: 2 * x * x, r=3)
    ident = FunctionTable(Z, BoxWindow.cube(1, 20), rule=lambda t: t[0])
    assert monotone_composition_check(ident, inner, 2, 2).holds == check_convex(inner, 2, 2).holds
    with pytest.raises(PreconditionFailed):
        monotone_composition_check(ident, ztable(lambda x: -x * x, r=3), 2, 2)
    dec = FunctionTable(Z, BoxWindow.cube(1, 20), rule=lambda t: -t[0])
    with pytest.raises(PreconditionFailed):
        monotone_composition_check(dec, inner, 2, 2)


def test_generalized_affine_classification():
    assert classify_generalized_affine(ztable(lambda x: 2 * x - 1), 2, 2) == "finite"
    assert classify_generalized_affine(ztable(lambda x: PINF), 2, 2) == "plus_infinity"
    assert classify_generalized_affine(ztable(lambda x: NINF), 2, 2) == "minus_infinity"
    assert classify_generalized_affine(ztable(abs), 2, 2) == "not_affine"


def test_core_probe():
    f = dtable(lambda x: abs(x), radius=1, e=3)
    q = core_probe(f, (Fraction(0),), [(Fraction(1),), (Fraction(-1),), (Fraction(5),)], [1, 2, 4, 8])
    assert q.in_core and replay_core(f, q)
    assert q.results[(Fraction(5),)][0] == 8
    ray = dtable(lambda x: x if x >= 0 else PINF, radius=1, e=3)
    q2 = core_probe(ray, (Fraction(0),), [(Fraction(-1),)], [1, 2, 4])
    assert not q2.in_core
