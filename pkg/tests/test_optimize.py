import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import value_oracle

from monoconvex.errors import NegativeMultiplier, PreconditionFailed
from monoconvex.functions import FunctionTable
from monoconvex.instances import BoxWindow, DyadicRationals, DyadicWindow, LatticeZd
from monoconvex.io import parse_instance, parse_table
from monoconvex.optimize import (
    ConstrainedProblem,
    dual_bound,
    find_multiplier,
    lagrangian,
    subdiff_of_max_check,
    value_function,
    value_function_laws,
)
from monoconvex.scalar import PINF, ExtendedScalar

Z = LatticeZd(1)
D = DyadicRationals(1)
FIX = Path(__file__).parent / "fixtures"


def zt(rule, r=10, name="f"):
    return FunctionTable(Z, BoxWindow.cube(1, r), rule=lambda x: rule(x[0]), name=name)


def dt(rule, name="f"):
    return FunctionTable(D, DyadicWindow(1, 2, 2), rule=lambda x: rule(x[0]), name=name)


def E(v):
    return ExtendedScalar(Fraction(v))


def ceiling_problem():
    obj = json.loads((FIX / "ceiling.json").read_text())
    S = parse_instance(obj["instance"])
    P = ConstrainedProblem(parse_table(S, obj["objective"]), [parse_table(S, obj["constraints"][0], "g")])
    return P, obj


def test_value_function_linear():
    P = ConstrainedProblem(zt(lambda x: -x), [zt(lambda x: 2 * x, name="g")])
    v = value_function(P, [5, 4, 0, -1])
    assert v(5) == E(-2) and v(4) == E(-2)
    assert v(0) == E(0) and v(-1) == E(1)
    assert v.argmin[(Fraction(5),)] == (2,)
    assert v.window_relative


def test_value_function_infeasible_is_plus_infinity():
    P = ConstrainedProblem(zt(lambda x: x), [zt(lambda x: x, name="g")])
    v = value_function(P, [-100])
    assert v(-100) == PINF
    assert v.feasible[(Fraction(-100),)] is False


def test_rhs_length_checked():
    P = ConstrainedProblem(zt(lambda x: x), [zt(lambda x: x, name="g")])
    with pytest.raises(ValueError):
        value_function(P, [(1, 2)])


def test_mismatched_windows_rejected():
    with pytest.raises(PreconditionFailed):
        ConstrainedProblem(zt(lambda x: x), [zt(lambda x: x, r=3, name="g")])


def test_subadditive_law_dyadic():
    P = ConstrainedProblem(dt(abs), [dt(lambda x: -x, "g")])
    grid = [Fraction(k, 2) for k in range(-4, 5)]
    laws = value_function_laws(P, grid)
    assert laws["subadditive"].holds is True


def test_subadditive_law_not_asserted_without_hypotheses():
    P = ConstrainedProblem(dt(lambda x: -abs(x)), [dt(lambda x: x, "g")])
    laws = value_function_laws(P, [0, 1])
    assert laws["subadditive"].holds is None
    assert "not subadditive" in laws["subadditive"].note


def test_zero_tables_satisfy_both_laws():
    P = ConstrainedProblem(dt(lambda x: 0), [dt(lambda x: 0, "g")])
    grid = [Fraction(k, 4) for k in range(0, 5)]
    laws = value_function_laws(P, grid, p=2)
    assert laws["subadditive"].holds is True
    assert laws["homogeneous"].holds is True
    assert laws["homogeneous_hypotheses"] is True


def test_ceiling_homogeneity_fails_outside_hypotheses():
    P, obj = ceiling_problem()
    laws = value_function_laws(P, obj["grid"], p=obj["p"])
    hom = laws["homogeneous"]
    assert laws["homogeneous_hypotheses"] is False
    assert hom.holds is False
    assert hom.certificate["v(pb)"] != hom.certificate["p*v(b)"]
    assert "hypotheses fail" in hom.note
    v = value_function(P, range(-6, 7))
    for b in range(-6, 7):
        assert v(b) == E(-(b // 2))


def test_ceiling_lagrangian_gap():
    P, obj = ceiling_problem()
    rep = find_multiplier(P, obj["b"], obj["lambda_grid"])
    assert rep.primal == E(0)
    assert rep.bound == E(Fraction(-1, 2))
    assert rep.multiplier == (Fraction(1, 2),)
    assert rep.gap == E(Fraction(1, 2)) and not rep.exact


def test_lagrangian_square_zero_gap():
    P = ConstrainedProblem(zt(lambda x: x * x, r=5), [zt(lambda x: 1 - x, r=5, name="g")])
    assert value_function(P, [0])(0) == E(1)
    assert dual_bound(P, 2, 0) == E(1)
    rep = find_multiplier(P, 0, [0, 1, 2, 3])
    assert rep.multiplier in [(Fraction(1),), (Fraction(2),)]
    assert rep.bound == E(1)
    assert rep.gap == E(0) and rep.exact
    # weak duality at lambda = 0
    assert dual_bound(P, 0, 0) <= rep.primal


def test_negative_multiplier_rejected():
    P = ConstrainedProblem(zt(lambda x: x), [zt(lambda x: x, name="g")])
    with pytest.raises(NegativeMultiplier):
        lagrangian(P, (0,), -1, 0)


def test_lagrangian_value():
    P = ConstrainedProblem(zt(lambda x: x * x), [zt(lambda x: 1 - x, name="g")])
    assert lagrangian(P, (3,), 2, 0) == E(9 + 2 * (1 - 3))


def _dyadic_linear(a, name):
    return FunctionTable(D, DyadicWindow(1, 1, 4), rule=lambda x: a * x[0], name=name)


def _probes():
    return [(Fraction(s, 2 ** k),) for s in (1, -1) for k in range(5)]


def test_subdiff_of_max_kink():
    fs = [_dyadic_linear(1, "f1"), _dyadic_linear(-1, "f2")]
    r = subdiff_of_max_check(fs, (Fraction(0),), _probes())
    assert r["holds"] and r["active"] == [0, 1]
    assert sorted(r["max_vertices"]) == [(Fraction(-1),), (Fraction(1),)]


def test_subdiff_of_max_single_active():
    fs = [_dyadic_linear(1, "f1"), _dyadic_linear(2, "f2")]
    r = subdiff_of_max_check(fs, (Fraction(1, 2),), _probes())
    assert r["active"] == [1]
    assert r["holds"]
    assert r["max_vertices"] == [(Fraction(2),)]


def test_subdiff_of_max_needs_semidivisible():
    fs = [zt(lambda x: x), zt(lambda x: -x)]
    with pytest.raises(PreconditionFailed):
        subdiff_of_max_check(fs, (0,), [(1,), (-1,)])


small = st.lists(st.integers(-5, 5), min_size=9, max_size=9)


@given(small, small, st.integers(-6, 6))
def test_value_function_matches_oracle(fv, gv, b):
    f = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: fv[x[0] + 4])
    g = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: gv[x[0] + 4], name="g")
    v = value_function(ConstrainedProblem(f, [g]), [b])
    want = value_oracle({x: fv[x + 4] for x in range(-4, 5)}, {x: gv[x + 4] for x in range(-4, 5)}, b)
    assert v(b) == (PINF if want is None else E(want))


@given(small, small, st.integers(-6, 6), st.integers(0, 3))
def test_weak_duality_property(fv, gv, b, lam):
    f = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: fv[x[0] + 4])
    g = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: gv[x[0] + 4], name="g")
    P = ConstrainedProblem(f, [g])
    assert dual_bound(P, lam, b) <= value_function(P, [b])(b)


@given(small, small)
def test_value_function_nonincreasing(fv, gv):
    f = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: fv[x[0] + 4])
    g = FunctionTable(Z, BoxWindow.cube(1, 4), rule=lambda x: gv[x[0] + 4], name="g")
    v = value_function(ConstrainedProblem(f, [g]), range(-6, 7))
    for b in range(-6, 6):
        assert v(b + 1) <= v(b)
