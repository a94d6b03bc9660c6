import pytest
import sympy as sp

from relkvn import operators as op
from relkvn import series as se
from relkvn.errors import OrderCapExceeded
from relkvn.operators import commutator, lam_p, lam_v, lam_x, multiplicative, op_equal
from relkvn.generators import ForceFieldSym
from relkvn.scalars import ScalarExpr, symbol


def hard(results):
    return [r for r in results if not r.informational]


def informational(results):
    return [r for r in results if r.informational]


def test_adjoint_series_of_commuting_pair_is_constant():
    X = op.position(1)
    Y = op.position(2)
    series = se.adjoint_series(X, Y, 3)
    assert (series.terms[0] - Y).is_zero
    assert all(t.is_zero for t in series.terms[1:])
    assert (series.partial_sum() - Y).is_zero


def test_adjoint_series_respects_order_cap():
    X = op.compose(lam_x(1), lam_x(1))  # second order
    Y = op.multiplicative(symbol("x1") ** 8)
    with pytest.raises(OrderCapExceeded):
        se.adjoint_series(op.compose(X, X, cap=4), Y, 4, cap=4)


def test_c1_exponent_is_anti_hermitian():
    X = se.c1_exponent()
    assert op_equal(op.adjoint(X), -X, 20, 1e-12, 1).equal


def test_c1_momentum_low_order_coefficients():
    results = se.verify_c1_on_velocity(1.0, order=3, trials=25, seed=21)
    assert not [r for r in hard(results) if not r.passed]
    by_id = {r.check_id: r for r in results}
    assert "exact coefficient 1/2 == 1/2" in by_id["c1-momentum:V1:order1"].detail
    assert "exact coefficient 3/8 == 3/8" in by_id["c1-momentum:V1:order2"].detail
    assert "exact coefficient 5/16 == 5/16" in by_id["c1-momentum:V1:order3"].detail


def test_c1_momentum_zeroth_order_is_target():
    X = se.c1_exponent()
    series = se.adjoint_series(X, multiplicative(symbol("v2")), 1)
    assert (series.terms[0] - multiplicative(symbol("v2"))).is_zero


def test_c1_coefficient_product_formula():
    assert se.c1_coefficient(0) == 1
    assert se.c1_coefficient(1) == sp.Rational(1, 2)
    assert se.c1_coefficient(4) == sp.Rational(35, 128)
    assert se.c1_coefficient(6) == sp.Rational(231, 1024)


def test_c1_lambda_degree_collection(free_velocity_set):
    results = se.verify_c1_on_lambda(1.0, order=3, trials=25, seed=22)
    assert not [r for r in hard(results) if not r.passed]
    # degree-0 collected term is lam_v_i/m0 itself: zero residual
    d0 = [r for r in results if r.check_id.endswith("degree0")]
    assert d0 and all(r.residual <= 1e-12 for r in d0)


def test_c1_lambda_degree_two_explicit_form():
    # collected degree-2 part of the series for i=1 equals the expansion of
    # the symmetrized gamma^-1 map at the same degree
    X = se.c1_exponent()
    series = se.adjoint_series(X, lam_v(1), 1)
    parts = se.collect_by_degree(series.partial_sum())
    v = [symbol(f"v{i}") for i in (1, 2, 3)]
    v2 = sum(w**2 for w in v)
    picked = {m: c for (m, d), c in parts.items() if d == 2}
    got = op.OperatorExpr("velocity", picked)
    expected = op.zero()
    # derivation content: -(V_i V_k lam_v_k) - (1/2) V^2 lam_v_i
    for k in (1, 2, 3):
        expected = expected + op.compose(
            multiplicative(-v[0] * v[k - 1]), lam_v(k)
        )
    expected = expected + op.compose(multiplicative(-v2 / 2), lam_v(1))
    diff = got - expected
    derivation_only = op.OperatorExpr(
        "velocity", {m: c for m, c in diff.terms.items() if m.order > 0}
    )
    assert op_equal(derivation_only, op.zero(), 25, 1e-9, 23).equal


def test_c2_magnetic_vector_potential(magnetic_field):
    field = magnetic_field.subs_params({"B0": 2.0})
    results = se.verify_c2(field, trials=25, seed=24)
    assert not [r for r in hard(results) if not r.passed]
    # lam_r2 picks up +B0 lam_p1
    X = se.c2_exponent(field)
    shift = se.adjoint_series(X, lam_x(2, op.MOMENTUM), 1).terms[1]
    expected = op.compose(multiplicative(2.0, op.MOMENTUM), lam_p(1))
    assert op_equal(shift, expected, 20, 1e-9, 25).equal


def test_c2_constant_vector_potential_leaves_lam_r_alone():
    field = ForceFieldSym.from_expressions(0, (ScalarExpr(0.7), 0, 0))
    X = se.c2_exponent(field)
    for i in (1, 2, 3):
        series = se.adjoint_series(X, lam_x(i, op.MOMENTUM), 2)
        assert series.terms[1].is_zero and series.terms[2].is_zero


def test_c2_kinetic_momentum_shift_terminates(magnetic_field):
    field = magnetic_field.subs_params({"B0": 1.5})
    X = se.c2_exponent(field)
    ps = [symbol(f"p{i}") for i in (1, 2, 3)]
    A = [a.sym for a in field.vector_potential]
    for i in (1, 2, 3):
        series = se.adjoint_series(
            X, multiplicative(ps[i - 1] - A[i - 1], op.MOMENTUM), 2
        )
        assert op_equal(
            series.terms[1], multiplicative(A[i - 1], op.MOMENTUM), 20, 1e-9, i
        ).equal
        assert series.terms[2].is_zero
        assert op_equal(
            series.partial_sum(), op.momentum(i), 20, 1e-9, i
        ).equal


@pytest.mark.parametrize("kind", ["velocity", "energy-momentum"])
def test_boost_closed_forms_order_four(kind):
    results = se.verify_boost_closed_forms(kind, rapidity=0.4, order=4, trials=25, seed=26)
    assert not [r for r in hard(results) if not r.passed]


def test_boost_position_newton_wigner():
    results = se.verify_boost_closed_forms("position", rapidity=0.4, order=4, trials=25, seed=27)
    assert not [r for r in hard(results) if not r.passed]
    # orders beyond v^2 are informational; the closed form is exact here, so
    # they come out clean as well
    extra = [
        r for r in informational(results)
        if "order3" in r.check_id or "order4" in r.check_id
    ]
    assert extra and all(r.residual < 1e-8 for r in extra)


def test_boost_partial_sums_converge_monotonically():
    for seed in (1, 2, 3):
        results = se.verify_boost_closed_forms(
            "velocity", rapidity=0.5, order=4, trials=20, seed=seed
        )
        conv = [r for r in results if "partial-sum-convergence" in r.check_id]
        assert conv and all(r.detail.endswith("monotone") for r in conv)


def test_boost_rejects_superluminal_rapidity():
    with pytest.raises(ValueError):
        se.verify_boost_closed_forms("velocity", rapidity=2.0)


def test_canonical_map_table(magnetic_field):
    results = se.verify_canonical_map(
        1.0, magnetic_field.subs_params({"B0": 1.2}), order=4, trials=15, seed=28
    )
    assert not [r for r in hard(results) if not r.passed]
    stage2 = [r for r in results if "C2" in r.check_id]
    assert stage2 and all(r.passed for r in stage2)
