import pytest
import sympy as sp

from relkvn import operators as op
from relkvn.errors import OrderCapExceeded, RepresentationMismatch
from relkvn.operators import (
    IDENTITY_MONOMIAL,
    DerivationMonomial,
    adjoint,
    commutator,
    compose,
    identity,
    is_hermitian,
    lam_p,
    lam_v,
    lam_x,
    multiplicative,
    op_equal,
    parse_operator,
    position,
    random_first_order,
    symmetrize,
    velocity,
)
from relkvn.scalars import symbol


def rotation_z():
    # X x lam_r + V x lam_v, z component
    return (
        compose(position(1), lam_x(2))
        - compose(position(2), lam_x(1))
        + compose(velocity(1), lam_v(2))
        - compose(velocity(2), lam_v(1))
    )


def free_liouvillian():
    out = op.zero()
    for i in (1, 2, 3):
        out = out + compose(velocity(i), lam_x(i))
    return out


def test_canonical_commutator_gives_identity():
    c = commutator(position(1), lam_x(1))
    assert c.terms == identity().scale(sp.I).terms


def test_compose_with_identity():
    a = compose(velocity(2), lam_v(2))
    assert (compose(identity(), a) - a).is_zero
    assert (compose(a, identity()) - a).is_zero


def test_leibniz_action_on_x_squared():
    f = multiplicative(symbol("x1") ** 2)
    out = compose(lam_x(1), f)
    # f * lam_x1 plus the derivative term -2i x1
    assert out.coefficient(IDENTITY_MONOMIAL).sym == -2 * sp.I * symbol("x1")
    dx1 = DerivationMonomial((1, 0, 0), (0, 0, 0))
    assert out.coefficient(dx1).sym == -sp.I * symbol("x1") ** 2


def test_rotation_acts_on_position_as_vector():
    jz = rotation_z()
    assert op_equal(
        commutator(jz, position(1)), position(2).scale(sp.I), 30, 1e-12, 4
    ).equal


def test_position_velocity_commute():
    assert commutator(position(1), velocity(2)).is_zero
    assert commutator(position(1), velocity(1)).is_zero


def test_symmetrize_velocity_with_conjugate_translation():
    out = symmetrize(velocity(1), lam_v(1))
    expected = compose(velocity(1), lam_v(1)) - identity().scale(sp.I / 2)
    assert (out - expected).is_zero


def test_symmetrize_commuting_factors_is_plain_product():
    out = symmetrize(position(1), position(2))
    assert (out - compose(position(1), position(2))).is_zero


def test_symmetrize_is_symmetric():
    for seed in range(6):
        a = random_first_order("velocity", seed)
        b = random_first_order("velocity", seed + 100)
        assert (symmetrize(a, b) - symmetrize(b, a)).is_zero


def test_adjoint_of_multiplicative_real_operator():
    assert (adjoint(position(1)) - position(1)).is_zero


def test_adjoint_of_translation_generator():
    assert (adjoint(lam_x(1)) - lam_x(1)).is_zero


def test_adjoint_by_integration_by_parts():
    a = compose(velocity(1), lam_v(1))
    expected = a - identity().scale(sp.I)
    assert (adjoint(a) - expected).is_zero


def test_adjoint_is_involution_on_random_operators():
    for seed in range(50):
        a = random_first_order("velocity", seed)
        assert (adjoint(adjoint(a)) - a).is_zero


def test_is_hermitian_examples():
    assert is_hermitian(free_liouvillian(), 25, 1e-9, 3)
    assert is_hermitian(lam_v(1), 10, 1e-9, 3)
    assert not is_hermitian(position(1).scale(sp.I), 10, 1e-9, 3)


def test_symmetrize_of_hermitian_pair_is_hermitian():
    for seed in range(8):
        raw_a = random_first_order("velocity", seed)
        raw_b = random_first_order("velocity", seed + 31)
        a = (raw_a + adjoint(raw_a)).scale(sp.Rational(1, 2))
        b = (raw_b + adjoint(raw_b)).scale(sp.Rational(1, 2))
        assert is_hermitian(symmetrize(a, b), 15, 1e-9, seed)


def test_op_equal_reflexive_and_zero_brackets():
    a = random_first_order("velocity", 5)
    assert op_equal(a, a, 10, 1e-15, 1).equal
    assert op_equal(commutator(lam_x(1), lam_x(2)), op.zero(), 10, 1e-12, 1).equal


def test_op_equal_reports_offending_monomial():
    lhs = free_liouvillian()
    rhs = free_liouvillian() + identity()
    report = op_equal(lhs, rhs, 10, 1e-9, 1)
    assert not report.equal
    assert report.worst_monomial == "1"
    assert report.max_residual == pytest.approx(1.0)


def test_jacobi_identity_for_seeded_triples():
    for seed in range(50):
        a = random_first_order("velocity", 3 * seed)
        b = random_first_order("velocity", 3 * seed + 1)
        c = random_first_order("velocity", 3 * seed + 2)
        total = (
            commutator(commutator(a, b), c)
            + commutator(commutator(b, c), a)
            + commutator(commutator(c, a), b)
        )
        assert op_equal(total, op.zero(), 10, 1e-9, seed).equal


def test_compose_associates():
    for seed in range(20):
        a = random_first_order("velocity", seed + 500)
        b = random_first_order("velocity", seed + 600)
        c = random_first_order("velocity", seed + 700)
        lhs = compose(compose(a, b), c)
        rhs = compose(a, compose(b, c))
        assert op_equal(lhs, rhs, 10, 1e-9, seed).equal


def test_commutator_of_first_order_operators_is_first_order():
    for seed in range(25):
        a = random_first_order("velocity", seed + 900)
        b = random_first_order("velocity", seed + 950)
        assert commutator(a, b).max_order <= 1


def test_order_cap():
    d = lam_x(1)
    out = d
    for _ in range(5):
        out = compose(out, d)
    assert out.max_order == 6
    with pytest.raises(OrderCapExceeded):
        compose(out, d)
    # a larger explicit cap lifts the limit
    assert compose(out, d, cap=8).max_order == 7


def test_representation_mixing_rejected():
    with pytest.raises(RepresentationMismatch):
        compose(velocity(1), op.momentum(1))
    with pytest.raises(RepresentationMismatch):
        op.OperatorExpr("velocity", {IDENTITY_MONOMIAL: symbol("p1")})


def test_monomial_validation():
    with pytest.raises(ValueError):
        DerivationMonomial((-1, 0, 0), (0, 0, 0))


def test_subs_pins_time_parameter():
    k = compose(multiplicative(symbol("t")), lam_x(1))
    assert k.subs({"t": 0}).is_zero


def test_parse_operator_commutator_and_symmetrization():
    parsed = parse_operator("comm(X1, Lx1) + S(V1, Lv1)")
    expected = identity().scale(sp.I) + symmetrize(velocity(1), lam_v(1))
    assert (parsed - expected).is_zero


def test_parse_operator_momentum_atoms():
    parsed = parse_operator("P1 * Lp1")
    expected = compose(op.momentum(1), lam_p(1))
    assert (parsed - expected).is_zero


def test_parse_operator_scalar_coefficients_and_powers():
    parsed = parse_operator("2 * i * X1 * V2 + Lv1^2")
    expected = compose(position(1), velocity(2)).scale(2 * sp.I) + compose(
        lam_v(1), lam_v(1)
    )
    assert (parsed - expected).is_zero


def test_parse_operator_rejects_mixed_representation():
    with pytest.raises(RepresentationMismatch):
        parse_operator("V1 * Lp1")


def test_operator_text_round_trip_readable():
    text = symmetrize(velocity(1), lam_v(1)).text()
    assert "dv1" in text and "(" in text
