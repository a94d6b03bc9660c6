import math

import pytest
import sympy as sp

from relkvn.errors import DomainError, ProbeExhausted, UnassignedVariable
from relkvn.scalars import (
    SamplePoint,
    ScalarExpr,
    diff,
    equal_numeric,
    evaluate,
    gamma_factor,
    parse_scalar,
    sample_point,
    symbol,
)

GAMMA_TEXT = "(1 - (v1^2 + v2^2 + v3^2))^(-1/2)"


def test_gamma_at_rest_is_one():
    gamma = parse_scalar(GAMMA_TEXT)
    assert evaluate(gamma, {"v1": 0.0, "v2": 0.0, "v3": 0.0}) == 1.0


def test_gamma_at_0p6():
    gamma = parse_scalar(GAMMA_TEXT)
    val = evaluate(gamma, {"v1": 0.0, "v2": 0.0, "v3": 0.6})
    assert val == pytest.approx(1.25, abs=1e-12)


def test_sqrt_boundary_case():
    expr = parse_scalar("sqrt(1 - v3^2)")
    assert evaluate(expr, {"v3": 1.0}) == 0.0


def test_whitespace_insensitive_and_imaginary_unit():
    a = parse_scalar("2*i*x1+ 3")
    b = parse_scalar(" 2 * i * x1 + 3 ")
    assert a.sym == b.sym
    assert evaluate(a, {"x1": 1.5}) == 3 + 3j


def test_named_parameters_parse_as_symbols():
    expr = parse_scalar("m0 * v1 / sqrt(1 - v1^2)")
    assert expr.free_names() == {"m0", "v1"}


@pytest.mark.parametrize(
    "bad",
    ["", "x1 + __import__('os')", "sin(x1)", "x1 @ x2", "foo(x1)", "x1!"],
)
def test_parser_rejects_non_grammar(bad):
    with pytest.raises(ValueError):
        parse_scalar(bad)


def test_eval_missing_variable():
    with pytest.raises(UnassignedVariable):
        evaluate(parse_scalar("x1 + v2"), {"x1": 1.0})


def test_eval_division_by_zero():
    with pytest.raises(DomainError):
        evaluate(parse_scalar("1 / x1"), {"x1": 0.0})


def test_eval_sqrt_of_negative_real():
    with pytest.raises(DomainError):
        evaluate(parse_scalar("sqrt(1 - v1^2)"), {"v1": 2.0})


def test_gamma_undefined_for_superluminal_corner():
    gamma = gamma_factor()
    with pytest.raises(DomainError):
        evaluate(gamma, {"v1": 0.9, "v2": 0.9, "v3": 0.9})


def test_diff_polynomial_rule():
    assert diff(parse_scalar("v3^2"), "v3").sym == 2 * symbol("v3")


def test_diff_independent_variables():
    assert diff(parse_scalar("x1"), "v1").sym == 0


def test_diff_gamma_matches_finite_difference():
    gamma = parse_scalar(GAMMA_TEXT)
    dg = diff(gamma, "v3")
    point = {"v1": 0.0, "v2": 0.0, "v3": 0.6}
    exact = evaluate(dg, point).real
    h = 1e-6
    up = evaluate(gamma, {**point, "v3": 0.6 + h}).real
    dn = evaluate(gamma, {**point, "v3": 0.6 - h}).real
    assert exact == pytest.approx(1.171875, abs=1e-9)  # gamma^3 v at v=0.6
    assert exact == pytest.approx((up - dn) / (2 * h), abs=1e-6)


def test_diff_matches_central_differences_on_random_polynomials():
    # derivative closure probed at 50 seeded points
    import numpy as np

    rng = np.random.default_rng(1234)
    names = ["x1", "x2", "v1", "v2"]
    for trial in range(50):
        coeffs = rng.integers(-4, 5, size=5)
        x1, x2, v1, v2 = (symbol(n) for n in names)
        poly = ScalarExpr(
            coeffs[0] * x1**2 * v1
            + coeffs[1] * x2 * v2**2
            + coeffs[2] * x1 * x2
            + coeffs[3] * v1**3
            + coeffs[4]
        )
        var = names[int(rng.integers(0, len(names)))]
        point = {n: float(rng.uniform(-1, 1)) for n in names}
        exact = evaluate(poly.diff(var), point).real
        h = 1e-6
        up = evaluate(poly, {**point, var: point[var] + h}).real
        dn = evaluate(poly, {**point, var: point[var] - h}).real
        fd = (up - dn) / (2 * h)
        assert exact == pytest.approx(fd, abs=1e-6 * max(1.0, abs(exact)))


def test_equal_numeric_gamma_inverse_identity():
    gamma = gamma_factor()
    report = equal_numeric(gamma * (1 / gamma), 1, trials=100, tol=1e-9, seed=7)
    assert report.equal


def test_equal_numeric_detects_series_truncation():
    v3 = ScalarExpr(symbol("v3"))
    gamma_inv = (1 - v3**2) ** sp.Rational(1, 2)
    truncated = 1 - v3**2 / 2
    report = equal_numeric(gamma_inv, truncated, trials=100, tol=1e-9, seed=7)
    assert not report.equal
    # truncation error at v = 0.5 is ~9e-3, far above tol
    assert report.max_residual > 8e-3


def test_equal_numeric_zero_difference():
    x1, v2 = symbol("x1"), symbol("v2")
    report = equal_numeric(
        ScalarExpr(x1 * v2 - x1 * v2), 0, trials=10, tol=1e-12, seed=0
    )
    assert report.equal and report.max_residual == 0.0


def test_equal_numeric_symmetric_and_reflexive():
    a = parse_scalar("x1^2 + v1")
    b = parse_scalar("x1 * v1")
    r_ab = equal_numeric(a, b, trials=40, tol=1e-9, seed=3)
    r_ba = equal_numeric(b, a, trials=40, tol=1e-9, seed=3)
    assert r_ab.equal == r_ba.equal
    assert r_ab.max_residual == pytest.approx(r_ba.max_residual, rel=0, abs=0)
    assert equal_numeric(a, a, trials=10, tol=1e-15, seed=3).equal


def test_equal_numeric_reports_bit_identical_across_runs():
    a = parse_scalar("x1 * v3 + m0")
    b = parse_scalar("x1 * v3")
    r1 = equal_numeric(a, b, trials=25, tol=1e-9, seed=42)
    r2 = equal_numeric(a, b, trials=25, tol=1e-9, seed=42)
    assert r1 == r2


def test_equal_numeric_pins_override_sampling():
    expr = parse_scalar("t * x1")
    report = equal_numeric(expr, 0, trials=20, tol=1e-12, seed=1, pins={"t": 0.0})
    assert report.equal


def test_equal_numeric_validates_arguments():
    with pytest.raises(ValueError):
        equal_numeric(1, 1, trials=0)
    with pytest.raises(ValueError):
        equal_numeric(1, 1, tol=0.0)


def test_probe_exhausted_on_everywhere_singular_expression():
    expr = parse_scalar("sqrt(-1 - x1^2)")
    with pytest.raises(ProbeExhausted):
        equal_numeric(expr, 0, trials=3, tol=1e-9, seed=9)


def test_conjugate_flips_imaginary_unit():
    expr = parse_scalar("(2 + 3*i) * x1")
    conj = expr.conjugate()
    point = {"x1": 0.7}
    assert evaluate(conj, point) == evaluate(expr, point).conjugate()


def test_sample_point_respects_pins_and_velocity_bound():
    point = sample_point(["v1", "v2", "v3", "x1", "t"], seed=5, index=3, pins={"t": 1.7})
    assert point.values["t"] == 1.7
    assert point.within_domain()
    v2 = sum(point.values[f"v{i}"] ** 2 for i in (1, 2, 3))
    assert v2 < 1.0


def test_sample_point_is_counter_deterministic():
    a = sample_point(["x1", "v1"], seed=11, index=8)
    b = sample_point(["x1", "v1"], seed=11, index=8)
    assert a == b
    c = sample_point(["x1", "v1"], seed=11, index=9)
    assert a != c


def test_evaluate_accepts_sample_point():
    p = SamplePoint({"x1": 2.0})
    assert evaluate(parse_scalar("x1^2"), p) == 4.0
