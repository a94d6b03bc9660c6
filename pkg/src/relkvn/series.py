"""Truncated exponential-conjugation (BCH) engine and identity checks.

``e^X Y e^-X = sum_n [X,Y]^(n) / n!`` is evaluated term by term; analytic
identities are turned into finitely many per-order algebra checks by
extracting coefficients of the formal parameter (series order, or total
velocity degree where nested commutators mix orders).
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from . import operators as op
from .operators import (
    IDENTITY_MONOMIAL,
    MOMENTUM,
    VELOCITY,
    DerivationMonomial,
    OperatorExpr,
    adjoint,
    commutator,
    lam_p,
    lam_v,
    lam_x,
    momentum,
    multiplicative,
    position,
    symmetrize,
    velocity,
)
from .reports import CheckResult
from .scalars import ScalarExpr, symbol

_S = sp.Symbol("_rap", real=True)  # formal boost-rapidity parameter


@dataclass(frozen=True)
class AdjointSeries:
    """Terms of e^{sX} Y e^{-sX} = sum_n s^n * ad_X^n(Y)/n! through order N."""

    base: OperatorExpr
    target: OperatorExpr
    order: int
    terms: tuple[OperatorExpr, ...]

    def partial_sum(self, order: int | None = None) -> OperatorExpr:
        order = self.order if order is None else order
        out = op.zero(self.target.representation)
        for term in self.terms[: order + 1]:
            out = out + term
        return out

    def partial_sum_at(self, s_value: float, order: int | None = None) -> OperatorExpr:
        order = self.order if order is None else order
        out = op.zero(self.target.representation)
        for n, term in enumerate(self.terms[: order + 1]):
            out = out + term.scale(sp.Float(s_value) ** n)
        return out


def adjoint_series(
    X: OperatorExpr, Y: OperatorExpr, order: int, cap: int | None = None
) -> AdjointSeries:
    """Nested-commutator terms of the conjugation of Y by exp(X)."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    terms = [Y]
    nested = Y
    factorial = 1
    for n in range(1, order + 1):
        nested = commutator(X, nested, cap=cap)
        factorial *= n
        terms.append(nested.scale(sp.Rational(1, factorial)))
    return AdjointSeries(base=X, target=Y, order=order, terms=tuple(terms))


# -- canonical-transformation exponents ----------------------------------------


def c1_exponent() -> OperatorExpr:
    """(i/2)(V^2 V . lam_v)_S: generates the kinematic-momentum map."""
    v = [symbol(f"v{i}") for i in (1, 2, 3)]
    v2 = sum(w**2 for w in v)
    out = op.zero(VELOCITY)
    for k in (1, 2, 3):
        out = out + symmetrize(multiplicative(v2 * v[k - 1]), lam_v(k))
    return out.scale(sp.I / 2)


def c2_exponent(field) -> OperatorExpr:
    """i A . lam_p in the momentum representation: shifts by the vector
    potential."""
    out = op.zero(MOMENTUM)
    for k in (1, 2, 3):
        a = field.vector_potential[k - 1].sym
        if a != 0:
            out = out + op.compose(multiplicative(a, MOMENTUM), lam_p(k))
    return out.scale(sp.I)


# -- degree collection -----------------------------------------------------------


def _homogeneous_parts(expr: sp.Expr, names=("v1", "v2", "v3")) -> dict[int, sp.Expr]:
    syms = [symbol(n) for n in names]
    expr = sp.expand(expr)
    parts: dict[int, sp.Expr] = {}
    for term in sp.Add.make_args(expr):
        powers = term.as_powers_dict()
        degree = 0
        for s in syms:
            k = powers.get(s, 0)
            if not (sp.sympify(k).is_Integer and k >= 0):
                raise ValueError(f"non-polynomial velocity dependence in {term}")
            degree += int(k)
        parts[degree] = parts.get(degree, sp.S.Zero) + term
    return parts


def collect_by_degree(
    a: OperatorExpr, names=("v1", "v2", "v3")
) -> dict[tuple[DerivationMonomial, int], sp.Expr]:
    """Split every coefficient into homogeneous parts of total degree in the
    given variables."""
    out: dict[tuple[DerivationMonomial, int], sp.Expr] = {}
    for mono, coeff in a.terms.items():
        for degree, part in _homogeneous_parts(coeff, names).items():
            out[(mono, degree)] = part
    return out


def gamma_inverse_series(order_v2: int) -> sp.Expr:
    """Maclaurin expansion of sqrt(1 - V^2) through (V^2)^order_v2."""
    u = sp.Symbol("_u")
    ser = sp.series(sp.sqrt(1 - u), u, 0, order_v2 + 1).removeO()
    v2 = sum(symbol(f"v{i}") ** 2 for i in (1, 2, 3))
    return sp.expand(ser.subs(u, v2))


# -- C1 identities -----------------------------------------------------------------


def c1_coefficient(n: int) -> sp.Rational:
    """Product (1/2)(3/4)...((2n-1)/(2n)): the gamma-series coefficients."""
    out = sp.Rational(1)
    for k in range(1, n + 1):
        out *= sp.Rational(2 * k - 1, 2 * k)
    return out


def _anti_hermitian_check(X: OperatorExpr, name: str, trials, tol, seed) -> CheckResult:
    rep = op.op_equal(adjoint(X), -X, trials, tol, seed)
    return CheckResult(
        check_id=f"{name}:anti-hermitian-exponent",
        residual=rep.max_residual,
        passed=rep.equal,
        probes=rep.trials,
    )


def verify_c1_on_velocity(
    m0: float, order: int = 6, trials: int = 60, tol: float = 1e-9, seed: int = 0
) -> list[CheckResult]:
    """Order-n conjugation term on m0 V_i equals m0 V_i V^{2n} prod (2k-1)/(2k).

    The rational coefficient is extracted exactly by polynomial cancellation
    in addition to the numeric probe.
    """
    X = c1_exponent()
    results = [_anti_hermitian_check(X, "c1-momentum", trials, tol, seed)]
    v = [symbol(f"v{i}") for i in (1, 2, 3)]
    v2 = sum(w**2 for w in v)
    for i in (1, 2, 3):
        # ad is linear, so the mass can be divided out and the order-n
        # coefficient extracted as an exact rational
        series = adjoint_series(X, multiplicative(v[i - 1]), order)
        for n, term in enumerate(series.terms):
            expected_coeff = c1_coefficient(n)
            expected = multiplicative(expected_coeff * v[i - 1] * v2**n)
            rep = op.op_equal(
                term.scale(sp.Float(m0)), expected.scale(sp.Float(m0)), trials, tol, seed
            )
            exact = ""
            if list(term.terms) == [IDENTITY_MONOMIAL]:
                ratio = sp.cancel(term.scalar_part().sym / (v[i - 1] * v2**n))
                exact = (
                    f"exact coefficient {ratio} == {expected_coeff}"
                    if ratio == expected_coeff
                    else f"coefficient {ratio} != {expected_coeff}"
                )
            results.append(
                CheckResult(
                    check_id=f"c1-momentum:V{i}:order{n}",
                    residual=rep.max_residual,
                    passed=rep.equal and ("!=" not in exact),
                    lhs=f"ad^{n}(m0*V{i})/{n}!",
                    rhs=f"m0*({expected_coeff})*V{i}*V^{2*n}",
                    probes=rep.trials,
                    detail=exact,
                )
            )
    return results


def verify_c1_on_lambda(
    m0: float, order: int = 6, trials: int = 60, tol: float = 1e-9, seed: int = 0
) -> list[CheckResult]:
    """Conjugation of lam_v_i/m0 matches the symmetrized
    (1/m0)[gamma^-1 (lam_v_i - V_i V_k lam_v_k)]_S, collected per total
    velocity degree (nested commutators mix series orders).

    Degrees complete inside the truncation are asserted: derivation terms
    through 2N, multiplicative terms through 2N-1.
    """
    X = c1_exponent()
    results = [_anti_hermitian_check(X, "c1-lambda", trials, tol, seed)]
    N = order
    ginv = gamma_inverse_series(N + 2)
    v = [symbol(f"v{i}") for i in (1, 2, 3)]
    inv_m0 = sp.Rational(1) / sp.Float(m0)
    for i in (1, 2, 3):
        series = adjoint_series(X, lam_v(i).scale(inv_m0), N)
        lhs_parts = collect_by_degree(series.partial_sum())
        rhs = symmetrize(multiplicative(ginv), lam_v(i)).scale(inv_m0)
        for k in (1, 2, 3):
            rhs = rhs - symmetrize(
                multiplicative(sp.expand(ginv * v[i - 1] * v[k - 1])), lam_v(k)
            ).scale(inv_m0)
        rhs_parts = collect_by_degree(rhs)
        degrees = sorted(
            {d for (_, d) in lhs_parts} | {d for (_, d) in rhs_parts}
        )
        for d in degrees:
            monos = {m for (m, dd) in lhs_parts if dd == d} | {
                m for (m, dd) in rhs_parts if dd == d
            }
            diff_terms = {
                m: lhs_parts.get((m, d), sp.S.Zero) - rhs_parts.get((m, d), sp.S.Zero)
                for m in monos
            }
            delta = OperatorExpr(VELOCITY, diff_terms)
            rep = op.op_equal(delta, op.zero(VELOCITY), trials, tol, seed)
            derivation_only = all(m.order > 0 for m in monos)
            complete = d <= 2 * N - 1 or (derivation_only and d <= 2 * N)
            results.append(
                CheckResult(
                    check_id=f"c1-lambda:lam_v{i}:degree{d}",
                    residual=rep.max_residual,
                    passed=rep.equal if complete else True,
                    informational=not complete,
                    lhs=f"collected degree-{d} part of C1 lam_v{i}/m0 C1^-1",
                    rhs="same degree of [gamma^-1(lam_v - V V.lam_v)]_S/m0",
                    probes=rep.trials,
                    detail="" if complete else "beyond truncation, informational",
                )
            )
    return results


# -- C2 identities ------------------------------------------------------------------


def verify_c2(
    field, trials: int = 60, tol: float = 1e-9, seed: int = 0
) -> list[CheckResult]:
    """The vector-potential shift terminates at first order:
    Pi -> Pi + A, lam_r -> lam_r - (dA_j/dX_i) lam_p_j, lam_p -> lam_p."""
    X = c2_exponent(field)
    results = [_anti_hermitian_check(X, "c2", trials, tol, seed)]
    ps = [symbol(f"p{i}") for i in (1, 2, 3)]
    A = [a.sym for a in field.vector_potential]
    xs = [symbol(f"x{i}") for i in (1, 2, 3)]
    for i in (1, 2, 3):
        kinetic = multiplicative(ps[i - 1] - A[i - 1], MOMENTUM)
        series = adjoint_series(X, kinetic, 2)
        checks = [
            (f"c2:Pi{i}:order1", series.terms[1], multiplicative(A[i - 1], MOMENTUM)),
            (f"c2:Pi{i}:order2-terminates", series.terms[2], op.zero(MOMENTUM)),
            (f"c2:Pi{i}:sum", series.partial_sum(), multiplicative(ps[i - 1], MOMENTUM)),
        ]
        shift = op.zero(MOMENTUM)
        for j in (1, 2, 3):
            gradient = sp.diff(A[j - 1], xs[i - 1])
            if gradient != 0:
                shift = shift - op.compose(multiplicative(gradient, MOMENTUM), lam_p(j))
        lam_series = adjoint_series(X, lam_x(i, MOMENTUM), 2)
        checks += [
            (f"c2:lam_r{i}:order1", lam_series.terms[1], shift),
            (f"c2:lam_r{i}:order2-terminates", lam_series.terms[2], op.zero(MOMENTUM)),
            (
                f"c2:lam_p{i}:invariant",
                adjoint_series(X, lam_p(i), 1).terms[1],
                op.zero(MOMENTUM),
            ),
        ]
        for check_id, lhs, rhs in checks:
            rep = op.op_equal(lhs, rhs, trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=check_id,
                    residual=rep.max_residual,
                    passed=rep.equal,
                    probes=rep.trials,
                )
            )
    return results


# -- finite-boost closed forms ---------------------------------------------------------


def _taylor_coefficients(expr: sp.Expr, order: int) -> list[sp.Expr]:
    poly = sp.expand(sp.series(expr, _S, 0, order + 1).removeO())
    return [sp.expand(poly.coeff(_S, n)) for n in range(order + 1)]


def _boost_targets(kind: str, m0: float):
    """Targets and closed forms (functions of the formal rapidity) per kind."""
    vb = sp.tanh(_S)
    if kind == "velocity":
        v = [symbol(f"v{i}") for i in (1, 2, 3)]
        den = 1 - vb * v[2]
        return VELOCITY, [
            ("V1", velocity(1), sp.sqrt(1 - vb**2) * v[0] / den),
            ("V2", velocity(2), sp.sqrt(1 - vb**2) * v[1] / den),
            ("V3", velocity(3), (v[2] - vb) / den),
        ]
    if kind == "energy-momentum":
        ps = [symbol(f"p{i}") for i in (1, 2, 3)]
        H = sp.sqrt(sum(p**2 for p in ps) + sp.Float(m0) ** 2)
        return MOMENTUM, [
            ("H", multiplicative(H, MOMENTUM), H * sp.cosh(_S) - ps[2] * sp.sinh(_S)),
            ("P3", momentum(3), ps[2] * sp.cosh(_S) - H * sp.sinh(_S)),
            ("P1", momentum(1), ps[0]),
        ]
    if kind == "position":
        v1, v3 = symbol("v1"), symbol("v3")
        x1, x3 = symbol("x1"), symbol("x3")
        den = 1 - vb * v3
        ginv = sp.sqrt(1 - vb**2)
        return VELOCITY, [
            ("X3", position(3), ginv * x3 + vb * ginv * x3 * v3 / den),
            ("X1", position(1), x1 + vb * x3 * v1 / den),
        ]
    raise ValueError(f"unknown boost kind {kind!r}")


def verify_boost_closed_forms(
    kind: str,
    rapidity: float = 0.5,
    order: int = 4,
    trials: int = 60,
    tol: float = 1e-9,
    seed: int = 0,
    m0: float = 1.0,
) -> list[CheckResult]:
    """Taylor coefficients of the closed transformation laws match the
    nested-commutator terms of conjugation by the boost generator.

    Position laws are asserted through order 2 (the order the induction
    proof establishes); higher orders are evaluated and reported
    informationally.  A numeric partial-sum convergence table at the given
    rapidity is appended informationally.
    """
    from .generators import build_free_generators, build_momentum_generators

    if abs(sp.tanh(rapidity)) > 0.9:
        raise ValueError("|tanh s| <= 0.9 is required for well-conditioned probing")
    rep_name, targets = _boost_targets(kind, m0)
    if rep_name == VELOCITY:
        gen = build_free_generators(m0)
    else:
        gen = build_momentum_generators(m0)
    Kz = gen.boosts[2].subs({"t": 0})
    X = Kz.scale(sp.I)
    assert_order = 2 if kind == "position" else order
    results = []
    for name, target, closed in targets:
        series = adjoint_series(X, target, order)
        coeffs = _taylor_coefficients(closed, order)
        for n in range(order + 1):
            repn = op.op_equal(
                series.terms[n], multiplicative(coeffs[n], rep_name), trials, tol, seed
            )
            informational = n > assert_order
            results.append(
                CheckResult(
                    check_id=f"boost-{kind}:{name}:order{n}",
                    residual=repn.max_residual,
                    passed=repn.equal or informational,
                    informational=informational,
                    lhs=f"ad^{n}(i K3)({name})/{n}!",
                    rhs=f"d^{n}/ds^{n} closed form",
                    probes=repn.trials,
                    detail="beyond the proven order, informational" if informational else "",
                )
            )
        # numeric convergence of partial sums toward the closed form
        closed_num = multiplicative(closed.subs(_S, sp.Float(rapidity)), rep_name)
        residuals = []
        for n in range(order + 1):
            partial = series.partial_sum_at(rapidity, n)
            repn = op.op_equal(partial, closed_num, max(trials // 3, 10), tol, seed)
            residuals.append(repn.max_residual)
        monotone = all(b <= a * (1 + 1e-12) for a, b in zip(residuals, residuals[1:]))
        results.append(
            CheckResult(
                check_id=f"boost-{kind}:{name}:partial-sum-convergence@s={rapidity:g}",
                residual=residuals[-1],
                passed=True,
                informational=True,
                detail=f"residuals {['%.2e' % r for r in residuals]}"
                + (" monotone" if monotone else " not monotone"),
            )
        )
    return results


# -- composed canonical map -------------------------------------------------------------


def verify_canonical_map(
    m0: float,
    field=None,
    order: int = 6,
    trials: int = 40,
    tol: float = 1e-9,
    seed: int = 0,
) -> list[CheckResult]:
    """The scale + C1 + C2 composition sends the velocity-representation
    canonical table to the momentum-representation one.

    Stage 1 (velocity rep): images P = C1 (m0 V) C1^-1 and
    lam_p = C1 (lam_v/m0) C1^-1 as truncated series; brackets that close
    exactly are asserted exactly, [P_i, lam_p_j] = i delta_ij and
    [lam_p_i, lam_p_j] = 0 are asserted per collected velocity degree within
    the truncation (degree <= 2N-2).  Stage 2 (momentum rep): the C2 shift
    terminates, so its table transport is asserted exactly.
    """
    from .generators import ForceFieldSym

    field = field or ForceFieldSym.zero()
    N = order
    results = []
    X1 = c1_exponent()
    v = [symbol(f"v{i}") for i in (1, 2, 3)]
    P_img = [
        adjoint_series(X1, multiplicative(sp.Float(m0) * v[i]), N).partial_sum()
        for i in range(3)
    ]
    lp_img = [
        adjoint_series(X1, lam_v(i + 1).scale(sp.Rational(1) / sp.Float(m0)), N).partial_sum()
        for i in range(3)
    ]
    xs = [position(i) for i in (1, 2, 3)]
    lxs = [lam_x(i) for i in (1, 2, 3)]

    def exact_zero(check_id, a, b):
        rep = op.op_equal(commutator(a, b), op.zero(VELOCITY), trials, tol, seed)
        results.append(
            CheckResult(
                check_id=check_id,
                residual=rep.max_residual,
                passed=rep.equal,
                probes=rep.trials,
            )
        )

    for i in range(3):
        for j in range(3):
            exact_zero(f"canonical-map:[X{i+1},P{j+1}]=0", xs[i], P_img[j])
            exact_zero(f"canonical-map:[X{i+1},lam_p{j+1}]=0", xs[i], lp_img[j])
            exact_zero(f"canonical-map:[P{i+1},lam_r{j+1}]=0", P_img[i], lxs[j])
            exact_zero(f"canonical-map:[lam_p{i+1},lam_r{j+1}]=0", lp_img[i], lxs[j])
            if i < j:
                exact_zero(f"canonical-map:[P{i+1},P{j+1}]=0", P_img[i], P_img[j])

    def per_degree(check_id_base, delta: OperatorExpr):
        parts = collect_by_degree(delta)
        degrees = sorted({d for (_, d) in parts})
        for d in degrees:
            monos = {m for (m, dd) in parts if dd == d}
            piece = OperatorExpr(VELOCITY, {m: parts[(m, d)] for m in monos})
            rep = op.op_equal(piece, op.zero(VELOCITY), trials, tol, seed)
            complete = d <= 2 * N - 2
            results.append(
                CheckResult(
                    check_id=f"{check_id_base}:degree{d}",
                    residual=rep.max_residual,
                    passed=rep.equal if complete else True,
                    informational=not complete,
                    probes=rep.trials,
                    detail="" if complete else "beyond truncation, informational",
                )
            )

    for i in range(3):
        for j in range(3):
            delta = commutator(P_img[i], lp_img[j])
            if i == j:
                delta = delta - op.identity(VELOCITY).scale(sp.I)
            per_degree(f"canonical-map:[P{i+1},lam_p{j+1}]-i*delta", delta)
            if i < j:
                per_degree(
                    f"canonical-map:[lam_p{i+1},lam_p{j+1}]", commutator(lp_img[i], lp_img[j])
                )

    # stage 2: the C2 shift in the momentum representation, exact
    X2 = c2_exponent(field)
    ps = [symbol(f"p{i}") for i in (1, 2, 3)]
    A = [a.sym for a in field.vector_potential]
    xsyms = [symbol(f"x{i}") for i in (1, 2, 3)]
    pre_lam_x = []
    for j in range(3):
        lamj = lam_x(j + 1, MOMENTUM)
        for i in range(3):
            gradient = sp.diff(A[i], xsyms[j])
            if gradient != 0:
                lamj = lamj + op.compose(multiplicative(gradient, MOMENTUM), lam_p(i + 1))
        pre_lam_x.append(lamj)
    pre_pi = [multiplicative(ps[i] - A[i], MOMENTUM) for i in range(3)]

    def image(target):
        return adjoint_series(X2, target, 2).partial_sum()

    for i in range(3):
        rep = op.op_equal(image(pre_pi[i]), momentum(i + 1), trials, tol, seed)
        results.append(
            CheckResult(
                check_id=f"canonical-map:C2:Pi{i+1}->P{i+1}",
                residual=rep.max_residual,
                passed=rep.equal,
                probes=rep.trials,
            )
        )
        rep = op.op_equal(image(pre_lam_x[i]), lam_x(i + 1, MOMENTUM), trials, tol, seed)
        results.append(
            CheckResult(
                check_id=f"canonical-map:C2:lam_r{i+1}->lam_r'{i+1}",
                residual=rep.max_residual,
                passed=rep.equal,
                probes=rep.trials,
            )
        )
        for j in range(3):
            rhs = op.identity(MOMENTUM).scale(sp.I) if i == j else op.zero(MOMENTUM)
            rep = op.op_equal(
                commutator(image(pre_pi[i]), image(lam_p(j + 1))), rhs, trials, tol, seed
            )
            results.append(
                CheckResult(
                    check_id=f"canonical-map:C2-table:[P{i+1},lam_p{j+1}]",
                    residual=rep.max_residual,
                    passed=rep.equal,
                    probes=rep.trials,
                )
            )
            rep = op.op_equal(
                commutator(momentum(i + 1), image(pre_lam_x[j])),
                op.zero(MOMENTUM),
                trials,
                tol,
                seed,
            )
            results.append(
                CheckResult(
                    check_id=f"canonical-map:C2-table:[P{i+1},lam_r'{j+1}]=0",
                    residual=rep.max_residual,
                    passed=rep.equal,
                    probes=rep.trials,
                )
            )
    return results
