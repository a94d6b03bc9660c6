"""Named operator realizations and their algebraic verification suites.

Builds the ten space-time generators in both representations, the force
and Lagrangian structures, and runs the bracket-table checks reported by
the CLI.  Conventions adopted here and flagged in reports:

* gamma = (1 - V^2)^(-1/2); the appendix series for 1/gamma fixes the
  exponent.
* [P_i, lam_v_j] is asserted in the derived form i dP_i/dV_j, whose
  coefficient carries gamma^2 on the V_i V_j part.
* [K_i, P_j] is asserted as i delta_ij H (the commutator of Hermitian
  operators is anti-Hermitian, which forces the factor i).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import sympy as sp

from . import operators as op
from .errors import ProbeExhausted, RepresentationMismatch
from .operators import (
    MOMENTUM,
    VELOCITY,
    OperatorExpr,
    commutator,
    compose,
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

EPSILON = {
    (1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
    (2, 1, 3): -1, (3, 2, 1): -1, (1, 3, 2): -1,
}

CONVENTION_NOTES = (
    "gamma = (1 - V^2)^(-1/2): the series expansion of 1/gamma forces the "
    "-1/2 exponent (the inline definition printing -1 is treated as a typo)",
    "[P_i, lam_v_j] asserted as i*dP_i/dV_j = i*m0*gamma*(delta_ij + "
    "gamma^2 V_i V_j); the printed right-hand side carries a single gamma",
    "[K_i, P_j] asserted as i*delta_ij*H; the printed relation omits the i",
)


def _eps_sum(k: int):
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            e = EPSILON.get((k, i, j))
            if e:
                yield e, i, j


# -- force fields -------------------------------------------------------------


@dataclass(frozen=True)
class ForceFieldSym:
    """Static scalar potential phi(x) and vector potential A(x).

    Derived fields: E = -grad phi, B = curl A, and the velocity-dependent
    force F = E + V x B (a multiplicative operator).
    """

    phi: ScalarExpr
    vector_potential: tuple[ScalarExpr, ScalarExpr, ScalarExpr]

    def __post_init__(self):
        # functions of x1..x3 and named parameters only: the symbolic layer
        # is restricted to static fields
        for expr in (self.phi, *self.vector_potential):
            bad = {
                n for n in expr.free_names()
                if n in ("v1", "v2", "v3", "p1", "p2", "p3", "t")
            }
            if bad:
                raise ValueError(
                    f"field components must be static functions of x; got {sorted(bad)}"
                )

    @staticmethod
    def zero() -> "ForceFieldSym":
        z = ScalarExpr.number(0)
        return ForceFieldSym(z, (z, z, z))

    @staticmethod
    def from_expressions(phi, A=(0, 0, 0)) -> "ForceFieldSym":
        mk = lambda e: e if isinstance(e, ScalarExpr) else ScalarExpr(e)
        return ForceFieldSym(mk(phi), tuple(mk(a) for a in A))

    @property
    def is_zero(self) -> bool:
        return self.phi.is_structurally_zero() and all(
            a.is_structurally_zero() for a in self.vector_potential
        )

    @property
    def has_vector_potential(self) -> bool:
        return not all(a.is_structurally_zero() for a in self.vector_potential)

    def electric(self) -> tuple[ScalarExpr, ...]:
        return tuple(-self.phi.diff(f"x{k}") for k in (1, 2, 3))

    def magnetic(self) -> tuple[ScalarExpr, ...]:
        A = self.vector_potential
        return tuple(
            A[(k + 1) % 3].diff(f"x{k % 3 + 1}") - A[k % 3].diff(f"x{(k + 1) % 3 + 1}")
            for k in (1, 2, 3)
        )

    def lorentz_force(self) -> tuple[ScalarExpr, ...]:
        """F = E + V x B as velocity-representation scalar coefficients."""
        E = self.electric()
        B = self.magnetic()
        v = [ScalarExpr.var(f"v{k}") for k in (1, 2, 3)]
        out = []
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            out.append(E[k] + v[i] * B[j] - v[j] * B[i])
        return tuple(out)

    def subs_params(self, params: Mapping[str, float]) -> "ForceFieldSym":
        return ForceFieldSym(
            self.phi.subs(params),
            tuple(a.subs(params) for a in self.vector_potential),
        )


# -- generator sets ------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSet:
    """A realization of the ten space-time generators plus the irreducible set."""

    representation: str
    mass: float
    rotations: tuple[OperatorExpr, OperatorExpr, OperatorExpr]
    boosts: tuple[OperatorExpr, OperatorExpr, OperatorExpr]
    translations: tuple[OperatorExpr, OperatorExpr, OperatorExpr]
    liouvillian: OperatorExpr
    x_ops: tuple[OperatorExpr, OperatorExpr, OperatorExpr]
    kinetic_ops: tuple[OperatorExpr, OperatorExpr, OperatorExpr]
    kinetic_translations: tuple[OperatorExpr, OperatorExpr, OperatorExpr]

    def poincare_labels(self) -> list[tuple[str, int | None, OperatorExpr]]:
        out = []
        for a in (1, 2, 3):
            out.append(("J", a, self.rotations[a - 1]))
        for a in (1, 2, 3):
            out.append(("K", a, self.boosts[a - 1]))
        for a in (1, 2, 3):
            out.append(("T", a, self.translations[a - 1]))
        out.append(("L", None, self.liouvillian))
        return out

    def replace(self, **kwargs) -> "GeneratorSet":
        from dataclasses import replace

        return replace(self, **kwargs)


def _rotations(rep: str, xs, lxs, qs, lqs):
    out = []
    for k in (1, 2, 3):
        j = op.zero(rep)
        for e, a, b in _eps_sum(k):
            j = j + compose(xs[a - 1], lxs[b - 1]).scale(e)
            j = j + compose(qs[a - 1], lqs[b - 1]).scale(e)
        out.append(j)
    return tuple(out)


def build_free_generators(m0: float, include_boost_time_term: bool = True) -> GeneratorSet:
    """Free-particle velocity-representation realization.

    J = X x lam_r + V x lam_v, L = V . lam_r, and
    K_i = (X_i L - {delta_ij - V_i V_j} lam_v_j)_S - t lam_r_i.
    The explicit t term can be dropped without affecting closure.
    """
    if m0 <= 0:
        raise ValueError("m0 must be positive")
    xs = tuple(position(i) for i in (1, 2, 3))
    vs = tuple(velocity(i) for i in (1, 2, 3))
    lxs = tuple(lam_x(i) for i in (1, 2, 3))
    lvs = tuple(lam_v(i) for i in (1, 2, 3))
    L = op.zero(VELOCITY)
    for i in range(3):
        L = L + compose(vs[i], lxs[i])
    ks = []
    t = symbol("t")
    for i in (1, 2, 3):
        k = symmetrize(xs[i - 1], L)
        for j in (1, 2, 3):
            coeff = multiplicative(
                (sp.Integer(1) if i == j else sp.Integer(0))
                - symbol(f"v{i}") * symbol(f"v{j}")
            )
            k = k - symmetrize(coeff, lvs[j - 1])
        if include_boost_time_term:
            k = k - lxs[i - 1].scale(t)
        ks.append(k)
    return GeneratorSet(
        representation=VELOCITY,
        mass=float(m0),
        rotations=_rotations(VELOCITY, xs, lxs, vs, lvs),
        boosts=tuple(ks),
        translations=lxs,
        liouvillian=L,
        x_ops=xs,
        kinetic_ops=vs,
        kinetic_translations=lvs,
    )


def build_interacting_liouvillian(m0: float, field: ForceFieldSym) -> OperatorExpr:
    """Velocity-representation Liouvillian generating the relativistic force law.

    L = V . lam_r + ((1/m0) gamma^-1 {F_i - (V.F) V_i} lam_v_i)_S
    """
    if m0 <= 0:
        raise ValueError("m0 must be positive")
    vs = [symbol(f"v{i}") for i in (1, 2, 3)]
    F = [f.sym for f in field.lorentz_force()]
    vdotf = sum(v * f for v, f in zip(vs, F))
    gamma_inv = sp.sqrt(1 - sum(v**2 for v in vs))
    L = op.zero(VELOCITY)
    for i in range(3):
        L = L + compose(velocity(i + 1), lam_x(i + 1))
        g = gamma_inv * (F[i] - vdotf * vs[i]) / m0
        if g != 0:
            L = L + symmetrize(multiplicative(g), lam_v(i + 1))
    return L


def relativistic_momentum(m0: float, i: int) -> OperatorExpr:
    """Kinetic momentum m0 gamma V_i as a multiplicative operator."""
    vs = [symbol(f"v{k}") for k in (1, 2, 3)]
    gamma = (1 - sum(v**2 for v in vs)) ** sp.Rational(-1, 2)
    return multiplicative(m0 * gamma * vs[i - 1])


# -- Lagrangian structure -------------------------------------------------------


@dataclass(frozen=True)
class LagrangianStructure:
    kinetic_coenergy: ScalarExpr
    generalized_potential: OperatorExpr
    lagrangian: OperatorExpr
    canonical_momentum: tuple[OperatorExpr, OperatorExpr, OperatorExpr]


def build_lagrangian_structure(m0: float, field: ForceFieldSym) -> LagrangianStructure:
    """Kinetic co-energy, generalized potential, Lagrangian operator, and the
    canonical momentum P = i[lam_v, Lagrangian] = m0 gamma V + A."""
    vs = [symbol(f"v{i}") for i in (1, 2, 3)]
    tstar = ScalarExpr(m0 * (1 - sp.sqrt(1 - sum(v**2 for v in vs))))
    u_sym = field.phi.sym - sum(
        v * a.sym for v, a in zip(vs, field.vector_potential)
    )
    U = multiplicative(u_sym)
    lagr = multiplicative(tstar.sym - u_sym)
    P = tuple(
        commutator(lam_v(i), lagr).scale(sp.I) for i in (1, 2, 3)
    )
    return LagrangianStructure(
        kinetic_coenergy=tstar,
        generalized_potential=U,
        lagrangian=lagr,
        canonical_momentum=P,
    )


def apply_euler_lagrange(
    lagrangian: OperatorExpr, liouvillian: OperatorExpr
) -> tuple[OperatorExpr, OperatorExpr, OperatorExpr]:
    """The Euler-Lagrange superoperator applied componentwise:
    Phi_a[Lg] = -[L, [lam_v_a, Lg]] - i [lam_r_a, Lg]."""
    if not lagrangian.is_multiplicative:
        raise ValueError("the Lagrangian operator must be multiplicative")
    out = []
    for a in (1, 2, 3):
        inner = commutator(lam_v(a), lagrangian)
        term = -commutator(liouvillian, inner) - commutator(lam_x(a), lagrangian).scale(sp.I)
        out.append(term)
    return tuple(out)


# -- momentum representation ------------------------------------------------------


def _momentum_symbols():
    return [symbol(f"p{i}") for i in (1, 2, 3)]


def free_hamiltonian(m0: float) -> ScalarExpr:
    ps = _momentum_symbols()
    return ScalarExpr(sp.sqrt(sum(p**2 for p in ps) + sp.Float(m0) ** 2))


def kinetic_hamiltonian(m0: float, field: ForceFieldSym) -> ScalarExpr:
    """H = sqrt((P-A)^2 + m0^2) = m0 gamma, as a momentum-rep scalar."""
    ps = _momentum_symbols()
    A = [a.sym for a in field.vector_potential]
    return ScalarExpr(
        sp.sqrt(sum((p - a) ** 2 for p, a in zip(ps, A)) + sp.Float(m0) ** 2)
    )


def _momentum_force(m0: float, field: ForceFieldSym) -> list[sp.Expr]:
    """Lorentz force with V realized as H^-1 (P - A) in the momentum rep."""
    ps = _momentum_symbols()
    A = [a.sym for a in field.vector_potential]
    H = kinetic_hamiltonian(m0, field).sym
    V = [(p - a) / H for p, a in zip(ps, A)]
    E = [e.sym for e in field.electric()]
    B = [b.sym for b in field.magnetic()]
    out = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        out.append(E[k] + V[i] * B[j] - V[j] * B[i])
    return out


def momentum_liouvillian_simplified(m0: float, field: ForceFieldSym) -> OperatorExpr:
    """Pure-electric (A = 0) momentum-representation Liouvillian:
    L' = H^-1 P . lam_r' + F . lam_p."""
    if field.has_vector_potential:
        raise ValueError("the simplified Liouvillian requires A = 0")
    ps = _momentum_symbols()
    H = free_hamiltonian(m0).sym
    E = [e.sym for e in field.electric()]
    L = op.zero(MOMENTUM)
    for i in range(3):
        L = L + symmetrize(multiplicative(ps[i] / H, MOMENTUM), lam_x(i + 1, MOMENTUM))
        if E[i] != 0:
            L = L + symmetrize(multiplicative(E[i], MOMENTUM), lam_p(i + 1))
    return L


def momentum_liouvillian_general(m0: float, field: ForceFieldSym) -> OperatorExpr:
    """General-A momentum-representation Liouvillian with outermost
    symmetrization, following the printed form.

    The printed index placement is not self-consistent; the reading used
    here recombines the unprimed translation generator,
    lam_r_i = lam_r'_i + (dA_j/dX_i) lam_p_j, in the transport term, and
    contracts the braced index of the correction term into its
    delta_ij factor.  The A -> 0 limit reproduces the pure-electric form;
    the correction term's effect on the Heisenberg momentum equation is
    measured (not asserted) by the verification suite.
    """
    ps = _momentum_symbols()
    A = [a.sym for a in field.vector_potential]
    H = kinetic_hamiltonian(m0, field).sym
    F = _momentum_force(m0, field)
    xsyms = [symbol(f"x{i}") for i in (1, 2, 3)]
    L = op.zero(MOMENTUM)
    for i in range(3):
        vi = (ps[i] - A[i]) / H
        L = L + symmetrize(multiplicative(vi, MOMENTUM), lam_x(i + 1, MOMENTUM))
        for j in range(3):
            g = vi * sp.diff(A[j], xsyms[i])
            if g != 0:
                L = L + symmetrize(multiplicative(g, MOMENTUM), lam_p(j + 1))
    fdotp = sum(f * p for f, p in zip(F, ps))
    fdota = sum(f * a for f, a in zip(F, A))
    for j in range(3):
        coeff = F[j]
        for i in range(3):
            braces = A[i] * fdotp + (ps[i] - A[i]) * fdota
            delta = sp.Integer(1) if i == j else sp.Integer(0)
            metric = delta - ps[i] * A[j] - ps[j] * A[i] + A[i] * A[j]
            coeff = coeff - braces * metric / H**2
        coeff = sp.expand(coeff)
        if coeff != 0:
            L = L + symmetrize(multiplicative(coeff, MOMENTUM), lam_p(j + 1))
    return L


def build_momentum_generators(
    m0: float,
    field: ForceFieldSym | None = None,
    include_boost_time_term: bool = True,
) -> GeneratorSet:
    """Momentum-representation realization.

    Free case: H = sqrt(P^2 + m0^2), L' = H^-1 P . lam_r',
    K_i = (X_i L' - H lam_p_i)_S - t lam_r'_i.  With a field, the
    Liouvillian becomes the pure-electric or general-A form.
    """
    if m0 <= 0:
        raise ValueError("m0 must be positive")
    field = field or ForceFieldSym.zero()
    xs = tuple(position(i, MOMENTUM) for i in (1, 2, 3))
    pos_ps = tuple(momentum(i) for i in (1, 2, 3))
    lxs = tuple(lam_x(i, MOMENTUM) for i in (1, 2, 3))
    lps = tuple(lam_p(i) for i in (1, 2, 3))
    ps = _momentum_symbols()
    H_free = free_hamiltonian(m0).sym

    if field.is_zero:
        L = op.zero(MOMENTUM)
        for i in range(3):
            L = L + symmetrize(multiplicative(ps[i] / H_free, MOMENTUM), lxs[i])
    elif not field.has_vector_potential:
        L = momentum_liouvillian_simplified(m0, field)
    else:
        L = momentum_liouvillian_general(m0, field)

    t = symbol("t")
    ks = []
    for i in (1, 2, 3):
        k = symmetrize(xs[i - 1], L) - symmetrize(
            multiplicative(H_free, MOMENTUM), lps[i - 1]
        )
        if include_boost_time_term:
            k = k - lxs[i - 1].scale(t)
        ks.append(k)
    return GeneratorSet(
        representation=MOMENTUM,
        mass=float(m0),
        rotations=_rotations(MOMENTUM, xs, lxs, pos_ps, lps),
        boosts=tuple(ks),
        translations=lxs,
        liouvillian=L,
        x_ops=xs,
        kinetic_ops=pos_ps,
        kinetic_translations=lps,
    )


# -- verification suites -----------------------------------------------------------


def _bracket_rhs(gen: GeneratorSet, li, lj) -> tuple[OperatorExpr, str]:
    """Structure-constant right-hand side for a generator pair."""
    (ka, a, _), (kb, b, _) = li, lj
    rep = gen.representation
    J, K, T, L = gen.rotations, gen.boosts, gen.translations, gen.liouvillian

    def eps_comb(ops, sign=1):
        out = op.zero(rep)
        labels = []
        for c in (1, 2, 3):
            e = EPSILON.get((a, b, c))
            if e:
                out = out + ops[c - 1].scale(sp.I * e * sign)
                labels.append(f"{'+' if e * sign > 0 else '-'}i*{_label(ops, c)}")
        return out, " ".join(labels) or "0"

    def _label(ops, c):
        name = {id(J): "J", id(K): "K", id(T): "lam_r"}[id(ops)]
        return f"{name}{c}"

    pair = (ka, kb)
    if pair == ("J", "J"):
        return eps_comb(J)
    if pair == ("J", "K"):
        return eps_comb(K)
    if pair == ("K", "J"):
        rhs, lab = eps_comb(K)
        return -rhs, f"-({lab})"
    if pair == ("J", "T"):
        return eps_comb(T)
    if pair == ("T", "J"):
        rhs, lab = eps_comb(T)
        return -rhs, f"-({lab})"
    if pair == ("K", "K"):
        rhs, lab = eps_comb(J, sign=-1)
        return rhs, lab
    if pair == ("T", "T"):
        return op.zero(rep), "0"
    if pair == ("J", "L"):
        return op.zero(rep), "0"
    if pair == ("L", "J"):
        return op.zero(rep), "0"
    if pair == ("T", "L"):
        return op.zero(rep), "0"
    if pair == ("L", "T"):
        return op.zero(rep), "0"
    if pair == ("K", "L"):
        return T[a - 1].scale(sp.I), f"i*lam_r{a}"
    if pair == ("L", "K"):
        return T[b - 1].scale(-sp.I), f"-i*lam_r{b}"
    if pair == ("K", "T"):
        if a == b:
            return L.scale(sp.I), "i*L"
        return op.zero(rep), "0"
    if pair == ("T", "K"):
        if a == b:
            return L.scale(-sp.I), "-i*L"
        return op.zero(rep), "0"
    raise ValueError(pair)


POINCARE_LABEL_ORDER = (
    ("J", 1), ("J", 2), ("J", 3),
    ("K", 1), ("K", 2), ("K", 3),
    ("T", 1), ("T", 2), ("T", 3),
    ("L", None),
)


def closure_relations(gen: GeneratorSet):
    """All 45 ordered generator pairs with their expected right-hand sides."""
    labels = gen.poincare_labels()
    for ii in range(len(labels)):
        for jj in range(ii + 1, len(labels)):
            yield labels[ii], labels[jj]


def relation_id(li, lj) -> str:
    def name(lbl):
        k, a = lbl[0], lbl[1]
        base = {"J": "J", "K": "K", "T": "lam_r", "L": "L"}[k]
        return base if a is None else f"{base}{a}"

    return f"[{name(li)},{name(lj)}]"


def relation_families(li, lj) -> set[str]:
    """Generator families appearing on either side of a bracket relation
    (the right-hand side counts: e.g. [K,K] involves J)."""
    ka, a = li[0], li[1]
    kb, b = lj[0], lj[1]
    out = {ka, kb}
    pair = frozenset((ka, kb))
    if pair == frozenset(("K",)):
        out.add("J")
    if pair == frozenset(("K", "L")):
        out.add("T")
    if pair == frozenset(("K", "T")) and a == b:
        out.add("L")
    return out


def relation_involves(rel_id: str, which: str) -> bool:
    """True if the named family appears on either side of the relation."""
    label = {"lam_r": "T"}.get(which, which)
    labels = POINCARE_LABEL_ORDER
    for ii in range(len(labels)):
        for jj in range(ii + 1, len(labels)):
            if relation_id(labels[ii], labels[jj]) == rel_id:
                return label in relation_families(labels[ii], labels[jj])
    raise ValueError(f"unknown relation id {rel_id!r}")


def verify_poincare_closure(
    gen: GeneratorSet,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    t_values: Sequence[float] = (0.0,),
) -> list[CheckResult]:
    """Probe all 45 pairwise brackets against the structure-constant table.

    The explicit time parameter inside K is pinned to each value in
    ``t_values``; closure must hold at every one.  A probing failure on one
    relation is reported, not fatal.
    """
    results = []
    for li, lj in closure_relations(gen):
        rel = relation_id(li, lj)
        lhs = commutator(li[2], lj[2])
        rhs, rhs_label = _bracket_rhs(gen, li, lj)
        for tv in t_values:
            check_id = f"{gen.representation}:{rel}@t={tv:g}"
            try:
                rep = op.op_equal(lhs, rhs, trials, tol, seed, pins={"t": float(tv)})
                results.append(
                    CheckResult(
                        check_id=check_id,
                        residual=rep.max_residual,
                        passed=rep.equal,
                        lhs=rel,
                        rhs=rhs_label,
                        probes=rep.trials,
                    )
                )
            except ProbeExhausted as exc:
                results.append(
                    CheckResult(
                        check_id=check_id,
                        residual=float("inf"),
                        passed=False,
                        lhs=rel,
                        rhs=rhs_label,
                        detail=f"probe exhausted: {exc}",
                    )
                )
    return results


def verify_hermiticity(
    gen: GeneratorSet, trials: int = 50, tol: float = 1e-9, seed: int = 0
) -> list[CheckResult]:
    """All ten generators must equal their formal adjoints."""
    results = []
    for kind, a, g in gen.poincare_labels():
        name = kind if a is None else f"{kind}{a}"
        rep = op.op_equal(g, op.adjoint(g), trials, tol, seed)
        results.append(
            CheckResult(
                check_id=f"{gen.representation}:hermitian:{name}",
                residual=rep.max_residual,
                passed=rep.equal,
                probes=rep.trials,
            )
        )
    return results


def verify_force_equation(
    m0: float,
    field: ForceFieldSym,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
) -> list[CheckResult]:
    """Heisenberg form of the force law: i[L, m0 gamma V_i] = F_i."""
    L = build_interacting_liouvillian(m0, field)
    F = field.lorentz_force()
    results = []
    for i in (1, 2, 3):
        lhs = commutator(L, relativistic_momentum(m0, i)).scale(sp.I)
        rhs = multiplicative(F[i - 1])
        rep = op.op_equal(lhs, rhs, trials, tol, seed)
        results.append(
            CheckResult(
                check_id=f"force-equation:component{i}",
                residual=rep.max_residual,
                passed=rep.equal,
                lhs=f"i[L, m0*gamma*V{i}]",
                rhs=f"F{i}",
                probes=rep.trials,
            )
        )
    return results


def verify_euler_lagrange(
    m0: float,
    field: ForceFieldSym,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
) -> list[CheckResult]:
    """Phi[Lagrangian] = 0 for the matched pair; the kinetic-only control
    against the interacting Liouvillian leaves exactly the force operator."""
    struct = build_lagrangian_structure(m0, field)
    L = build_interacting_liouvillian(m0, field)
    phi = apply_euler_lagrange(struct.lagrangian, L)
    results = []
    for a, comp in enumerate(phi, start=1):
        rep = op.op_equal(comp, op.zero(VELOCITY), trials, tol, seed)
        results.append(
            CheckResult(
                check_id=f"euler-lagrange:component{a}",
                residual=rep.max_residual,
                passed=rep.equal,
                lhs=f"Phi_{a}[T*-U]",
                rhs="0",
                probes=rep.trials,
            )
        )
    if not field.is_zero:
        kin_only = multiplicative(struct.kinetic_coenergy)
        phi_controls = apply_euler_lagrange(kin_only, L)
        force = field.lorentz_force()
        nonzero_residual = 0.0
        for a, comp in enumerate(phi_controls, start=1):
            # mismatched pair: the residual is exactly the force operator
            rep = op.op_equal(comp, multiplicative(force[a - 1]), trials, tol, seed)
            rep0 = op.op_equal(comp, op.zero(VELOCITY), trials, tol, seed)
            nonzero_residual = max(nonzero_residual, rep0.max_residual)
            results.append(
                CheckResult(
                    check_id=f"euler-lagrange:mismatch-control{a}",
                    residual=rep.max_residual,
                    passed=rep.equal,
                    lhs=f"Phi_{a}[T*]",
                    rhs=f"F{a}",
                    probes=rep.trials,
                )
            )
        results.append(
            CheckResult(
                check_id="euler-lagrange:mismatch-control-nonzero",
                residual=nonzero_residual,
                passed=nonzero_residual > tol,
                lhs="Phi[T*]",
                rhs="nonzero for a nonzero force",
                detail="negative control: residual must NOT vanish",
            )
        )
    return results


def verify_canonical_momentum_brackets(
    m0: float,
    field: ForceFieldSym,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
) -> list[CheckResult]:
    """Asserts [P_i, lam_r_j] = i dA_i/dX_j and the derived form of
    [P_i, lam_v_j]; the printed single-gamma variant is probed and reported
    informationally."""
    struct = build_lagrangian_structure(m0, field)
    P = struct.canonical_momentum
    results = []
    vs = [symbol(f"v{i}") for i in (1, 2, 3)]
    gamma = (1 - sum(v**2 for v in vs)) ** sp.Rational(-1, 2)
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            lhs = commutator(P[i - 1], lam_x(j))
            rhs = multiplicative(sp.I * sp.diff(field.vector_potential[i - 1].sym, symbol(f"x{j}")))
            rep = op.op_equal(lhs, rhs, trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=f"[P{i},lam_r{j}]=i*dA{i}/dx{j}",
                    residual=rep.max_residual,
                    passed=rep.equal,
                    probes=rep.trials,
                )
            )
            lhs2 = commutator(P[i - 1], lam_v(j))
            derived = multiplicative(
                sp.I * sp.diff(P[i - 1].scalar_part().sym, symbol(f"v{j}"))
            )
            rep2 = op.op_equal(lhs2, derived, trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=f"[P{i},lam_v{j}]=i*dP{i}/dv{j}",
                    residual=rep2.max_residual,
                    passed=rep2.equal,
                    probes=rep2.trials,
                )
            )
            printed = multiplicative(
                sp.I * m0 * gamma * ((1 if i == j else 0) + vs[i - 1] * vs[j - 1] * gamma)
            )
            rep3 = op.op_equal(lhs2, printed, trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=f"[P{i},lam_v{j}] printed single-gamma form",
                    residual=rep3.max_residual,
                    passed=rep3.equal,
                    informational=True,
                    detail="printed form differs from the derived identity",
                )
            )
    return results


def verify_momentum_interacting(
    m0: float,
    field: ForceFieldSym,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
) -> list[CheckResult]:
    """Consequence tests for the general-A momentum Liouvillian: the A -> 0
    reduction is asserted; the Heisenberg equations are measured."""
    results = []
    zerofield = ForceFieldSym.from_expressions(field.phi, (0, 0, 0))
    general_at_zero = momentum_liouvillian_general(m0, zerofield)
    simplified = momentum_liouvillian_simplified(m0, zerofield)
    rep = op.op_equal(general_at_zero, simplified, trials, tol, seed)
    results.append(
        CheckResult(
            check_id="momentum-liouvillian:A->0 reduction",
            residual=rep.max_residual,
            passed=rep.equal,
            lhs="general form at A=0",
            rhs="pure-electric form",
            probes=rep.trials,
        )
    )
    if field.has_vector_potential:
        L = momentum_liouvillian_general(m0, field)
        H = kinetic_hamiltonian(m0, field).sym
        ps = _momentum_symbols()
        A = [a.sym for a in field.vector_potential]
        for i in (1, 2, 3):
            lhs = commutator(L, position(i, MOMENTUM)).scale(sp.I)
            rhs = multiplicative((ps[i - 1] - A[i - 1]) / H, MOMENTUM)
            r = op.op_equal(lhs, rhs, trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=f"momentum-liouvillian:i[L',X{i}]=V{i}",
                    residual=r.max_residual,
                    passed=r.equal,
                    probes=r.trials,
                )
            )
        xsyms = [symbol(f"x{k}") for k in (1, 2, 3)]
        E = [e.sym for e in field.electric()]
        for i in (1, 2, 3):
            lhs = commutator(L, momentum(i)).scale(sp.I)
            pdot = E[i - 1] + sum(
                (ps[j] - A[j]) / H * sp.diff(A[j], xsyms[i - 1]) for j in range(3)
            )
            r = op.op_equal(lhs, multiplicative(pdot, MOMENTUM), trials, tol, seed)
            results.append(
                CheckResult(
                    check_id=f"momentum-liouvillian:i[L',P{i}] vs Hamiltonian pdot{i}",
                    residual=r.max_residual,
                    passed=r.equal,
                    informational=True,
                    detail="measured only; the printed correction term shifts this",
                )
            )
    return results


# -- Poisson correspondence ---------------------------------------------------------


def poisson_correspondence(
    operator: OperatorExpr,
    p_ref: Sequence[float] = (0.0, 0.0, 0.0),
    trials: int = 60,
    tol: float = 1e-9,
    seed: int = 0,
):
    """If the operator is the phase-space vector field -i{., H}, return a
    generating Hamiltonian; otherwise None.

    The generator is fixed by the convention H(x=0, p=p_ref) = 0: callers
    comparing against a closed form should subtract that form's value at the
    anchor.  The returned expression is exact when sympy finds the radial
    antiderivative, else a quadrature-backed integral node.
    """
    if operator.representation != MOMENTUM:
        raise RepresentationMismatch("poisson_correspondence needs a momentum-rep operator")
    if operator.max_order > 1:
        raise ValueError("operator must be first order in derivations")
    from .operators import DerivationMonomial
    from .scalars import equal_numeric

    a = []  # coefficients of lam_r'_i, equal dH/dp_i
    b = []  # coefficients of lam_p_i, equal -dH/dx_i
    for slot in range(3):
        idx = [0] * 6
        idx[slot] = 1
        a.append(sp.I * operator.terms.get(DerivationMonomial.from_combined(idx), sp.S.Zero))
    for slot in range(3, 6):
        idx = [0] * 6
        idx[slot] = 1
        b.append(sp.I * operator.terms.get(DerivationMonomial.from_combined(idx), sp.S.Zero))
    c = operator.terms.get(op.IDENTITY_MONOMIAL, sp.S.Zero)

    xs = [symbol(f"x{i}") for i in (1, 2, 3)]
    ps = [symbol(f"p{i}") for i in (1, 2, 3)]

    def ok(expr) -> bool:
        return equal_numeric(ScalarExpr(expr), 0, trials, tol, seed).equal

    if not ok(c):
        return None
    for i in range(3):
        for j in range(i + 1, 3):
            if not ok(sp.diff(a[i], ps[j]) - sp.diff(a[j], ps[i])):
                return None
            if not ok(sp.diff(b[i], xs[j]) - sp.diff(b[j], xs[i])):
                return None
    for i in range(3):
        for j in range(3):
            if not ok(sp.diff(a[i], xs[j]) + sp.diff(b[j], ps[i])):
                return None

    s = sp.Symbol("_s", real=True, positive=True)
    pref = [sp.Float(v) for v in p_ref]
    sub = {x: s * x for x in xs}
    sub.update({p: pr + s * (p - pr) for p, pr in zip(ps, pref)})
    integrand = sp.S.Zero
    for i in range(3):
        integrand += xs[i] * (-b[i]).subs(sub, simultaneous=True)
        integrand += (ps[i] - pref[i]) * a[i].subs(sub, simultaneous=True)
    integrand = sp.expand(integrand)
    closed = None
    try:
        candidate = sp.integrate(integrand, (s, 0, 1))
        candidate = _generic_branch(candidate)
        if candidate is not None and not candidate.atoms(sp.Integral):
            closed = candidate
    except Exception:
        closed = None
    if closed is None:
        closed = sp.Integral(integrand, (s, 0, 1))
    return ScalarExpr(closed)


def _generic_branch(expr):
    """Return the everywhere-generic branch of a Piecewise result, if any."""
    if not expr.atoms(sp.Piecewise):
        return expr
    if isinstance(expr, sp.Piecewise):
        for value, cond in expr.args:
            if cond is sp.true:
                return value if not value.atoms(sp.Piecewise) else None
    return None


# -- negative controls ----------------------------------------------------------------


def mutate_generator_set(gen: GeneratorSet, which: str, strength: float = 0.1) -> GeneratorSet:
    """Corrupt one named generator family with a multiplicative bump chosen so
    that exactly the bracket relations involving that family fail.

    J, K, L get strength*(x1+x2+x3); the mutually-commuting translations need
    component-dependent bumps (identical shifts would cancel in their own
    brackets), so lam_r_i gets strength*x_{i+1}^2 cyclically.
    """
    rep = gen.representation
    xs = [symbol(f"x{i}") for i in (1, 2, 3)]
    bump = multiplicative(sp.Float(strength) * (xs[0] + xs[1] + xs[2]), rep)
    if which == "K":
        return gen.replace(boosts=tuple(k + bump for k in gen.boosts))
    if which == "J":
        return gen.replace(rotations=tuple(j + bump for j in gen.rotations))
    if which == "L":
        return gen.replace(liouvillian=gen.liouvillian + bump)
    if which == "lam_r":
        bumps = [
            multiplicative(sp.Float(strength) * xs[(i + 1) % 3] ** 2, rep)
            for i in range(3)
        ]
        return gen.replace(
            translations=tuple(t + b for t, b in zip(gen.translations, bumps))
        )
    raise ValueError(f"unknown generator family {which!r} (use K, J, L, lam_r)")
