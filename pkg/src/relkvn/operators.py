"""Normal-ordered algebra of phase-space differential operators.

An operator is a finite sum of terms ``coefficient * derivation monomial``
with all multiplicative coefficients to the left of all derivations.  The
translation generators are realized as -i times the corresponding partial
derivative, which satisfies the postulated canonical commutators; every
verification statement is phrased through commutators so the encoding is
not observable.

Two representations exist and never mix: ``velocity`` operators act on
functions of (x1..x3, v1..v3), ``momentum`` operators on (x1..x3, p1..p3).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping

import sympy as sp

from .errors import OrderCapExceeded, ProbeExhausted, RepresentationMismatch
from .scalars import (
    ScalarExpr,
    ProbeReport,
    probe_max_residual,
    symbol,
)

VELOCITY = "velocity"
MOMENTUM = "momentum"
REPRESENTATIONS = (VELOCITY, MOMENTUM)

#: kinetic coordinate names per representation (second derivation block)
KINETIC_VARS = {VELOCITY: ("v1", "v2", "v3"), MOMENTUM: ("p1", "p2", "p3")}
POSITION_VARS = ("x1", "x2", "x3")

DEFAULT_ORDER_CAP = 6


@dataclass(frozen=True, order=True)
class DerivationMonomial:
    """Multi-index over (dx1,dx2,dx3) and (dq1,dq2,dq3); q is v or p."""

    dx: tuple[int, int, int]
    dq: tuple[int, int, int]

    def __post_init__(self):
        if len(self.dx) != 3 or len(self.dq) != 3:
            raise ValueError("multi-indices have three entries each")
        if any(k < 0 for k in self.dx + self.dq):
            raise ValueError("multi-index entries are nonnegative integers")

    @property
    def order(self) -> int:
        return sum(self.dx) + sum(self.dq)

    def combined(self) -> tuple[int, ...]:
        return self.dx + self.dq

    @staticmethod
    def from_combined(idx: Iterable[int]) -> "DerivationMonomial":
        idx = tuple(idx)
        return DerivationMonomial(idx[:3], idx[3:])

    def text(self, rep: str) -> str:
        if self.order == 0:
            return "1"
        parts = []
        names = POSITION_VARS + KINETIC_VARS[rep]
        for name, k in zip(names, self.combined()):
            if k == 1:
                parts.append(f"d{name}")
            elif k > 1:
                parts.append(f"d{name}^{k}")
        return "*".join(parts)


IDENTITY_MONOMIAL = DerivationMonomial((0, 0, 0), (0, 0, 0))


def _deriv_symbols(rep: str) -> tuple[sp.Symbol, ...]:
    return tuple(symbol(n) for n in POSITION_VARS + KINETIC_VARS[rep])


def _coeff_diff(coeff: sp.Expr, idx: tuple[int, ...], rep: str) -> sp.Expr:
    out = coeff
    for s, k in zip(_deriv_symbols(rep), idx):
        if k:
            out = sp.diff(out, s, k)
    return out


def _sub_multi_indices(idx: tuple[int, ...]):
    """All multi-indices g <= idx componentwise, with multinomial weights."""
    ranges = [range(k + 1) for k in idx]
    for g in itertools.product(*ranges):
        weight = 1
        for a, b in zip(idx, g):
            weight *= comb(a, b)
        yield g, weight


def _check_rep(rep: str) -> str:
    if rep not in REPRESENTATIONS:
        raise ValueError(f"unknown representation {rep!r}")
    return rep


def _check_coeff_vars(coeff: sp.Expr, rep: str) -> None:
    banned = KINETIC_VARS[MOMENTUM if rep == VELOCITY else VELOCITY]
    bad = {s.name for s in coeff.free_symbols} & set(banned)
    if bad:
        raise RepresentationMismatch(
            f"{rep} coefficients cannot reference {sorted(bad)}"
        )


class OperatorExpr:
    """Immutable normal-ordered sum of (coefficient, derivation monomial)."""

    __slots__ = ("representation", "terms")

    def __init__(self, representation: str, terms: Mapping[DerivationMonomial, sp.Expr]):
        _check_rep(representation)
        merged: dict[DerivationMonomial, sp.Expr] = {}
        for mono, coeff in terms.items():
            c = sp.expand(sp.sympify(coeff))
            if c == 0:
                continue
            _check_coeff_vars(c, representation)
            if mono in merged:
                c = sp.expand(merged[mono] + c)
                if c == 0:
                    del merged[mono]
                    continue
            merged[mono] = c
        object.__setattr__(self, "representation", representation)
        object.__setattr__(self, "terms", dict(sorted(merged.items())))

    def __setattr__(self, *_):
        raise AttributeError("OperatorExpr is immutable")

    # -- basic queries -------------------------------------------------------

    @property
    def max_order(self) -> int:
        return max((m.order for m in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_multiplicative(self) -> bool:
        return all(m.order == 0 for m in self.terms)

    def coefficient(self, mono: DerivationMonomial) -> ScalarExpr:
        return ScalarExpr(self.terms.get(mono, sp.S.Zero))

    def scalar_part(self) -> ScalarExpr:
        """Coefficient of the empty monomial (the multiplicative part)."""
        return self.coefficient(IDENTITY_MONOMIAL)

    def subs(self, mapping: Mapping) -> "OperatorExpr":
        table = {symbol(k) if isinstance(k, str) else k: v for k, v in mapping.items()}
        return OperatorExpr(
            self.representation,
            {m: c.subs(table, simultaneous=True) for m, c in self.terms.items()},
        )

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in self.terms.items():
            cs = f"({coeff})"
            parts.append(cs if mono.order == 0 else f"{cs}*{mono.text(self.representation)}")
        return " + ".join(parts)

    def __repr__(self):
        return f"OperatorExpr[{self.representation}]({self.text()})"

    # -- linear structure ------------------------------------------------------

    def _require_same_rep(self, other: "OperatorExpr") -> None:
        if self.representation != other.representation:
            raise RepresentationMismatch(
                f"{self.representation} vs {other.representation}"
            )

    def __add__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        self._require_same_rep(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, sp.S.Zero) + c
        return OperatorExpr(self.representation, out)

    def __sub__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return OperatorExpr(self.representation, {m: -c for m, c in self.terms.items()})

    def scale(self, factor) -> "OperatorExpr":
        f = factor.sym if isinstance(factor, ScalarExpr) else sp.sympify(factor)
        return OperatorExpr(self.representation, {m: f * c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        # other is never an OperatorExpr here
        return self.scale(other)


# -- atom constructors --------------------------------------------------------


def zero(rep: str = VELOCITY) -> OperatorExpr:
    return OperatorExpr(rep, {})


def identity(rep: str = VELOCITY) -> OperatorExpr:
    return OperatorExpr(rep, {IDENTITY_MONOMIAL: sp.S.One})


def multiplicative(f, rep: str = VELOCITY) -> OperatorExpr:
    """The operator that multiplies by the scalar function f."""
    f = f.sym if isinstance(f, ScalarExpr) else sp.sympify(f)
    return OperatorExpr(rep, {IDENTITY_MONOMIAL: f})


def position(i: int, rep: str = VELOCITY) -> OperatorExpr:
    return multiplicative(symbol(f"x{i}"), rep)


def velocity(i: int) -> OperatorExpr:
    return multiplicative(symbol(f"v{i}"), VELOCITY)


def momentum(i: int) -> OperatorExpr:
    return multiplicative(symbol(f"p{i}"), MOMENTUM)


def _deriv(rep: str, slot: int) -> OperatorExpr:
    idx = [0] * 6
    idx[slot] = 1
    mono = DerivationMonomial.from_combined(idx)
    return OperatorExpr(rep, {mono: -sp.I})


def lam_x(i: int, rep: str = VELOCITY) -> OperatorExpr:
    """Space-translation generator -i d/dx_i (the primed one in momentum rep)."""
    return _deriv(rep, i - 1)


def lam_v(i: int) -> OperatorExpr:
    return _deriv(VELOCITY, 3 + i - 1)


def lam_p(i: int) -> OperatorExpr:
    return _deriv(MOMENTUM, 3 + i - 1)


# -- products ------------------------------------------------------------------


def compose(a: OperatorExpr, b: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    """Normal-ordered product a*b via the Leibniz rule."""
    a._require_same_rep(b)
    cap = DEFAULT_ORDER_CAP if cap is None else cap
    rep = a.representation
    out: dict[DerivationMonomial, sp.Expr] = {}
    for m1, c1 in a.terms.items():
        i1 = m1.combined()
        for m2, c2 in b.terms.items():
            i2 = m2.combined()
            # c1 * d^{i1} (c2 * d^{i2} psi): Leibniz over d^{i1}
            for g, w in _sub_multi_indices(i1):
                passed = tuple(x - y for x, y in zip(i1, g))
                dc2 = _coeff_diff(c2, g, rep)
                if dc2 == 0:
                    continue
                mono = DerivationMonomial.from_combined(
                    tuple(x + y for x, y in zip(passed, i2))
                )
                if mono.order > cap:
                    raise OrderCapExceeded(
                        f"product order {mono.order} exceeds cap {cap}"
                    )
                out[mono] = out.get(mono, sp.S.Zero) + w * c1 * dc2
    return OperatorExpr(rep, out)


def commutator(a: OperatorExpr, b: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    return compose(a, b, cap) - compose(b, a, cap)


def symmetrize(a: OperatorExpr, b: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    """Weyl-symmetrized product (a b + b a)/2."""
    return (compose(a, b, cap) + compose(b, a, cap)).scale(sp.Rational(1, 2))


def adjoint(a: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    """Formal adjoint for the flat measure dr dq.

    Coefficients are conjugated and derivations are moved back to normal
    order by integration by parts: (f d^m)^+ = (-1)^|m| d^m conj(f).
    """
    cap = DEFAULT_ORDER_CAP if cap is None else cap
    rep = a.representation
    out: dict[DerivationMonomial, sp.Expr] = {}
    for m, c in a.terms.items():
        if m.order > cap:
            raise OrderCapExceeded(f"operator order {m.order} exceeds cap {cap}")
        cbar = c.subs(sp.I, -sp.I)
        sign = sp.Integer(-1) ** m.order
        for g, w in _sub_multi_indices(m.combined()):
            rest = tuple(x - y for x, y in zip(m.combined(), g))
            dcoeff = _coeff_diff(cbar, rest, rep)
            if dcoeff == 0:
                continue
            mono = DerivationMonomial.from_combined(g)
            out[mono] = out.get(mono, sp.S.Zero) + sign * w * dcoeff
    return OperatorExpr(rep, out)


# -- numeric comparison ---------------------------------------------------------


@dataclass(frozen=True)
class OpEqualReport:
    """Monomial-by-monomial probe comparison of two operators."""

    equal: bool
    max_residual: float
    worst_monomial: str
    worst_point: tuple[tuple[str, float], ...]
    trials: int
    tol: float
    per_monomial: tuple[tuple[str, float], ...]

    def __str__(self):
        verdict = "equal" if self.equal else "NOT equal"
        return (
            f"{verdict} (max residual {self.max_residual:.3e} on monomial "
            f"{self.worst_monomial}, {self.trials} points, tol {self.tol:.1e})"
        )


def op_equal(
    a: OperatorExpr,
    b: OperatorExpr,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    *,
    pins: Mapping[str, float] | None = None,
) -> OpEqualReport:
    """Probe the coefficients of a-b monomial by monomial."""
    a._require_same_rep(b)
    d = a - b
    residuals = []
    worst = (0.0, "1", ())
    for mono, coeff in d.terms.items():
        r, point = probe_max_residual(coeff, trials, seed, pins=pins)
        label = mono.text(a.representation)
        residuals.append((label, float(r)))
        if r >= worst[0]:
            worst = (float(r), label, point)
    return OpEqualReport(
        equal=bool(worst[0] <= tol),
        max_residual=worst[0],
        worst_monomial=worst[1],
        worst_point=worst[2],
        trials=trials,
        tol=tol,
        per_monomial=tuple(residuals),
    )


def is_hermitian(
    a: OperatorExpr,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    *,
    pins: Mapping[str, float] | None = None,
) -> bool:
    return op_equal(a, adjoint(a), trials, tol, seed, pins=pins).equal


# -- random operators for property testing --------------------------------------


def random_first_order(rep: str, seed: int, max_degree: int = 2) -> OperatorExpr:
    """Seeded random operator of derivation order <= 1 with small polynomial
    coefficients; used by the Jacobi/associativity property checks."""
    import numpy as np

    gen = np.random.default_rng([seed & 0x7FFFFFFF, 0x0A17])
    names = POSITION_VARS + KINETIC_VARS[rep]
    monos = [IDENTITY_MONOMIAL] + [
        DerivationMonomial.from_combined(tuple(int(i == k) for i in range(6)))
        for k in range(6)
    ]
    terms: dict[DerivationMonomial, sp.Expr] = {}
    for mono in monos:
        if gen.random() < 0.4:
            continue
        coeff = sp.Integer(gen.integers(-3, 4))
        for _ in range(int(gen.integers(0, max_degree + 1))):
            coeff = coeff * symbol(str(gen.choice(names)))
        if gen.random() < 0.5:
            coeff = coeff * sp.I
        terms[mono] = terms.get(mono, sp.S.Zero) + coeff
    out = OperatorExpr(rep, terms)
    if out.is_zero:
        return identity(rep)
    return out


# -- operator text parser --------------------------------------------------------

_OPERATOR_ATOMS = {
    **{f"X{i}": ("position", i) for i in (1, 2, 3)},
    **{f"V{i}": ("velocity", i) for i in (1, 2, 3)},
    **{f"P{i}": ("momentum", i) for i in (1, 2, 3)},
    **{f"Lx{i}": ("lam_x", i) for i in (1, 2, 3)},
    **{f"Lv{i}": ("lam_v", i) for i in (1, 2, 3)},
    **{f"Lp{i}": ("lam_p", i) for i in (1, 2, 3)},
    **{f"Lxp{i}": ("lam_xp", i) for i in (1, 2, 3)},
}

_VEL_ONLY = {"velocity", "lam_v"}
_MOM_ONLY = {"momentum", "lam_p", "lam_xp"}


def parse_operator(text: str, rep: str | None = None) -> OperatorExpr:
    """Parse operator text: atoms ``X1..X3 V1.. P1.. Lx1.. Lv1.. Lp1.. Lxp1..``,
    composition ``*``, symmetrization ``S(A,B)``, commutator ``comm(A,B)``;
    scalar factors follow the expression grammar."""
    from sympy.parsing.sympy_parser import (
        convert_xor,
        parse_expr,
        standard_transformations,
    )

    kinds = {
        kind
        for name, (kind, _) in _OPERATOR_ATOMS.items()
        if name in set(_tokenize_names(text))
    }
    if kinds & _VEL_ONLY and kinds & _MOM_ONLY:
        raise RepresentationMismatch(f"mixed-representation operator text {text!r}")
    inferred = VELOCITY if kinds & _VEL_ONLY else MOMENTUM if kinds & _MOM_ONLY else None
    rep = rep or inferred or VELOCITY
    if inferred and rep != inferred:
        raise RepresentationMismatch(f"text {text!r} is {inferred}-representation")

    local = {
        name: sp.Symbol(name, commutative=False) for name in _OPERATOR_ATOMS
    }
    local["S"] = sp.Function("S")
    local["comm"] = sp.Function("comm")
    local["i"] = sp.I
    local["sqrt"] = sp.sqrt
    tree = parse_expr(
        text,
        local_dict=local,
        transformations=standard_transformations + (convert_xor,),
        evaluate=True,
    )
    return _convert_tree(tree, rep)


def _tokenize_names(text: str):
    import re

    return re.findall(r"[A-Za-z_]\w*", text)


def _atom_operator(name: str, rep: str) -> OperatorExpr:
    kind, i = _OPERATOR_ATOMS[name]
    if kind == "position":
        return position(i, rep)
    if kind == "velocity":
        return velocity(i)
    if kind == "momentum":
        return momentum(i)
    if kind == "lam_x":
        return lam_x(i, rep)
    if kind == "lam_v":
        return lam_v(i)
    if kind in ("lam_p", "lam_xp"):
        # in the momentum representation the primed translation generator is
        # realized as -i d/dx; the unprimed/primed distinction only matters
        # when relating representations
        return lam_p(i) if kind == "lam_p" else lam_x(i, MOMENTUM)
    raise ValueError(name)


def _convert_tree(node, rep: str) -> OperatorExpr:
    if isinstance(node, sp.Add):
        out = zero(rep)
        for arg in node.args:
            out = out + _convert_tree(arg, rep)
        return out
    if isinstance(node, sp.Mul):
        scalar = sp.S.One
        ops: list[OperatorExpr] = []
        for arg in node.args:
            if arg.is_commutative:
                scalar *= arg
            else:
                ops.append(_convert_tree(arg, rep))
        out = multiplicative(scalar, rep)
        for op in ops:
            out = compose(out, op)
        return out
    if isinstance(node, sp.Pow):
        base, exp = node.args
        if base.is_commutative:
            return multiplicative(node, rep)
        if not (exp.is_Integer and exp > 0):
            raise ValueError(f"operator powers must be positive integers: {node}")
        out = _convert_tree(base, rep)
        for _ in range(int(exp) - 1):
            out = compose(out, _convert_tree(base, rep))
        return out
    if isinstance(node, sp.Function):
        name = node.func.__name__
        if name == "S":
            a, b = (_convert_tree(arg, rep) for arg in node.args)
            return symmetrize(a, b)
        if name == "comm":
            a, b = (_convert_tree(arg, rep) for arg in node.args)
            return commutator(a, b)
        return multiplicative(node, rep)
    if isinstance(node, sp.Symbol):
        if not node.is_commutative:
            return _atom_operator(node.name, rep)
        return multiplicative(symbol(node.name), rep)
    if node.is_Number or node is sp.I:
        return multiplicative(node, rep)
    raise ValueError(f"cannot interpret operator text node {node!r}")
