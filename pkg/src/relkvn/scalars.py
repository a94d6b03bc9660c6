"""Symbolic complex-valued functions of phase-space variables.

Expressions are sympy trees over the canonical variables
``x1 x2 x3 v1 v2 v3 p1 p2 p3 t`` plus named real parameters, with the
operations ``+ - * / ^``, ``sqrt`` and the imaginary unit ``i``.  Units are
natural (c = 1).  Equality of expressions is decided by seeded random
numeric probing, never by rewriting; see :func:`equal_numeric`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import DomainError, ProbeExhausted, UnassignedVariable

VARIABLE_NAMES = ("x1", "x2", "x3", "v1", "v2", "v3", "p1", "p2", "p3", "t")

#: sampling ranges used by the probing machinery, in natural units
POSITION_RANGE = (-2.0, 2.0)
MOMENTUM_RANGE = (-2.0, 2.0)
TIME_RANGE = (-1.0, 1.0)
PARAM_RANGE = (0.5, 2.0)
DEFAULT_V_MAX = 0.9
#: squared-speed guard: samples with v1^2+v2^2+v3^2 above this are redrawn
#: so that gamma = (1 - v^2)^(-1/2) stays finite and well conditioned
V_SQUARED_MAX = 0.95
MAX_SAMPLE_ATTEMPTS = 64

_SYMBOLS: dict[str, sp.Symbol] = {}


def symbol(name: str) -> sp.Symbol:
    """Canonical real-valued sympy symbol for a variable or parameter name."""
    if name not in _SYMBOLS:
        _SYMBOLS[name] = sp.Symbol(name, real=True)
    return _SYMBOLS[name]


VARS = {name: symbol(name) for name in VARIABLE_NAMES}

_TEXT_OK = re.compile(r"^[\w\s+\-*/^().]*$")
_ALLOWED_NODES = (sp.Add, sp.Mul, sp.Pow)


class ScalarExpr:
    """A complex-valued function of phase-space variables and parameters.

    Thin immutable wrapper around a sympy expression; supports arithmetic,
    exact differentiation, pointwise evaluation, and structural conjugation.
    """

    __slots__ = ("sym",)

    def __init__(self, expr):
        if isinstance(expr, ScalarExpr):
            expr = expr.sym
        self.sym = sp.sympify(expr)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def var(name: str) -> "ScalarExpr":
        if name not in VARIABLE_NAMES:
            raise ValueError(f"unknown variable {name!r}; use param() for parameters")
        return ScalarExpr(symbol(name))

    @staticmethod
    def param(name: str) -> "ScalarExpr":
        if name in VARIABLE_NAMES:
            raise ValueError(f"{name!r} is a reserved variable name")
        return ScalarExpr(symbol(name))

    @staticmethod
    def number(value) -> "ScalarExpr":
        return ScalarExpr(sp.sympify(value))

    # -- algebra -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ScalarExpr):
            return other.sym
        return sp.sympify(other)

    def __add__(self, other):
        return ScalarExpr(self.sym + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarExpr(self.sym - self._coerce(other))

    def __rsub__(self, other):
        return ScalarExpr(self._coerce(other) - self.sym)

    def __mul__(self, other):
        return ScalarExpr(self.sym * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarExpr(self.sym / self._coerce(other))

    def __rtruediv__(self, other):
        return ScalarExpr(self._coerce(other) / self.sym)

    def __pow__(self, other):
        return ScalarExpr(self.sym ** self._coerce(other))

    def __neg__(self):
        return ScalarExpr(-self.sym)

    def __repr__(self):
        return f"ScalarExpr({self.sym})"

    def __str__(self):
        return str(self.sym)

    # -- queries -----------------------------------------------------------

    def free_names(self) -> frozenset[str]:
        return frozenset(s.name for s in self.sym.free_symbols)

    def is_structurally_zero(self) -> bool:
        return sp.expand(self.sym) == 0

    def conjugate(self) -> "ScalarExpr":
        """Structural complex conjugate: flips the sign of the imaginary unit.

        Valid for the package grammar (real variables/parameters, rational
        constants, sqrt of expressions that are positive on the sampling
        domain).
        """
        return ScalarExpr(self.sym.subs(sp.I, -sp.I))

    def diff(self, var: str) -> "ScalarExpr":
        if var not in VARIABLE_NAMES:
            raise ValueError(f"cannot differentiate with respect to {var!r}")
        return ScalarExpr(sp.diff(self.sym, symbol(var)))

    def subs(self, mapping: Mapping) -> "ScalarExpr":
        table = {symbol(k) if isinstance(k, str) else k: v for k, v in mapping.items()}
        return ScalarExpr(self.sym.subs(table, simultaneous=True))

    def eval(self, point) -> complex:
        return evaluate(self, point)


def sqrt(expr) -> ScalarExpr:
    return ScalarExpr(sp.sqrt(ScalarExpr(expr).sym))


def gamma_factor(kind: str = "v") -> ScalarExpr:
    """Lorentz factor (1 - v^2)^(-1/2) as a function of the velocity variables."""
    v2 = sum(symbol(f"{kind}{i}") ** 2 for i in (1, 2, 3))
    return ScalarExpr((1 - v2) ** sp.Rational(-1, 2))


def parse_scalar(text: str) -> ScalarExpr:
    """Parse infix expression text into a :class:`ScalarExpr`.

    Grammar: ``+ - * / ^``, function ``sqrt``, variables ``x1..x3 v1..v3
    p1..p3 t``, imaginary unit ``i``, bare identifiers as named parameters.
    Whitespace-insensitive.
    """
    if not isinstance(text, str) or not text.strip():
        raise ValueError("empty expression text")
    if not _TEXT_OK.match(text):
        raise ValueError(f"illegal characters in expression {text!r}")
    if "__" in text:
        raise ValueError("double underscore is not allowed in expressions")
    local = {"i": sp.I, "sqrt": sp.sqrt}
    local.update(VARS)
    try:
        expr = parse_expr(
            text,
            local_dict=local,
            transformations=standard_transformations + (convert_xor,),
        )
    except Exception as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc}") from None
    expr = sp.sympify(expr)
    # re-intern symbols with the real=True assumption
    expr = expr.subs({s: symbol(s.name) for s in expr.free_symbols})
    _validate_grammar(expr, text)
    return ScalarExpr(expr)


def _validate_grammar(expr, text: str) -> None:
    for node in sp.preorder_traversal(expr):
        if node.is_Atom:
            if not (node.is_Symbol or node.is_Number or node is sp.I):
                raise ValueError(f"unsupported atom {node} in {text!r}")
        elif isinstance(node, sp.Pow):
            e = node.exp
            if not (e.is_Integer or (e.is_Rational and e.q == 2)):
                raise ValueError(f"unsupported exponent {e} in {text!r}")
        elif not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"unsupported operation {type(node).__name__} in {text!r}")


# -- evaluation --------------------------------------------------------------

_LAMBDIFY_CACHE: dict[tuple, object] = {}


def _compiled(expr: sp.Expr, names: tuple[str, ...]):
    key = (sp.srepr(expr), names)
    fn = _LAMBDIFY_CACHE.get(key)
    if fn is None:
        fn = sp.lambdify([symbol(n) for n in names], expr, modules="numpy")
        _LAMBDIFY_CACHE[key] = fn
    return fn


def _eval_sym(expr: sp.Expr, point: Mapping[str, float]) -> complex:
    names = tuple(sorted(s.name for s in expr.free_symbols))
    missing = [n for n in names if n not in point]
    if missing:
        raise UnassignedVariable(f"point does not assign {missing}")
    if expr.atoms(sp.Integral):
        # quadrature-defined expressions (see generators.poisson_correspondence)
        val = expr.subs({symbol(n): sp.Float(point[n]) for n in names}).evalf()
        val = complex(val)
    else:
        fn = _compiled(expr, names)
        try:
            with np.errstate(all="ignore"):
                val = fn(*[float(point[n]) for n in names])
            val = complex(val)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise DomainError(f"expression {expr} is singular at {dict(point)}: {exc}")
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise DomainError(f"expression {expr} is singular at {dict(point)}")
    return val


def evaluate(expr, point) -> complex:
    """Evaluate an expression at a point; raises on missing or singular input."""
    e = ScalarExpr(expr).sym
    values = point.values if isinstance(point, SamplePoint) else point
    return _eval_sym(e, values)


def diff(expr, var: str) -> ScalarExpr:
    """Exact symbolic partial derivative with respect to a declared variable."""
    return ScalarExpr(expr).diff(var)


# -- probing -----------------------------------------------------------------


@dataclass(frozen=True)
class SamplePoint:
    """An assignment of real values to variables and parameters."""

    values: Mapping[str, float]

    def within_domain(self, v_max: float = DEFAULT_V_MAX) -> bool:
        vs = [self.values.get(f"v{i}", 0.0) for i in (1, 2, 3)]
        return all(abs(v) <= v_max for v in vs)


def _rng(seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0x7FFFFFFF, *counters])


def _range_for(name: str) -> tuple[float, float]:
    if name.startswith("x"):
        return POSITION_RANGE
    if name.startswith("p") and name in VARIABLE_NAMES:
        return MOMENTUM_RANGE
    if name == "t":
        return TIME_RANGE
    return PARAM_RANGE


def sample_point(
    names: Iterable[str],
    seed: int,
    index: int,
    *,
    v_max: float = DEFAULT_V_MAX,
    pins: Mapping[str, float] | None = None,
    attempt: int = 0,
) -> SamplePoint:
    """Draw one probe point.

    The per-point stream is derived from ``(seed, index, attempt)`` by
    counter, so trials are reproducible and independent of execution order.
    Velocity components are drawn componentwise in [-v_max, v_max] and the
    squared speed is kept below :data:`V_SQUARED_MAX` by redrawing.
    """
    pins = dict(pins or {})
    names = sorted(set(names))
    v_names = [n for n in names if n in ("v1", "v2", "v3") and n not in pins]
    for retry in range(MAX_SAMPLE_ATTEMPTS):
        gen = _rng(seed, index, attempt, retry)
        values: dict[str, float] = {}
        for name in names:
            if name in pins:
                values[name] = float(pins[name])
            elif name in ("v1", "v2", "v3"):
                values[name] = float(gen.uniform(-v_max, v_max))
            else:
                lo, hi = _range_for(name)
                values[name] = float(gen.uniform(lo, hi))
        v2 = sum(values.get(n, 0.0) ** 2 for n in ("v1", "v2", "v3"))
        if v_names and v2 > V_SQUARED_MAX:
            continue
        return SamplePoint(values)
    raise ProbeExhausted(
        f"could not draw a point with v^2 <= {V_SQUARED_MAX} after "
        f"{MAX_SAMPLE_ATTEMPTS} attempts"
    )


@dataclass(frozen=True)
class ProbeReport:
    """Result of a randomized numeric-equality probe."""

    equal: bool
    max_residual: float
    worst_point: tuple[tuple[str, float], ...]
    trials: int
    tol: float

    def __str__(self):
        verdict = "equal" if self.equal else "NOT equal"
        return (
            f"{verdict} (max residual {self.max_residual:.3e} over "
            f"{self.trials} points, tol {self.tol:.1e})"
        )


def probe_max_residual(
    expr,
    trials: int,
    seed: int,
    *,
    pins: Mapping[str, float] | None = None,
    v_max: float = DEFAULT_V_MAX,
) -> tuple[float, tuple[tuple[str, float], ...]]:
    """Max |expr| over seeded sample points, with domain-error resampling."""
    e = ScalarExpr(expr).sym
    names = sorted(s.name for s in e.free_symbols)
    worst = 0.0
    worst_point: tuple[tuple[str, float], ...] = ()
    for k in range(trials):
        value = None
        for attempt in range(MAX_SAMPLE_ATTEMPTS):
            point = sample_point(names, seed, k, v_max=v_max, pins=pins, attempt=attempt)
            try:
                value = _eval_sym(e, point.values)
                break
            except DomainError:
                continue
        if value is None:
            raise ProbeExhausted(
                f"no well-defined sample for {e} after {MAX_SAMPLE_ATTEMPTS} retries"
            )
        r = abs(value)
        if r > worst:
            worst = r
            worst_point = tuple(sorted(point.values.items()))
        if not names:
            break  # constant expression: one evaluation decides
    return worst, worst_point


def equal_numeric(
    a,
    b,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    *,
    pins: Mapping[str, float] | None = None,
    v_max: float = DEFAULT_V_MAX,
) -> ProbeReport:
    """Seeded random-probe equality: true iff |a-b| <= tol at every point."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = ScalarExpr(a).sym - ScalarExpr(b).sym
    worst, worst_point = probe_max_residual(d, trials, seed, pins=pins, v_max=v_max)
    return ProbeReport(
        equal=bool(worst <= tol),
        max_residual=float(worst),
        worst_point=worst_point,
        trials=trials,
        tol=tol,
    )
