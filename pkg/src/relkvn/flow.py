"""Numerical phase-space dynamics: characteristic flows, half-density
transport of KvN wavefunctions, finite boosts on states, densities and
expectation values.

The transport scheme is semi-Lagrangian: each grid node is pulled back
along the time-reversed characteristic flow (RK4, fixed substeps) and the
amplitude is interpolated there (cubic, zero outside the grid).  In the
velocity representation the flow is compressible, so unitarity requires
the half-density factor exp(-1/2 int div f); the divergence is compiled
symbolically and accumulated along each characteristic.  Hamiltonian flows
in the momentum representation are divergence-free and carry factor 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.ndimage import map_coordinates

from .errors import NonFiniteState, RepresentationMismatch, SpeedLimitBreached
from .generators import ForceFieldSym
from .operators import MOMENTUM, VELOCITY, OperatorExpr
from .scalars import symbol

_X = [symbol(f"x{i}") for i in (1, 2, 3)]
_V = [symbol(f"v{i}") for i in (1, 2, 3)]
_P = [symbol(f"p{i}") for i in (1, 2, 3)]


# -- grids and states -----------------------------------------------------------


@dataclass(frozen=True)
class AxisSpec:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 4 or self.hi <= self.lo:
            raise ValueError("axis needs hi > lo and at least 4 points")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid over (r_1..r_d, q_1..q_d); q is velocity or momentum."""

    representation: str
    raxes: tuple[AxisSpec, ...]
    qaxes: tuple[AxisSpec, ...]

    def __post_init__(self):
        if self.representation not in (VELOCITY, MOMENTUM):
            raise ValueError(f"bad representation {self.representation!r}")
        if not 1 <= len(self.raxes) <= 3 or len(self.raxes) != len(self.qaxes):
            raise ValueError("need matching r and q axis lists of length 1..3")
        if self.representation == VELOCITY:
            for ax in self.qaxes:
                if ax.lo <= -1.0 or ax.hi >= 1.0:
                    raise ValueError("velocity axes must lie inside (-1, 1)")

    @property
    def dims(self) -> int:
        return len(self.raxes)

    @property
    def axes(self) -> tuple[AxisSpec, ...]:
        return self.raxes + self.qaxes

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def cell_volume(self) -> float:
        out = 1.0
        for ax in self.axes:
            out *= ax.step
        return out

    def axis_names(self) -> tuple[str, ...]:
        q = "v" if self.representation == VELOCITY else "p"
        return tuple(f"r{i+1}" for i in range(self.dims)) + tuple(
            f"{q}{i+1}" for i in range(self.dims)
        )

    def meshes(self) -> list[np.ndarray]:
        return list(np.meshgrid(*[ax.nodes() for ax in self.axes], indexing="ij"))


@dataclass
class PhaseSpaceState:
    """Complex amplitude over a phase-space grid at one time stamp."""

    grid: PhaseGrid
    psi: np.ndarray
    time: float = 0.0
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)
        if self.psi.shape != self.grid.shape:
            raise ValueError(f"psi shape {self.psi.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.psi.view(np.float64))):
            raise NonFiniteState("state amplitudes contain NaN/Inf")

    @property
    def representation(self) -> str:
        return self.grid.representation

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.cell_volume)

    def copy(self) -> "PhaseSpaceState":
        return PhaseSpaceState(self.grid, self.psi.copy(), self.time, dict(self.meta))


def gaussian_state(
    grid: PhaseGrid,
    center_r: Sequence[float],
    center_q: Sequence[float],
    width_r: Sequence[float],
    width_q: Sequence[float],
    time: float = 0.0,
) -> PhaseSpaceState:
    """Normalized product Gaussian |psi|^2 with the given centers/widths."""
    d = grid.dims
    meshes = grid.meshes()
    logrho = np.zeros(grid.shape)
    for k in range(d):
        logrho -= (meshes[k] - center_r[k]) ** 2 / (2.0 * width_r[k] ** 2)
        logrho -= (meshes[d + k] - center_q[k]) ** 2 / (2.0 * width_q[k] ** 2)
    psi = np.exp(0.5 * logrho).astype(np.complex128)
    state = PhaseSpaceState(grid, psi, time)
    n = state.norm_squared()
    if n <= 0:
        raise ValueError("degenerate Gaussian: zero norm on this grid")
    state.psi /= math.sqrt(n)
    return state


def born_density(state: PhaseSpaceState) -> np.ndarray:
    """Probability density |<r,q|psi>|^2 on the grid."""
    return np.abs(state.psi) ** 2


def density_centroid(state: PhaseSpaceState) -> np.ndarray:
    rho = born_density(state)
    total = rho.sum()
    if total <= 0:
        raise NonFiniteState("zero-density state has no centroid")
    meshes = state.grid.meshes()
    return np.array([float((rho * m).sum() / total) for m in meshes])


# -- numeric force fields ----------------------------------------------------------


def _to_callable(expr: sp.Expr, syms, d: int) -> Callable:
    """Compile expr(x1..x3) to a broadcasting function of d arrays."""
    fn = sp.lambdify(syms, expr, modules="numpy")

    def call(*arrays):
        full = list(arrays) + [0.0] * (3 - d)
        out = fn(*full)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*arrays).shape).copy() \
            if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    return call


@dataclass(frozen=True)
class ForceFieldNum:
    """Evaluators compiled from a symbolic field for d-dimensional grids."""

    dims: int
    electric: tuple[Callable, ...]
    magnetic: tuple[Callable, ...]
    vector_potential: tuple[Callable, ...]
    grad_potential: tuple[tuple[Callable, ...], ...]  # dA_j/dx_i as [i][j]
    has_magnetic: bool
    symbolic: ForceFieldSym


def compile_field(
    field: ForceFieldSym, dims: int, params: dict[str, float] | None = None
) -> ForceFieldNum:
    field = field.subs_params(params or {})
    leftovers = set()
    for e in (field.phi, *field.vector_potential):
        leftovers |= {n for n in e.free_names() if not n.startswith("x")}
    if leftovers:
        raise ValueError(f"unbound field parameters: {sorted(leftovers)}")
    suppressed = {f"x{k}" for k in range(dims + 1, 4)}
    for e in (field.phi, *field.vector_potential):
        bad = e.free_names() & suppressed
        if bad:
            raise ValueError(
                f"field references {sorted(bad)} beyond the state's {dims} dimension(s)"
            )
    for k in range(dims, 3):
        if not field.vector_potential[k].is_structurally_zero():
            raise ValueError(
                f"vector-potential component {k + 1} must vanish for {dims}-dimensional states"
            )
    xsyms = _X
    E = [_to_callable(e.sym, xsyms, dims) for e in field.electric()]
    B_expr = [b.sym for b in field.magnetic()]
    has_B = any(sp.expand(b) != 0 for b in B_expr)
    if has_B and dims < 3:
        raise ValueError("magnetic fields require three spatial dimensions")
    B = [_to_callable(b, xsyms, dims) for b in B_expr]
    A = [_to_callable(a.sym, xsyms, dims) for a in field.vector_potential]
    gradA = tuple(
        tuple(
            _to_callable(sp.diff(field.vector_potential[j].sym, xsyms[i]), xsyms, dims)
            for j in range(3)
        )
        for i in range(3)
    )
    return ForceFieldNum(
        dims=dims,
        electric=tuple(E),
        magnetic=tuple(B),
        vector_potential=tuple(A),
        grad_potential=gradA,
        has_magnetic=has_B,
        symbolic=field,
    )


def _lorentz_force(field: ForceFieldNum, r: list[np.ndarray], v: list[np.ndarray]):
    d = field.dims
    E = [field.electric[k](*r) for k in range(d)]
    if not field.has_magnetic:
        return E
    B = [field.magnetic[k](*r) for k in range(3)]
    F = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        F.append(E[k] + v[i] * B[j] - v[j] * B[i])
    return F


def velocity_flow(m0: float, field: ForceFieldNum):
    """dr/dt = v, dv/dt = (1/m0) sqrt(1-v^2) (F - (v.F) v), plus the
    velocity-divergence of the v-part for the half-density factor."""
    d = field.dims
    # velocity-divergence of the acceleration field, exact and compiled once;
    # suppressed components are pinned to zero after differentiation
    fsym = field.symbolic.lorentz_force()
    vdotf = sum(_V[k] * fsym[k].sym for k in range(3))
    ginv = sp.sqrt(1 - sum(w**2 for w in _V))
    div_expr = sp.S.Zero
    for k in range(d):
        gk = ginv * (fsym[k].sym - vdotf * _V[k]) / m0
        div_expr += sp.diff(gk, _V[k])
    pinned = {_V[k]: 0 for k in range(d, 3)}
    pinned.update({_X[k]: 0 for k in range(d, 3)})
    div_expr = div_expr.subs(pinned, simultaneous=True)
    div_fn = sp.lambdify(_X[:d] + _V[:d], div_expr, modules="numpy")

    def rhs(r: list[np.ndarray], v: list[np.ndarray]):
        v2 = sum(w * w for w in v)
        bad = v2 >= 1.0
        if np.any(bad):
            raise SpeedLimitBreached("characteristic reached |v| >= 1")
        F = _lorentz_force(field, r, v)
        vdotF = sum(v[k] * F[k] for k in range(d))
        g = np.sqrt(1.0 - v2) / m0
        dr = [np.array(w, dtype=float, copy=True) for w in v]
        dv = [g * (F[k] - vdotF * v[k]) for k in range(d)]
        return dr, dv

    def div(r: list[np.ndarray], v: list[np.ndarray]):
        out = div_fn(*r, *v)
        return np.broadcast_to(np.asarray(out, dtype=float), r[0].shape).copy() \
            if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    return rhs, div


def momentum_flow(m0: float, field: ForceFieldNum):
    """Hamiltonian flow of H = sqrt((p-A)^2 + m0^2) + phi; divergence-free."""
    d = field.dims

    def rhs(r: list[np.ndarray], p: list[np.ndarray]):
        A = [field.vector_potential[k](*r) for k in range(d)]
        pi = [p[k] - A[k] for k in range(d)]
        H = np.sqrt(sum(w * w for w in pi) + m0 * m0)
        V = [w / H for w in pi]
        E = [field.electric[k](*r) for k in range(d)]
        dp = []
        for i in range(d):
            # pdot_i = sum_j V_j dA_j/dx_i + E_i
            acc = E[i]
            for j in range(d):
                acc = acc + V[j] * field.grad_potential[i][j](*r)
            dp.append(acc)
        return V, dp

    return rhs, None


def boost_flow(axis: int, dims: int):
    """Rapidity flow applied to states by e^{-i s K_axis}: the |psi|^2 peak
    follows the velocity-addition law with v = tanh(s)."""
    a = axis - 1
    if not 0 <= a < dims:
        raise ValueError(f"boost axis {axis} outside the state's {dims} dimension(s)")

    def rhs(r: list[np.ndarray], v: list[np.ndarray]):
        dr = [r[a] * v[j] for j in range(dims)]
        dv = [-((1.0 if j == a else 0.0) - v[a] * v[j]) for j in range(dims)]
        return dr, dv

    def div(r: list[np.ndarray], v: list[np.ndarray]):
        return (2.0 + dims) * v[a]

    return rhs, div


# -- characteristic integration -----------------------------------------------------


def _rk4_backtrace(
    rhs,
    div,
    r: list[np.ndarray],
    q: list[np.ndarray],
    span: float,
    dt: float,
):
    """Integrate d(xi)/dsigma = -f(xi) over [0, span] with the divergence of f
    accumulated along the path; returns (r, q, integral of div)."""
    r = [np.array(w, dtype=float, copy=True) for w in r]
    q = [np.array(w, dtype=float, copy=True) for w in q]
    acc = np.zeros_like(r[0])
    remaining = span
    while remaining > 1e-15:
        h = min(dt, remaining)

        def f(rr, qq):
            dr, dq = rhs(rr, qq)
            neg_dr = [-w for w in dr]
            neg_dq = [-w for w in dq]
            da = div(rr, qq) if div is not None else 0.0
            return neg_dr, neg_dq, da

        k1r, k1q, k1a = f(r, q)
        r2 = [w + 0.5 * h * dw for w, dw in zip(r, k1r)]
        q2 = [w + 0.5 * h * dw for w, dw in zip(q, k1q)]
        k2r, k2q, k2a = f(r2, q2)
        r3 = [w + 0.5 * h * dw for w, dw in zip(r, k2r)]
        q3 = [w + 0.5 * h * dw for w, dw in zip(q, k2q)]
        k3r, k3q, k3a = f(r3, q3)
        r4 = [w + h * dw for w, dw in zip(r, k3r)]
        q4 = [w + h * dw for w, dw in zip(q, k3q)]
        k4r, k4q, k4a = f(r4, q4)
        r = [
            w + (h / 6.0) * (a + 2 * b + 2 * c + e)
            for w, a, b, c, e in zip(r, k1r, k2r, k3r, k4r)
        ]
        q = [
            w + (h / 6.0) * (a + 2 * b + 2 * c + e)
            for w, a, b, c, e in zip(q, k1q, k2q, k3q, k4q)
        ]
        if div is not None:
            acc = acc + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        remaining -= h
    return r, q, acc


def _interpolate(state: PhaseSpaceState, coords_phys: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Cubic interpolation of psi at physical coordinates; zero outside."""
    grid = state.grid
    index_coords = []
    outside = np.zeros(coords_phys[0].shape, dtype=bool)
    for ax, c in zip(grid.axes, coords_phys):
        idx = (c - ax.lo) / ax.step
        outside |= (idx < 0) | (idx > ax.n - 1)
        index_coords.append(idx)
    stack = np.stack([ic.ravel() for ic in index_coords])
    re = map_coordinates(state.psi.real, stack, order=3, mode="constant", cval=0.0)
    im = map_coordinates(state.psi.imag, stack, order=3, mode="constant", cval=0.0)
    psi = (re + 1j * im).reshape(state.psi.shape)
    psi[outside.reshape(state.psi.shape)] = 0.0
    return psi, float(outside.mean())


def _transport(
    state: PhaseSpaceState,
    rhs,
    div,
    span: float,
    dt: float,
    time_shift: float,
) -> PhaseSpaceState:
    if span < 0 or dt <= 0:
        raise ValueError("span must be >= 0 and dt > 0")
    if span == 0:
        out = state.copy()
        out.time = state.time + time_shift
        return out
    grid = state.grid
    d = grid.dims
    meshes = grid.meshes()
    r = meshes[:d]
    q = meshes[d:]
    r0, q0, div_integral = _rk4_backtrace(rhs, div, r, q, span, dt)
    for arr in r0 + q0:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteState("characteristics produced non-finite coordinates")
    psi, frac_outside = _interpolate(state, r0 + q0)
    if div is not None:
        psi = psi * np.exp(-0.5 * div_integral)
    norm_before = state.norm_squared()
    out = PhaseSpaceState(grid, psi, state.time + time_shift, dict(state.meta))
    norm_after = out.norm_squared()
    out.meta["mass_loss"] = max(norm_before - norm_after, 0.0)
    out.meta["fraction_outside"] = frac_outside
    out.meta["norm_drift"] = norm_after - norm_before
    if frac_outside > 0.25:
        warnings.warn(
            f"{frac_outside:.0%} of characteristics left the grid; "
            "amplitude treated as zero outside",
            stacklevel=2,
        )
    return out


def evolve_state(
    state: PhaseSpaceState,
    m0: float,
    field: ForceFieldNum | ForceFieldSym,
    t_end: float,
    dt: float = 1e-3,
) -> PhaseSpaceState:
    """Semi-Lagrangian evolution of the state by t_end in one interpolation
    pass (characteristics are integrated with RK4 substeps of dt)."""
    if isinstance(field, ForceFieldSym):
        field = compile_field(field, state.grid.dims)
    if field.dims != state.grid.dims:
        raise ValueError("field and state dimensionality differ")
    if state.representation == VELOCITY:
        rhs, div = velocity_flow(m0, field)
    else:
        rhs, div = momentum_flow(m0, field)
    return _transport(state, rhs, div, t_end, dt, time_shift=t_end)


def boost_state(
    state: PhaseSpaceState, axis: int, rapidity: float, ds: float = 1e-3
) -> PhaseSpaceState:
    """Finite boost on a velocity-representation state at t = 0.

    Applies exp(-i s K_axis): a localized state's velocity peak transforms by
    the velocity-addition law with boost speed tanh(s).
    """
    if state.representation != VELOCITY:
        raise RepresentationMismatch("boost_state requires a velocity-representation state")
    if state.time != 0.0:
        raise ValueError("boost_state is defined at t = 0 (the boost has an explicit t term)")
    if abs(math.tanh(rapidity)) > 0.9:
        raise ValueError("|tanh s| <= 0.9 is required")
    rhs, div = boost_flow(axis, state.grid.dims)
    if rapidity == 0:
        return state.copy()
    span = abs(rapidity)
    if rapidity > 0:
        return _transport(state, rhs, div, span, ds, time_shift=0.0)
    flip_rhs = lambda r, v: tuple([-w for w in part] for part in rhs(r, v))
    flip_div = lambda r, v: -div(r, v)
    return _transport(state, flip_rhs, flip_div, span, ds, time_shift=0.0)


def add_boost_velocity(u: Sequence[float], axis: int, rapidity: float) -> np.ndarray:
    """Closed-form velocity-addition law applied by boost_state to a peak."""
    u = np.asarray(u, dtype=float)
    a = axis - 1
    vb = math.tanh(rapidity)
    den = 1.0 - vb * u[a]
    out = np.empty_like(u)
    for j in range(len(u)):
        if j == a:
            out[j] = (u[j] - vb) / den
        else:
            out[j] = math.sqrt(1.0 - vb * vb) * u[j] / den
    return out


# -- trajectories ------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled solution of the relativistic force equation."""

    times: np.ndarray
    positions: np.ndarray   # (n, d)
    velocities: np.ndarray  # (n, d)
    momenta: np.ndarray     # (n, d): m0 gamma v
    dt: float
    method: str = "rk4"

    @property
    def dims(self) -> int:
        return self.positions.shape[1]

    def final(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions[-1], self.velocities[-1]


def integrate_trajectory(
    m0: float,
    field: ForceFieldNum | ForceFieldSym,
    r0: Sequence[float],
    v0: Sequence[float],
    t_end: float,
    dt: float = 1e-3,
) -> TrajectoryRecord:
    """Fixed-step RK4 integration of dr/dt = v,
    dv/dt = (1/m0) sqrt(1-v^2) (F - (v.F) v)."""
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    d = len(r0)
    if isinstance(field, ForceFieldSym):
        field = compile_field(field, d)
    if float(np.sum(v0**2)) >= 1.0:
        raise SpeedLimitBreached("initial speed must satisfy |v| < 1")
    if dt <= 0 or t_end < 0:
        raise ValueError("need dt > 0 and t_end >= 0")
    rhs, _ = velocity_flow(m0, field)

    def deriv(y):
        r = [np.asarray(y[k]) for k in range(d)]
        v = [np.asarray(y[d + k]) for k in range(d)]
        dr, dv = rhs(r, v)
        return np.array([float(w) for w in dr + dv])

    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    times = [0.0]
    ys = [np.concatenate([r0, v0])]
    y = ys[0]
    t = 0.0
    for _ in range(n_steps):
        h = min(dt, t_end - t)
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * h * k1)
        k3 = deriv(y + 0.5 * h * k2)
        k4 = deriv(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"trajectory became non-finite at t={t + h}")
        t += h
        times.append(t)
        ys.append(y)
    ys = np.asarray(ys)
    positions = ys[:, :d]
    velocities = ys[:, d:]
    speeds2 = np.sum(velocities**2, axis=1)
    if np.any(speeds2 >= 1.0):
        raise SpeedLimitBreached("|v| >= 1 along the trajectory")
    gamma = 1.0 / np.sqrt(1.0 - speeds2)
    momenta = m0 * gamma[:, None] * velocities
    return TrajectoryRecord(
        times=np.asarray(times),
        positions=positions,
        velocities=velocities,
        momenta=momenta,
        dt=dt,
    )


def constant_force_oracle(m0: float, force: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms for 1D constant force with x(0) = v(0) = 0:
    v = (Ft/m0)/sqrt(1+(Ft/m0)^2), x = (m0/F)(sqrt(1+(Ft/m0)^2) - 1).

    The position prefactor is m0/F, the antiderivative of v(t); the printed
    F/m0 prefactor is dimensionally inconsistent with v(t).
    """
    if force == 0:
        raise ValueError("force must be nonzero (free motion is x = v t)")
    t = np.asarray(t, dtype=float)
    u = force * t / m0
    v = u / np.sqrt(1.0 + u**2)
    x = (m0 / force) * (np.sqrt(1.0 + u**2) - 1.0)
    return x, v


# -- observables --------------------------------------------------------------------


def expectation(
    state: PhaseSpaceState,
    observable: OperatorExpr,
    extra_params: dict[str, float] | None = None,
) -> complex:
    """<psi| O |psi> by grid quadrature; derivations via centered differences."""
    if observable.representation != state.representation:
        raise RepresentationMismatch(
            f"observable is {observable.representation}, state is {state.representation}"
        )
    grid = state.grid
    d = grid.dims
    meshes = grid.meshes()
    names = grid.axis_names()
    # map the operator's 3D variable slots onto this grid's axes
    slot_names = [f"x{i}" for i in (1, 2, 3)]
    slot_names += [f"v{i}" for i in (1, 2, 3)] if state.representation == VELOCITY \
        else [f"p{i}" for i in (1, 2, 3)]
    bindings: dict[str, object] = {n: 0.0 for n in slot_names}
    for k in range(d):
        bindings[slot_names[k]] = meshes[k]
        bindings[slot_names[3 + k]] = meshes[d + k]
    bindings["t"] = state.time
    bindings.update(extra_params or {})
    spacings = [ax.step for ax in grid.axes]

    result = np.zeros(grid.shape, dtype=np.complex128)
    for mono, coeff in observable.terms.items():
        orders = mono.combined()
        for slot, order in enumerate(orders):
            # derivation along a suppressed dimension annihilates the state
            if order and not (slot < 3 and slot < d or 3 <= slot and slot - 3 < d):
                orders = None
                break
        if orders is None:
            continue
        dpsi = state.psi
        for slot, order in enumerate(orders):
            if not order:
                continue
            axis = slot if slot < 3 else d + (slot - 3)
            for _ in range(order):
                dpsi = np.gradient(dpsi, spacings[axis], axis=axis, edge_order=2)
        free = sorted(s.name for s in coeff.free_symbols)
        missing = [n for n in free if n not in bindings]
        if missing:
            raise ValueError(f"observable needs parameter values for {missing}")
        fn = sp.lambdify([symbol(n) for n in free], coeff, modules="numpy")
        cval = fn(*[bindings[n] for n in free])
        result = result + np.asarray(cval, dtype=np.complex128) * dpsi
    integrand = np.conj(state.psi) * result
    return complex(integrand.sum() * grid.cell_volume)


# -- pure-state limit -----------------------------------------------------------------


@dataclass(frozen=True)
class PureStateLimitEntry:
    width: float
    centroid_error: float
    error_cells: float


@dataclass(frozen=True)
class PureStateLimitReport:
    entries: tuple[PureStateLimitEntry, ...]
    monotone: bool
    ratios: tuple[float, ...]


def pure_state_limit_check(
    m0: float,
    field: ForceFieldNum | ForceFieldSym,
    r0: Sequence[float],
    p0: Sequence[float],
    widths: Sequence[float],
    t_end: float,
    grid: PhaseGrid,
    dt: float = 1e-3,
) -> PureStateLimitReport:
    """Shrinking momentum-representation Gaussians track the Hamiltonian
    trajectory: the density centroid converges to (r(t), p(t)) as the width
    shrinks."""
    if grid.representation != MOMENTUM:
        raise RepresentationMismatch("pure-state limit uses the momentum representation")
    d = grid.dims
    if isinstance(field, ForceFieldSym):
        field = compile_field(field, d)
    p0 = np.asarray(p0, dtype=float)
    v0 = p0 / math.sqrt(float(np.sum(p0**2)) + m0 * m0)
    traj = integrate_trajectory(m0, field, r0, v0, t_end, dt)
    target = np.concatenate([traj.positions[-1], traj.momenta[-1]])
    steps = np.array([ax.step for ax in grid.axes])
    entries = []
    for w in widths:
        state = gaussian_state(grid, r0, p0, [w] * d, [w] * d)
        evolved = evolve_state(state, m0, field, t_end, dt)
        centroid = density_centroid(evolved)
        err = float(np.linalg.norm(centroid - target))
        cells = float(np.max(np.abs(centroid - target) / steps))
        entries.append(PureStateLimitEntry(width=float(w), centroid_error=err, error_cells=cells))
    errors = [e.centroid_error for e in entries]
    ratios = tuple(
        b / a if a > 0 else float("inf") for a, b in zip(errors, errors[1:])
    )
    monotone = all(r < 1.0 for r in ratios)
    return PureStateLimitReport(entries=tuple(entries), monotone=monotone, ratios=ratios)


# -- state files and CSV ---------------------------------------------------------------

_MAGIC = "relkvn-state 1"


def write_state(path, state: PhaseSpaceState, fmt: str = "binary") -> None:
    """Snapshot file: text header, then `index re im` lines (ascii) or
    little-endian float64 (re, im) pairs in row-major order (binary)."""
    if fmt not in ("ascii", "binary"):
        raise ValueError("fmt must be 'ascii' or 'binary'")
    grid = state.grid
    header = [
        _MAGIC,
        f"representation {grid.representation}",
        f"time {state.time!r}",
        f"dims {grid.dims}",
    ]
    for name, ax in zip(grid.axis_names(), grid.axes):
        header.append(f"axis {name} {ax.lo!r} {ax.hi!r} {ax.n}")
    header.append(f"format {fmt}")
    flat = state.psi.ravel()
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode())
        if fmt == "ascii":
            lines = [
                f"{i} {z.real!r} {z.imag!r}" for i, z in enumerate(flat)
            ]
            fh.write(("\n".join(lines) + "\n").encode())
        else:
            buf = np.empty(2 * flat.size, dtype="<f8")
            buf[0::2] = flat.real
            buf[1::2] = flat.imag
            fh.write(buf.tobytes())


def read_state(path) -> PhaseSpaceState:
    with open(path, "rb") as fh:
        blob = fh.read()
    head, _, rest = blob.partition(b"format ")
    lines = head.decode().strip().splitlines()
    if lines[0] != _MAGIC:
        raise ValueError(f"{path}: not a state snapshot")
    fields = {}
    axes = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "axis":
            axes.append((parts[1], AxisSpec(float(parts[2]), float(parts[3]), int(parts[4]))))
        else:
            fields[parts[0]] = parts[1]
    fmt_line, _, data = rest.partition(b"\n")
    fmt = fmt_line.decode().strip()
    dims = int(fields["dims"])
    grid = PhaseGrid(
        representation=fields["representation"],
        raxes=tuple(ax for name, ax in axes[:dims]),
        qaxes=tuple(ax for name, ax in axes[dims:]),
    )
    count = int(np.prod(grid.shape))
    if fmt == "ascii":
        flat = np.zeros(count, dtype=np.complex128)
        for line in data.decode().strip().splitlines():
            i, re_s, im_s = line.split()
            flat[int(i)] = float(re_s) + 1j * float(im_s)
    elif fmt == "binary":
        buf = np.frombuffer(data[: 16 * count], dtype="<f8")
        flat = buf[0::2] + 1j * buf[1::2]
    else:
        raise ValueError(f"{path}: unknown data format {fmt!r}")
    return PhaseSpaceState(grid, flat.reshape(grid.shape), float(fields["time"]))


def export_trajectory(record: TrajectoryRecord, path, kind: str = "velocity") -> None:
    """CSV export with header t,x1,x2,x3,v1,v2,v3 (or p1..p3), 1e-12 precision."""
    if kind == "velocity":
        cols, data = ("v1", "v2", "v3"), record.velocities
    elif kind == "momentum":
        cols, data = ("p1", "p2", "p3"), record.momenta
    else:
        raise ValueError("kind must be 'velocity' or 'momentum'")
    d = record.dims
    with open(path, "w") as fh:
        fh.write("t,x1,x2,x3," + ",".join(cols) + "\n")
        for i, t in enumerate(record.times):
            row = [t]
            row += [record.positions[i][k] if k < d else 0.0 for k in range(3)]
            row += [data[i][k] if k < d else 0.0 for k in range(3)]
            fh.write(",".join(f"{x:.12e}" for x in row) + "\n")
