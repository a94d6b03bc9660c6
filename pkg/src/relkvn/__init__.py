"""Operational classical relativistic dynamics.

A symbolic operator-algebra core that machine-checks the Poincare-algebra
realizations and canonical-transformation identities of the theory, and a
numerical phase-space core that evolves Koopman-von Neumann states, applies
finite boosts, and reproduces the closed-form dynamics.  Natural units
(c = 1) throughout.
"""

from .errors import (
    ConfigError,
    DomainError,
    NonFiniteState,
    OrderCapExceeded,
    ProbeExhausted,
    RelkvnError,
    RepresentationMismatch,
    SpeedLimitBreached,
    UnassignedVariable,
    UnknownIdentity,
)
from .scalars import (
    ScalarExpr,
    SamplePoint,
    diff,
    equal_numeric,
    evaluate,
    gamma_factor,
    parse_scalar,
)
from .operators import (
    MOMENTUM,
    VELOCITY,
    DerivationMonomial,
    OperatorExpr,
    adjoint,
    commutator,
    compose,
    identity,
    is_hermitian,
    lam_p,
    lam_v,
    lam_x,
    momentum,
    multiplicative,
    op_equal,
    parse_operator,
    position,
    symmetrize,
    velocity,
)
from .generators import (
    ForceFieldSym,
    GeneratorSet,
    LagrangianStructure,
    apply_euler_lagrange,
    build_free_generators,
    build_interacting_liouvillian,
    build_lagrangian_structure,
    build_momentum_generators,
    mutate_generator_set,
    poisson_correspondence,
    verify_force_equation,
    verify_poincare_closure,
)
from .series import (
    AdjointSeries,
    adjoint_series,
    verify_boost_closed_forms,
    verify_c1_on_lambda,
    verify_c1_on_velocity,
    verify_c2,
    verify_canonical_map,
)
from .flow import (
    AxisSpec,
    ForceFieldNum,
    PhaseGrid,
    PhaseSpaceState,
    TrajectoryRecord,
    boost_state,
    born_density,
    compile_field,
    constant_force_oracle,
    evolve_state,
    expectation,
    gaussian_state,
    integrate_trajectory,
    pure_state_limit_check,
    read_state,
    write_state,
)
from .reports import CheckResult, RunReport

__version__ = "0.1.0"
