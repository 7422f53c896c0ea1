"""Screened stationary states of a Vlasov-Poisson plasma around a point charge.

The electrostatic potential ``Q`` of a repulsive point charge ``theta``
immersed in a plasma with velocity profile ``F`` solves::

    R = Phi_sigma * B[R + theta Phi_sigma],   Q = R + theta Phi_sigma,   rho = g(Q)

where ``Phi_sigma`` is the Yukawa kernel with mass ``sigma = -g'(0)``.
Typical use::

    from debyescreen import make_maxwellian, solve, SolverConfig
    result = solve(make_maxwellian(1.0), SolverConfig(theta=1.0))
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DebyeError,
    DomainError,
    GridTooSmallError,
    InvalidParameterError,
    NonConvergenceError,
    NumericalError,
    PenroseViolationError,
)
from .profiles import (  # noqa: E402
    VelocityProfile,
    eval_dF,
    eval_F,
    load_tabulated,
    make_maxwellian,
    make_power_law,
    make_tabulated,
    validate_profile,
)
from .response import ScreeningResponse, apply_B, build_response, compute_g, compute_sigma  # noqa: E402
from .grid import RadialField, RadialGrid  # noqa: E402
from .green import apply_newtonian_inverse, apply_yukawa_inverse, apply_yukawa_inverse_fast, phi_sigma  # noqa: E402
from .solver import SolveResult, SolverConfig, check_uniqueness, solve, solve_homotopy  # noqa: E402
from .diagnostics import (  # noqa: E402
    check_charge_neutrality,
    check_comparison,
    check_pointwise_bounds,
    fit_decay_rate,
    poisson_weak_residual,
)
from .phase_space import KineticState, boundary_check, consistency_rho, eval_f, vlasov_weak_residual  # noqa: E402
from .config import RunConfig, load_config  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DebyeError",
    "DomainError",
    "GridTooSmallError",
    "InvalidParameterError",
    "NonConvergenceError",
    "NumericalError",
    "PenroseViolationError",
    "VelocityProfile",
    "eval_F",
    "eval_dF",
    "load_tabulated",
    "make_maxwellian",
    "make_power_law",
    "make_tabulated",
    "validate_profile",
    "ScreeningResponse",
    "apply_B",
    "build_response",
    "compute_g",
    "compute_sigma",
    "RadialField",
    "RadialGrid",
    "apply_newtonian_inverse",
    "apply_yukawa_inverse",
    "apply_yukawa_inverse_fast",
    "phi_sigma",
    "SolveResult",
    "SolverConfig",
    "check_uniqueness",
    "solve",
    "solve_homotopy",
    "check_charge_neutrality",
    "check_comparison",
    "check_pointwise_bounds",
    "fit_decay_rate",
    "poisson_weak_residual",
    "KineticState",
    "boundary_check",
    "consistency_rho",
    "eval_f",
    "vlasov_weak_residual",
    "RunConfig",
    "load_config",
]
