"""Damped Picard iteration for the screened potential.

The potential is split as ``Q = R + theta phi_sigma``; only the bounded
regular part ``R`` is iterated::

    R <- (1 - w) R + w (sigma - Laplace)^(-1) B[R + theta phi_sigma]

Starting from ``R = 0`` with ``w = 1`` the iterates increase
monotonically, because ``B`` is nondecreasing and the kernel positive.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import (
    GridTooSmallError,
    InvalidParameterError,
    NonConvergenceError,
    NumericalError,
    PenroseViolationError,
)
from .green import apply_yukawa_inverse_fast, phi_sigma
from .grid import DEFAULT_N, DEFAULT_RMAX_MULT, DEFAULT_RMIN_MULT, RadialField, RadialGrid
from .profiles import VelocityProfile, validate_profile
from .response import ScreeningResponse, build_response

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolveResult",
    "solve",
    "solve_homotopy",
    "picard_step",
    "fixed_point_map",
    "fixed_point_residual",
    "check_uniqueness",
    "prepare",
    "a_priori_bound",
    "result_from_fields",
]

_MIN_DAMPING = 1.0 / 16.0
# iterates may dip by rounding noise once converged
_MONOTONE_SLACK = 1e-13


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solve.

    ``continuation`` is ``"auto"``, ``"none"``, ``"theta_steps"`` or
    ``"lambda_steps"``; ``"auto"`` means no continuation for
    ``theta <= 1`` and ``theta_steps`` with ``continuation_steps`` stages
    above.
    """

    theta: float
    damping: float = 1.0
    tol: float = 1e-10
    max_iter: int = 10000
    continuation: str = "auto"
    continuation_steps: int = 8
    n: int = DEFAULT_N
    r_min_mult: float = DEFAULT_RMIN_MULT
    r_max_mult: float = DEFAULT_RMAX_MULT

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise InvalidParameterError("repulsive case requires theta > 0")
        if not (0 < self.damping <= 1):
            raise InvalidParameterError(f"damping must lie in (0, 1], got {self.damping!r}")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be positive")
        if self.continuation not in ("auto", "none", "theta_steps", "lambda_steps"):
            raise InvalidParameterError(f"unknown continuation {self.continuation!r}")
        if self.continuation_steps < 1:
            raise InvalidParameterError("continuation_steps must be positive")
        if self.r_max_mult < 10:
            raise InvalidParameterError("r_max must be at least 10 screening lengths")
        if not (0 < self.r_min_mult < self.r_max_mult):
            raise InvalidParameterError("need 0 < r_min_mult < r_max_mult")

    def resolved_continuation(self) -> str:
        if self.continuation == "auto":
            return "theta_steps" if self.theta > 1 else "none"
        return self.continuation

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(eq=False)
class SolveResult:
    """Converged fields and iteration metadata."""

    profile: VelocityProfile
    response: ScreeningResponse
    config: SolverConfig
    grid: RadialGrid
    theta: float
    Q: RadialField
    R: RadialField
    rho: RadialField
    iterations: int
    final_residual: float
    residual_history: list[float]
    monotone_flag: bool
    damping_final: float
    lam: float = 1.0
    bounds_report: dict[str, Any] = field(default_factory=dict)
    fitted_decay_rate: float = float("nan")

    @property
    def sigma(self) -> float:
        return self.response.sigma

    def Q_at(self, r):
        """Potential between nodes: interpolated ``R`` plus the exact point-charge term."""
        r = np.asarray(r, dtype=float)
        return self.R.smooth(r) + self.lam * self.theta * phi_sigma(self.sigma, r)

    def summary(self) -> dict[str, Any]:
        return {
            "sigma": self.sigma,
            "theta": self.theta,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "fitted_decay_rate": self.fitted_decay_rate,
            "monotone": self.monotone_flag,
            "damping_final": self.damping_final,
            "bounds_report": self.bounds_report,
        }


def a_priori_bound(sigma: float, theta: float, r):
    """Upper bound ``theta (1 - exp(-k r)) / (4 pi r)`` on the regular part."""
    r = np.asarray(r, dtype=float)
    return -theta * np.expm1(-math.sqrt(sigma) * r) / (4.0 * math.pi * r)


def prepare(profile: VelocityProfile, config: SolverConfig, theta_max: float | None = None):
    """Validate the profile and build the response table and grid."""
    report = validate_profile(profile)
    if not report.passed:
        failed = report.failed()
        if "penrose" in failed:
            raise PenroseViolationError("velocity profile violates F' < 0")
        raise InvalidParameterError(f"velocity profile fails validation: {', '.join(failed)}")
    theta_max = config.theta if theta_max is None else theta_max
    probe = build_response(profile, y_max=1.0, n=8)
    sigma = probe.sigma
    grid = RadialGrid.for_sigma(sigma, config.n, config.r_min_mult, config.r_max_mult)
    # largest potential met: point charge at r_min plus the bound on R
    y_max = 1.05 * theta_max * (phi_sigma(sigma, grid.r_min) + math.sqrt(sigma) / (4.0 * math.pi))
    response = build_response(profile, y_max=max(y_max, 1.0))
    return response, grid


def fixed_point_map(response: ScreeningResponse, theta: float, R: np.ndarray, phi: np.ndarray, grid: RadialGrid, lam: float = 1.0):
    """``lam (sigma - Laplace)^(-1) B[R + lam theta phi_sigma]`` as an array."""
    source = response.b(np.maximum(R + lam * theta * phi, 0.0))
    out = apply_yukawa_inverse_fast(response.sigma, RadialField(grid, source)).values
    return lam * out if lam != 1.0 else out


def fixed_point_residual(response, theta, R: RadialField, lam: float = 1.0) -> float:
    """``sup|R - T[R]| / (1 + sup|R|)``."""
    grid = R.grid
    phi = phi_sigma(response.sigma, grid.r)
    TR = fixed_point_map(response, theta, R.values, phi, grid, lam)
    return float(np.max(np.abs(R.values - TR)) / (1.0 + np.max(np.abs(R.values))))


def picard_step(response: ScreeningResponse, theta: float, R_k: RadialField, omega: float = 1.0) -> RadialField:
    """One damped step ``(1 - omega) R_k + omega T[R_k]``."""
    if not (0 < omega <= 1):
        raise InvalidParameterError("omega must lie in (0, 1]")
    vals = R_k.values
    if np.any(vals < 0):
        raise InvalidParameterError("Picard iterates must be nonnegative")
    phi = phi_sigma(response.sigma, R_k.grid.r)
    TR = fixed_point_map(response, theta, vals, phi, R_k.grid)
    new = (1.0 - omega) * vals + omega * TR
    if not np.all(np.isfinite(new)):
        raise NumericalError("Picard step produced non-finite values")
    return R_k.with_values(new)


@dataclass
class _Run:
    R: np.ndarray
    iterations: int
    residual: float
    history: list[float]
    monotone: bool
    damping: float


def _iterate(response, grid, theta, R0, omega, tol, max_iter, lam=1.0, stage=None) -> _Run:
    phi = phi_sigma(response.sigma, grid.r)
    R = np.array(R0, dtype=float)
    history: list[float] = []
    monotone = True
    rises = 0
    for it in range(max_iter + 1):
        TR = fixed_point_map(response, theta, R, phi, grid, lam)
        res = float(np.max(np.abs(R - TR)) / (1.0 + np.max(np.abs(R))))
        history.append(res)
        if not math.isfinite(res):
            raise NumericalError("fixed-point residual is not finite", achieved=res)
        if res <= tol:
            return _Run(R, it, res, history, monotone, omega)
        if it == max_iter:
            break
        if len(history) >= 2 and history[-1] > history[-2]:
            rises += 1
            if rises >= 2 and omega > _MIN_DAMPING:
                omega = max(omega / 2.0, _MIN_DAMPING)
                logger.info("residual rose twice; damping reduced to %g", omega)
                rises = 0
        else:
            rises = 0
        new = (1.0 - omega) * R + omega * TR
        if np.any(new < R - _MONOTONE_SLACK * (1.0 + np.abs(R))):
            monotone = False
        R = new
    raise NonConvergenceError(
        f"no convergence after {max_iter} iterations (residual {history[-1]:.3e})"
        + (f" at {stage}" if stage else ""),
        residual_history=history,
        achieved=history[-1],
        stage=stage,
    )


def _assemble(profile, response, config, grid, theta, run: _Run, total_iters, history, monotone, lam=1.0) -> SolveResult:
    k = math.sqrt(response.sigma)
    R_vals = run.R
    supR = float(np.max(np.abs(R_vals))) if R_vals.size else 0.0
    if supR > 0 and R_vals[-1] > 1e3 * config.tol * supR:
        raise GridTooSmallError(
            f"R(r_max)={R_vals[-1]:.3e} has not decayed; enlarge r_max_mult", achieved=float(R_vals[-1])
        )
    phi = phi_sigma(response.sigma, grid.r)
    R = RadialField(grid, R_vals, tail_rate=k)
    Q = RadialField(grid, R_vals + lam * theta * phi, tail_rate=k)
    rho = RadialField(grid, response.g(Q.values))
    result = SolveResult(
        profile=profile,
        response=response,
        config=config,
        grid=grid,
        theta=theta,
        Q=Q,
        R=R,
        rho=rho,
        iterations=total_iters,
        final_residual=run.residual,
        residual_history=history,
        monotone_flag=monotone,
        damping_final=run.damping,
        lam=lam,
    )
    if theta > 0 and lam > 0:
        from .diagnostics import check_pointwise_bounds, fit_decay_rate

        result.fitted_decay_rate = fit_decay_rate(Q, response.sigma)[0]
        result.bounds_report = check_pointwise_bounds(result).to_dict()
    elif theta == 0 or lam == 0:
        from .diagnostics import check_pointwise_bounds

        result.bounds_report = check_pointwise_bounds(result).to_dict()
    return result


def result_from_fields(
    profile: VelocityProfile,
    config: SolverConfig,
    R: np.ndarray,
    response: ScreeningResponse | None = None,
    grid: RadialGrid | None = None,
) -> SolveResult:
    """Rebuild a :class:`SolveResult` around stored values of ``R``.

    The fixed-point residual is recomputed, so a stored field that is not
    a solution shows up in ``final_residual``.  No iteration is run.
    """
    if response is None or grid is None:
        response, grid = prepare(profile, config)
    R = np.asarray(R, dtype=float)
    if R.shape != grid.r.shape:
        raise InvalidParameterError(f"stored field has {R.size} nodes, the grid has {grid.n}")
    residual = fixed_point_residual(response, config.theta, RadialField(grid, R)) if config.theta > 0 else float(np.max(np.abs(R)))
    run = _Run(R, 0, residual, [residual], True, config.damping)
    return _assemble(profile, response, config, grid, config.theta, run, 0, [residual], True)


def _stages(config: SolverConfig) -> list[float]:
    mode = config.resolved_continuation()
    if mode == "theta_steps" and config.theta > 0:
        k = config.continuation_steps
        return [config.theta * j / k for j in range(1, k + 1)]
    return [config.theta]


def solve(
    profile: VelocityProfile,
    config: SolverConfig,
    initial: np.ndarray | None = None,
    response: ScreeningResponse | None = None,
    grid: RadialGrid | None = None,
) -> SolveResult:
    """Solve for ``R`` and assemble ``Q = R + theta phi_sigma`` and ``rho = g(Q)``."""
    if config.resolved_continuation() == "lambda_steps":
        return solve_homotopy(profile, config, response=response, grid=grid)
    if response is None or grid is None:
        response, grid = prepare(profile, config)
    theta = config.theta
    if theta == 0:
        run = _Run(np.zeros(grid.n), 0, 0.0, [0.0], True, config.damping)
        return _assemble(profile, response, config, grid, 0.0, run, 0, [0.0], True)
    R = np.zeros(grid.n) if initial is None else np.maximum(np.asarray(initial, dtype=float), 0.0)
    history: list[float] = []
    total = 0
    monotone = True
    stages = _stages(config) if initial is None else [theta]
    for th in stages:
        run = _iterate(response, grid, th, R, config.damping, config.tol, config.max_iter, stage=f"theta={th:g}")
        R = run.R
        total += run.iterations
        history.extend(run.history)
        monotone &= run.monotone
    logger.info("solve theta=%g: %d iterations, residual %.2e", theta, total, run.residual)
    return _assemble(profile, response, config, grid, theta, run, total, history, monotone)


def solve_homotopy(
    profile: VelocityProfile,
    config: SolverConfig,
    steps: int | None = None,
    response: ScreeningResponse | None = None,
    grid: RadialGrid | None = None,
    keep_path: bool = False,
):
    """Follow ``Q_lam = lam T[Q_lam]`` for ``lam = j / steps`` up to 1.

    Returns the ``lam = 1`` result, or the list of all stages when
    ``keep_path`` is set.
    """
    steps = steps or config.continuation_steps
    if response is None or grid is None:
        response, grid = prepare(profile, config)
    theta = config.theta
    R = np.zeros(grid.n)
    path = []
    total = 0
    history: list[float] = []
    monotone = True
    for j in range(1, steps + 1):
        lam = j / steps
        run = _iterate(response, grid, theta, R, config.damping, config.tol, config.max_iter, lam=lam, stage=f"lambda={lam:g}")
        R = run.R
        total += run.iterations
        history.extend(run.history)
        monotone &= run.monotone
        if keep_path:
            path.append(_assemble(profile, response, config, grid, theta, run, run.iterations, list(run.history), run.monotone, lam=lam))
    final = _assemble(profile, response, config, grid, theta, run, total, history, monotone)
    return path if keep_path else final


def check_uniqueness(profile: VelocityProfile, config: SolverConfig, seed: int = 0) -> dict[str, Any]:
    """Solve from three starting points and compare the limits.

    Starts: zero, the a priori upper bound on ``R``, and a seeded random
    fraction of that bound.  A branch that fails is reported, not raised.
    """
    response, grid = prepare(profile, config)
    bound = a_priori_bound(response.sigma, config.theta, grid.r)
    rng = np.random.default_rng(seed)
    starts = {"zero": None, "upper_bound": bound, "random": rng.random(grid.n) * bound}
    branches: dict[str, Any] = {}
    errors: dict[str, str] = {}
    for name, start in starts.items():
        try:
            branches[name] = solve(profile, config, initial=start, response=response, grid=grid)
        except NumericalError as exc:
            errors[name] = str(exc)
    distances = {}
    for a, b in itertools.combinations(branches, 2):
        distances[f"{a}-{b}"] = float(np.max(np.abs(branches[a].Q.values - branches[b].Q.values)))
    max_dist = max(distances.values()) if distances else float("nan")
    return {
        "theta": config.theta,
        "max_distance": max_dist,
        "distances": distances,
        "iterations": {k: v.iterations for k, v in branches.items()},
        "failed": errors,
        "complete": not errors,
        "pass": (not errors) and max_dist <= 100 * config.tol,
    }
