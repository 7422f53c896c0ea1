"""The kinetic density ``f(x, v) = F(Q(x) + |v|^2/2)`` and its checks.

``f`` depends on position only through ``r = |x|`` and on velocity only
through ``w = |v|`` (plus, for test functions, the angle between them),
so every phase-space integral used here is at most three dimensional.

The weak Vlasov identity is tested on products ``chi(r) eta(w) P(mu)``
with ``mu = x.v / (|x||v|)``.  For the dipole factor ``P = mu`` the
angular integrals are done by hand::

    int f v.grad_x(phi)     = (4 pi)^2 int int r^2 w^3 f eta (chi'/3 + 2 chi/(3 r)) dr dw
    int f grad_x Q.grad_v(phi) = (4 pi)^2 int int r^2 w^2 f Q' chi (eta'/3 + 2 eta/(3 w)) dr dw

For ``P = 1`` both integrands are odd in ``mu`` and the angle is
integrated numerically instead, which makes the vanishing a genuine
quadrature check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .diagnostics import Bump, _panel_nodes
from .errors import DomainError, NumericalError
from .green import phi_sigma, phi_sigma_derivative
from .profiles import VelocityProfile
from .quadrature import composite_semi_infinite, gauss_legendre
from .solver import SolveResult

logger = logging.getLogger(__name__)

__all__ = [
    "KineticState",
    "PhaseTestFunction",
    "eval_f",
    "consistency_rho",
    "vlasov_weak_residual",
    "default_phase_tests",
    "boundary_check",
    "boundary_bound",
    "phase_table",
    "monotone_in_r",
]

_FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True, eq=False)
class KineticState:
    """A solved potential together with the profile that turns it into ``f``.

    ``profile`` defaults to the one the solve used.
    """

    result: SolveResult
    profile: VelocityProfile | None = None

    def __post_init__(self):
        if self.profile is None:
            object.__setattr__(self, "profile", self.result.profile)

    @property
    def theta(self) -> float:
        return self.result.theta * self.result.lam

    @property
    def sigma(self) -> float:
        return self.result.sigma

    @property
    def thermal_speed(self) -> float:
        """Speed scale ``1/sqrt(sigma)`` (equal to ``sqrt(T)`` for a Maxwellian)."""
        return 1.0 / math.sqrt(self.sigma)

    def Q(self, r):
        """Potential at ``r >= r_min``; beyond ``r_max`` the regular part follows its tail model."""
        r = np.asarray(r, dtype=float)
        grid = self.result.grid
        if np.any(r < grid.r_min * (1 - 1e-12)):
            raise DomainError(f"kinetic density evaluated below r_min={grid.r_min:g}")
        inside = r <= grid.r_max
        R = np.empty_like(r)
        R[inside] = self.result.R.smooth(r[inside])
        if np.any(~inside):
            R[~inside] = self.result.R.with_tail(math.sqrt(self.sigma))(r[~inside])
        out = R + self.theta * phi_sigma(self.sigma, r) if self.theta > 0 else R
        return out if out.ndim else float(out)

    def dQ(self, r):
        """``dQ/dr`` inside the grid."""
        r = np.asarray(r, dtype=float)
        out = self.result.R.smooth_derivative(r)
        if self.theta > 0:
            out = out + self.theta * phi_sigma_derivative(self.sigma, r)
        return out

    def f(self, r, speed):
        """``F(Q(r) + speed^2 / 2)`` with broadcasting over ``r`` and ``speed``."""
        speed = np.asarray(speed, dtype=float)
        if np.any(speed < 0) or np.any(~np.isfinite(speed)):
            raise DomainError("speeds must be finite and nonnegative")
        H = np.asarray(self.Q(r), dtype=float) + 0.5 * speed**2
        # Q >= 0 analytically; spline noise must not leave F's domain
        return self.profile.F(np.maximum(H, 0.0))

    def f0(self, speed):
        """Unperturbed density ``F(speed^2 / 2)``."""
        speed = np.asarray(speed, dtype=float)
        return self.profile.F(0.5 * speed**2)


def eval_f(state: KineticState, r, speed):
    """Phase-space density at radius ``r`` and speed ``speed``."""
    return state.f(r, speed)


def _speed_rule(n_panels=64, order=24):
    return composite_semi_infinite(n_panels=n_panels, order=order)


def consistency_rho(state: KineticState, radii: Sequence[float] | None = None) -> dict[str, Any]:
    """Compare ``4 pi int w^2 f(r, w) dw`` with ``g(Q(r))``.

    The velocity integral uses a fixed composite rule on ``(0, inf)``,
    independent of the quadrature that built ``g``.
    """
    grid = state.result.grid
    if radii is None:
        lam = 1.0 / math.sqrt(state.sigma)
        radii = [r for r in (0.01 * lam, 0.1 * lam, lam, 3 * lam, 10 * lam) if grid.r_min <= r <= grid.r_max]
    radii = np.asarray(radii, dtype=float)
    w, wt = _speed_rule()
    Q = np.asarray(state.Q(radii), dtype=float).reshape(-1)
    f = state.profile.F(Q[:, None] + 0.5 * w[None, :] ** 2)
    density = _FOUR_PI * (f * w[None, :] ** 2) @ wt
    if np.any(~np.isfinite(density)):
        raise NumericalError("velocity quadrature produced non-finite values")
    g = state.result.response.g(np.maximum(Q, 0.0))
    dev = np.abs(density - g)
    return {
        "max_deviation": float(np.max(dev)),
        "radii": radii.tolist(),
        "velocity_integral": density.tolist(),
        "g_of_Q": np.asarray(g).tolist(),
    }


@dataclass(frozen=True)
class PhaseTestFunction:
    """``chi(|x|) eta(|v|) P(mu)`` with ``P`` either ``1`` (``"radial"``) or ``mu`` (``"dipole"``)."""

    chi: Bump
    eta: Bump
    family: str = "dipole"

    def __post_init__(self):
        if self.family not in ("radial", "dipole"):
            raise ValueError(f"unknown test-function family {self.family!r}")
        if self.eta.contains_origin or self.chi.contains_origin:
            raise DomainError("phase test functions must be supported away from r = 0 and w = 0")


def default_phase_tests(sigma: float, family: str = "dipole") -> list[PhaseTestFunction]:
    """Dyadic radial bumps from ``lam/4`` to ``8 lam`` against three speed shells."""
    lam = 1.0 / math.sqrt(sigma)
    chis = [Bump(2.0 ** (j - 1) * lam, 2.0**j * lam) for j in range(-1, 4)]
    etas = [Bump(0.25 * lam, lam), Bump(0.5 * lam, 2.0 * lam), Bump(lam, 3.0 * lam)]
    return [PhaseTestFunction(c, e, family) for c in chis for e in etas]


def _speed_nodes(eta: Bump, panels=48, order=8):
    x, w = gauss_legendre(order)
    edges = np.linspace(eta.a, eta.b, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    return nodes, (half[:, None] * w[None, :]).ravel()


def _sides(state: KineticState, test: PhaseTestFunction):
    r, wr = _panel_nodes(state.result.grid, test.chi.a, test.chi.b)
    w, ww = _speed_nodes(test.eta)
    chi, dchi, _ = test.chi.derivatives(r)
    eta, deta, _ = test.eta.derivatives(w)
    f = state.f(r[:, None], w[None, :])
    dQ = state.dQ(r)
    R2 = (r**2)[:, None]
    W2 = (w**2)[None, :]
    weights = wr[:, None] * ww[None, :]
    if test.family == "dipole":
        lhs_int = R2 * W2 * w[None, :] * f * eta[None, :] * (dchi / 3.0 + 2.0 * chi / (3.0 * r))[:, None]
        rhs_int = R2 * W2 * f * (dQ * chi)[:, None] * (deta / 3.0 + 2.0 * eta / (3.0 * w))[None, :]
        scale = np.abs(lhs_int) + np.abs(rhs_int)
        c = _FOUR_PI**2
        return c * np.sum(weights * lhs_int), c * np.sum(weights * rhs_int), c * np.sum(weights * scale)
    # radial family: keep the angle and integrate it numerically
    mu, wmu = gauss_legendre(16)
    lhs_int = (R2 * W2 * f * w[None, :] * eta[None, :] * dchi[:, None])[..., None] * mu
    rhs_int = (R2 * W2 * f * (dQ * chi)[:, None] * deta[None, :])[..., None] * mu
    c = _FOUR_PI * 2.0 * math.pi
    wt = weights[..., None] * wmu
    scale = np.sum(wt * (np.abs(lhs_int) + np.abs(rhs_int)))
    return c * np.sum(wt * lhs_int), c * np.sum(wt * rhs_int), c * scale


def vlasov_weak_residual(state: KineticState, test_functions: Sequence[PhaseTestFunction] | None = None) -> dict[str, Any]:
    """Residual of ``int f v.grad_x(phi) = int f grad_x(Q).grad_v(phi)``.

    Each test function reports ``|LHS - RHS|`` divided by the integral
    of ``|LHS integrand| + |RHS integrand|``; that scale stays positive
    when both sides vanish by symmetry.
    """
    tests = list(test_functions) if test_functions is not None else default_phase_tests(state.sigma)
    grid = state.result.grid
    per = []
    for test in tests:
        if test.chi.a < grid.r_min or test.chi.b > grid.r_max:
            raise DomainError(f"test function support [{test.chi.a:g}, {test.chi.b:g}] leaves the grid")
        lhs, rhs, scale = _sides(state, test)
        rel = abs(lhs - rhs) / scale if scale > 0 else 0.0
        per.append(
            {
                "family": test.family,
                "r_support": [test.chi.a, test.chi.b],
                "w_support": [test.eta.a, test.eta.b],
                "lhs": float(lhs),
                "rhs": float(rhs),
                "residual": float(rel),
            }
        )
    return {"max_residual": max(p["residual"] for p in per), "per_test_function": per}


def _default_speeds(state: KineticState):
    return np.linspace(0.0, 6.0, 61) * state.thermal_speed


def boundary_check(state: KineticState, R_probe: float, speeds: Sequence[float] | None = None) -> float:
    """``sup_w |f(R_probe, w) - f0(w)|`` over the speed samples."""
    if R_probe > state.result.grid.r_max * (1 + 1e-12):
        raise DomainError(f"R_probe={R_probe:g} lies beyond r_max={state.result.grid.r_max:g}")
    speeds = _default_speeds(state) if speeds is None else np.asarray(speeds, dtype=float)
    return float(np.max(np.abs(state.f(R_probe, speeds) - state.f0(speeds))))


def boundary_bound(state: KineticState, R_probe: float) -> float:
    """Mean-value bound ``sup|F'| Q(R_probe)`` for :func:`boundary_check`."""
    y = np.concatenate([[0.0], np.logspace(-8, 4, 400)])
    return float(np.max(np.abs(state.profile.dF(y)))) * abs(float(state.Q(R_probe)))


def phase_table(state: KineticState, radii, speeds) -> np.ndarray:
    """``f`` on the product grid ``radii x speeds`` (rows are radii)."""
    r = np.asarray(radii, dtype=float)
    return state.f(r[:, None], np.asarray(speeds, dtype=float)[None, :])


def monotone_in_r(state: KineticState, speeds: Sequence[float] | None = None) -> dict[str, Any]:
    """Check that ``f(r, w)`` is nondecreasing in ``r`` along the grid nodes."""
    speeds = _default_speeds(state) if speeds is None else np.asarray(speeds, dtype=float)
    table = phase_table(state, state.result.grid.r, speeds)
    drops = np.diff(table, axis=0)
    scale = max(float(np.max(table)), 1e-300)
    worst = max(0.0, float(-np.min(drops)))
    return {"max_decrease": worst, "relative": worst / scale, "pass": worst <= 1e-12 * scale}
