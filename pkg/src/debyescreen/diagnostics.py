"""Checks of a computed screened state against its analytic bounds.

Every check returns a record with the measured violation so that a
report lists passing checks as well as failing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DomainError
from .green import phi_sigma
from .grid import RadialField
from .quadrature import gauss_legendre

__all__ = [
    "BoundsReport",
    "fit_decay_rate",
    "check_pointwise_bounds",
    "check_charge_neutrality",
    "check_comparison",
    "Bump",
    "default_bumps",
    "poisson_weak_residual",
    "DEFAULT_WINDOW",
]

#: fit window in screening lengths
DEFAULT_WINDOW = (5.0, 15.0)
_FOUR_PI = 4.0 * math.pi
# relative slack when a constant fitted on the window is used outside it
_EXTRAPOLATION_SLACK = 1e-6


@dataclass
class BoundsReport:
    records: list[dict[str, Any]] = field(default_factory=list)
    constants: dict[str, float] = field(default_factory=dict)

    def add(self, name, formula, violation, location, passed, **extra):
        self.records.append(
            {
                "name": name,
                "bound": formula,
                "max_violation": float(violation),
                "location_r": None if location is None else float(location),
                "pass": bool(passed),
                **extra,
            }
        )

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.records)

    def failed(self) -> list[str]:
        return [r["name"] for r in self.records if not r["pass"]]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": self.records, "constants": self.constants}


def _window_mask(r, sigma, window):
    lam = 1.0 / math.sqrt(sigma)
    lo, hi = window[0] * lam, window[1] * lam
    if lo < r[0] or hi > r[-1]:
        raise DomainError(f"fit window [{lo:g}, {hi:g}] leaves the grid [{r[0]:g}, {r[-1]:g}]")
    return (r >= lo) & (r <= hi)


def fit_decay_rate(Q: RadialField, sigma: float, window: Sequence[float] = DEFAULT_WINDOW) -> tuple[float, float]:
    """Least-squares slope of ``log(r Q)`` over the window.

    Returns
    -------
    rate : float
        Minus the fitted slope.
    r_squared : float
        Coefficient of determination of the linear fit.
    """
    r = Q.grid.r
    mask = _window_mask(r, sigma, window)
    q = Q.values[mask]
    if np.any(q <= 0):
        raise DomainError("decay fit needs a positive field on the window")
    x = r[mask]
    y = np.log(x * q)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


def _worst(excess, r):
    i = int(np.argmax(excess))
    return max(float(excess[i]), 0.0), float(r[i])


def check_pointwise_bounds(result, window: Sequence[float] = DEFAULT_WINDOW) -> BoundsReport:
    """Nodewise checks of positivity, the a priori bound and exponential decay.

    (i)   ``Q >= theta phi_sigma - 1e-12``
    (ii)  ``0 <= R <= theta (1 - exp(-k r)) / (4 pi r) + 1e-10``
    (iii) ``R <= C exp(-k r)`` beyond the window start, ``C`` fitted on the window
    (iv)  ``Q <= C' exp(-k r) / r`` likewise
    (v)   ``0 <= 1 - rho <= min(1, C'' theta exp(-k r))`` likewise
    """
    from .solver import a_priori_bound

    sigma = result.sigma
    k = math.sqrt(sigma)
    theta = result.theta * result.lam
    r = result.grid.r
    R = result.R.values
    Q = result.Q.values
    rho = result.rho.values
    rep = BoundsReport()
    phi = phi_sigma(sigma, r)

    v, loc = _worst(theta * phi - 1e-12 - Q, r)
    rep.add("Q_lower", "Q >= theta*Phi_sigma", v, loc, v == 0.0)

    # lam scales the bound as lam^2 theta <= theta
    upper = a_priori_bound(sigma, result.theta * result.lam**2, r) + 1e-10
    v_hi, loc_hi = _worst(R - upper, r)
    v_lo, loc_lo = _worst(-R, r)
    rep.add(
        "R_a_priori",
        "0 <= R <= theta(1-exp(-sqrt(sigma) r))/(4 pi r)",
        max(v_hi, v_lo),
        loc_hi if v_hi >= v_lo else loc_lo,
        v_hi == 0.0 and v_lo <= 1e-12,
    )

    if theta == 0 or np.all(R == 0) and np.all(Q == 0):
        rep.add("R_exponential", "R <= C exp(-sqrt(sigma) r)", float(np.max(np.abs(R))), None, bool(np.all(R == 0)))
        rep.add("Q_exponential", "Q <= C exp(-sqrt(sigma) r)/r", float(np.max(np.abs(Q))), None, bool(np.all(Q == 0)))
        dev = 1.0 - rho
        rep.add("rho_screening", "0 <= 1-rho <= min(1, C theta exp(-sqrt(sigma) r))", float(np.max(np.abs(dev))), None, bool(np.all(dev == 0)))
        return rep

    mask = _window_mask(r, sigma, window)
    outward = r >= r[mask][0]
    decay = np.exp(-k * r)

    scaled_R = R * np.exp(k * r)
    C_R = float(np.max(scaled_R[mask]))
    v, loc = _worst((R - C_R * decay * (1 + _EXTRAPOLATION_SLACK))[outward], r[outward])
    rep.add("R_exponential", "R <= C exp(-sqrt(sigma) r)", v, loc, v == 0.0, C_fit=C_R)

    scaled_Q = Q * r * np.exp(k * r)
    C_Q = float(np.max(scaled_Q[mask]))
    c_Q = float(np.min(scaled_Q[mask]))
    v, loc = _worst((Q - C_Q * decay / r * (1 + _EXTRAPOLATION_SLACK))[outward], r[outward])
    rep.add("Q_exponential", "c exp(-sqrt(sigma) r)/r <= Q <= C exp(-sqrt(sigma) r)/r", v, loc, v == 0.0, C_fit=C_Q, c_fit=c_Q)

    dev = 1.0 - rho
    C_rho = float(np.max(dev[mask] * np.exp(k * r[mask]))) / theta
    cap = np.minimum(1.0, C_rho * theta * decay * (1 + _EXTRAPOLATION_SLACK))
    over = np.where(outward, dev - cap, dev - 1.0)
    v_hi, loc_hi = _worst(over, r)
    v_lo, loc_lo = _worst(-dev - 1e-14, r)
    rep.add(
        "rho_screening",
        "0 <= 1-rho <= min(1, C theta exp(-sqrt(sigma) r))",
        max(v_hi, v_lo),
        loc_hi if v_hi >= v_lo else loc_lo,
        v_hi == 0.0 and v_lo == 0.0,
        C_fit=C_rho,
    )
    rep.constants = {"C_R": C_R, "C_Q": C_Q, "c_Q": c_Q, "C_rho": C_rho}
    return rep


def check_charge_neutrality(result) -> float:
    """``|4 pi int (1 - rho) r^2 dr - theta| / theta`` (absolute when theta = 0).

    The ball inside ``r_min`` is added with ``rho = g(Q(r_min))``.
    """
    grid = result.grid
    dev = 1.0 - result.rho.values
    induced = grid.integrate_volume(dev) + _FOUR_PI * grid.r_min**3 / 3.0 * dev[0]
    theta = result.theta * result.lam
    if theta == 0:
        return abs(induced)
    return abs(induced - theta) / theta


def check_comparison(profile, theta_list, config=None, response=None, grid=None) -> dict[str, Any]:
    """Compare ``Q_theta`` with ``theta Q_1`` on one grid.

    ``config`` supplies the solver settings; its ``theta`` is ignored.
    """
    from dataclasses import replace

    from .solver import SolverConfig, prepare, solve

    base = config or SolverConfig(theta=1.0)
    if response is None or grid is None:
        response, grid = prepare(profile, replace(base, theta=1.0), theta_max=max([1.0, *theta_list]))
    q1 = solve(profile, replace(base, theta=1.0), response=response, grid=grid)
    records = []
    for th in theta_list:
        qt = q1 if th == 1.0 else solve(profile, replace(base, theta=th), response=response, grid=grid)
        excess = qt.Q.values - th * q1.Q.values
        i = int(np.argmax(excess))
        violation = max(float(excess[i]), 0.0)
        interior = grid.r < grid.r_max / 2
        records.append(
            {
                "theta": th,
                "max_violation": violation,
                "location_r": float(grid.r[i]),
                "min_gap_interior": float(np.min(-excess[interior])),
                "pass": violation <= 1e-8 * th,
            }
        )
    return {"checks": records, "pass": all(r["pass"] for r in records)}


@dataclass(frozen=True)
class Bump:
    """Smooth radial bump supported in ``(a, b)``; ``a = 0`` centres it at the origin.

    Normalised to peak value 1.
    """

    a: float
    b: float

    @property
    def contains_origin(self) -> bool:
        return self.a == 0.0

    def _t(self, r):
        if self.contains_origin:
            return np.asarray(r, dtype=float) / self.b
        return (2.0 * np.asarray(r, dtype=float) - self.a - self.b) / (self.b - self.a)

    def _dt(self):
        return 1.0 / self.b if self.contains_origin else 2.0 / (self.b - self.a)

    def derivatives(self, r):
        """``psi, psi', psi''`` at ``r``."""
        t = self._t(r)
        inside = np.abs(t) < 1.0
        ti = np.where(inside, t, 0.0)
        s = 1.0 - ti**2
        e = np.where(inside, np.exp(1.0 - 1.0 / s), 0.0)
        # d/dt exp(-1/(1-t^2)) and its second derivative
        d1 = e * (-2.0 * ti / s**2)
        d2 = e * ((2.0 * ti / s**2) ** 2 - (2.0 / s**2 + 8.0 * ti**2 / s**3))
        c = self._dt()
        return e, np.where(inside, d1 * c, 0.0), np.where(inside, d2 * c * c, 0.0)

    def __call__(self, r):
        return self.derivatives(r)[0]

    def value_at_origin(self) -> float:
        return 1.0 if self.contains_origin else 0.0


def default_bumps(sigma: float) -> list[Bump]:
    """Origin bump on ``(0, lam/2)`` and dyadic bumps up to ``16 lam``."""
    lam = 1.0 / math.sqrt(sigma)
    bumps = [Bump(0.0, 0.5 * lam)]
    bumps += [Bump(2.0 ** (j - 1) * lam, 2.0**j * lam) for j in range(0, 5)]
    return bumps


def _panel_nodes(grid, a, b, order=5):
    """Gauss points on every grid cell meeting ``[a, b]`` (``[0, r_1]`` included)."""
    edges = grid.r[(grid.r > a) & (grid.r < b)]
    pts = np.unique(np.concatenate([[a], edges, [b]]))
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(pts)
    nodes = (pts[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _potential_parts(result, r):
    """``R`` (constant below ``r_min``) and the point-charge part at ``r``."""
    grid = result.grid
    theta = result.theta * result.lam
    inside = np.clip(r, grid.r_min, grid.r_max)
    R = result.R.smooth(inside)
    return R, theta * phi_sigma(result.sigma, r)


def poisson_weak_residual(result, test_functions: Sequence[Bump] | None = None) -> dict[str, Any]:
    """Residual of ``-int Q Lap psi = int (rho - 1) psi + theta psi(0)``.

    Each bump gives ``|LHS - RHS| / (|LHS| + |RHS| + theta)``; the point
    charge term is integrated against ``Lap psi`` on the same panels, so
    the ``theta psi(0)`` balance is tested numerically.
    """
    bumps = list(test_functions) if test_functions is not None else default_bumps(result.sigma)
    grid = result.grid
    theta = result.theta * result.lam
    per = []
    for bump in bumps:
        if bump.b > grid.r_max:
            raise DomainError(f"test function support ends at {bump.b:g} beyond r_max={grid.r_max:g}")
        r, w = _panel_nodes(grid, bump.a, bump.b)
        psi, dpsi, d2psi = bump.derivatives(r)
        lap = d2psi + 2.0 * dpsi / r
        R, point = _potential_parts(result, r)
        Q = R + point
        rho = result.response.g(np.maximum(Q, 0.0))
        lhs = -_FOUR_PI * float(np.sum(w * Q * lap * r**2))
        rhs = _FOUR_PI * float(np.sum(w * (rho - 1.0) * psi * r**2)) + theta * bump.value_at_origin()
        denom = abs(lhs) + abs(rhs) + theta
        rel = abs(lhs - rhs) / denom if denom > 0 else 0.0
        per.append({"support": [bump.a, bump.b], "lhs": lhs, "rhs": rhs, "residual": rel})
    return {"max_residual": max(p["residual"] for p in per), "per_test_function": per}
