"""Screening response ``g`` of a velocity profile and the remainder ``B``.

``g(y)`` is the density of a plasma sitting in a potential offset ``y``.
All integrals are taken in the velocity variable ``u = sqrt(r)``, which
turns the ``r^(-1/2)`` endpoint of the derivative formulas into a smooth
integrand::

    g(y)   =  4 pi 2 sqrt(2) int u^2 F(y + u^2) du
    g'(y)  = -4 pi   sqrt(2) int     F(y + u^2) du
    g''(y) = -4 pi   sqrt(2) int    F'(y + u^2) du
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, PenroseViolationError
from .grid import RadialField
from .profiles import VelocityProfile
from .quadrature import gauss_legendre, integrate_semi_infinite

logger = logging.getLogger(__name__)

__all__ = [
    "ScreeningResponse",
    "build_response",
    "compute_g",
    "compute_g_prime",
    "compute_g_prime_by_parts",
    "compute_g_doubleprime",
    "compute_sigma",
    "apply_B",
]

_QUAD_TOL = 1e-12
_FOUR_PI = 4.0 * math.pi
_SQRT2 = math.sqrt(2.0)
TABLE_SIZE = 2000
#: below this offset b and b' are integrated from g'' to avoid cancellation
_SMALL_Y = 1.0
TABLE_YMIN = 1e-8


def _as_y(y):
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("screening response is defined for finite y >= 0")
    return arr


def _vector_quad(profile, weight, y, tol=_QUAD_TOL):
    """``int_0^inf weight(y, u) du`` for every entry of ``y``."""
    if profile.kind == "tabulated":
        return _piecewise_quad(profile._interp.r, weight, y, tol)
    value, _ = integrate_semi_infinite(lambda u: weight(y[:, None], u[None, :]), tol=tol)
    return value


def _piecewise_quad(knots, weight, y, tol, order=6, chunk_nodes=3_000_000):
    """Same integral for a profile that is a cubic between ``knots``.

    Between consecutive ``u_k = sqrt(r_k - y)`` the integrand is a
    polynomial in ``u`` of degree at most 8, which ``order``-point Gauss
    integrates exactly; adaptive bisection would stall on the kinks of
    the interpolant's second derivative.  Beyond the last knot the
    algebraic tail is smooth and the adaptive rule takes over.
    """
    x, w = gauss_legendre(order)
    out = np.empty(y.size)
    step = max(1, chunk_nodes // (order * (knots.size + 1)))
    for start in range(0, y.size, step):
        Y = y[start : start + step]
        U = np.sqrt(np.clip(knots[None, :] - Y[:, None], 0.0, None))
        edges = np.concatenate([np.zeros((Y.size, 1)), U], axis=1)
        half = 0.5 * np.diff(edges, axis=1)
        nodes = edges[:, :-1, None] + half[:, :, None] * (x + 1.0)
        inner = np.einsum("mk,mkj,j->m", half, weight(Y[:, None, None], nodes), w)
        last = U[:, -1]
        tail, _ = integrate_semi_infinite(lambda s: weight(Y[:, None], last[:, None] + s[None, :]), tol=tol)
        out[start : start + step] = inner + tail
    return out


def _scalar_or_array(y_in, out):
    return float(out[0]) if np.ndim(y_in) == 0 else out


def compute_g(profile: VelocityProfile, y):
    """Density ``g(y) = int F(y + |v|^2/2) dv``."""
    yy = _as_y(y)
    out = _FOUR_PI * 2.0 * _SQRT2 * _vector_quad(profile, lambda Y, u: u**2 * profile.F(Y + u**2), yy)
    return _scalar_or_array(y, out)


def compute_g_prime(profile: VelocityProfile, y):
    """``g'(y)`` from the ``-(2r)^(-1/2) F(y + r)`` integral."""
    yy = _as_y(y)
    out = -_FOUR_PI * _SQRT2 * _vector_quad(profile, lambda Y, u: profile.F(Y + u**2) + 0.0 * u, yy)
    return _scalar_or_array(y, out)


def compute_g_prime_by_parts(profile: VelocityProfile, y):
    """``g'(y) = 4 pi int sqrt(2r) F'(y + r) dr``, differentiating under the integral."""
    yy = _as_y(y)
    out = _FOUR_PI * 2.0 * _SQRT2 * _vector_quad(profile, lambda Y, u: u**2 * _dF_safe(profile, Y + u**2), yy)
    return _scalar_or_array(y, out)


def compute_g_doubleprime(profile: VelocityProfile, y):
    """``g''(y)`` from the ``-(2r)^(-1/2) F'(y + r)`` integral."""
    yy = _as_y(y)
    out = -_FOUR_PI * _SQRT2 * _vector_quad(profile, lambda Y, u: _dF_safe(profile, Y + u**2), yy)
    return _scalar_or_array(y, out)


def _dF_safe(profile, r):
    # the quadrature never samples r = 0 exactly unless y = 0 and u = 0;
    # F is C^1 up to the origin for every supported family
    return profile.dF(np.maximum(r, 0.0))


def compute_sigma(profile: VelocityProfile) -> float:
    """Mass ``sigma = -g'(0)``; raises if it is not positive."""
    sigma = -compute_g_prime(profile, 0.0)
    if not sigma > 0:
        raise PenroseViolationError(f"sigma = {sigma!r} is not positive")
    return float(sigma)


@dataclass(frozen=True, eq=False)
class ScreeningResponse:
    """Tabulated ``g`` with its first two derivatives.

    Values on ``[TABLE_YMIN, y_max]`` come from cubic Hermite interpolation
    (slopes are the exact derivatives); below the table the quadratic
    Taylor polynomial is used and above it the quadrature is evaluated
    directly.

    Attributes
    ----------
    sigma : float
        ``-g'(0)``.
    gpp0 : float
        ``g''(0)``.
    lip_b, gpp_max : float
        ``sigma + sup|g'|`` and ``sup g''`` over the table.
    """

    profile: VelocityProfile
    sigma: float
    gpp0: float
    y: np.ndarray
    g_table: np.ndarray
    gp_table: np.ndarray
    gpp_table: np.ndarray
    lip_b: float
    gpp_max: float
    _g: Any = field(repr=False, default=None)
    _gp: Any = field(repr=False, default=None)
    _b: Any = field(repr=False, default=None)
    _bp: Any = field(repr=False, default=None)

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    @property
    def b_table(self) -> np.ndarray:
        return self.g_table - 1.0 + self.sigma * self.y

    @property
    def bound_constant(self) -> float:
        """Constant ``C`` of ``B[Q] <= C Q^2 / (1 + Q)``."""
        return max(2.0 * self.lip_b, self.gpp_max * (3.0 + 2.0 * self.lip_b / self.gpp_max))

    def _dispatch(self, y, table_fn, small_fn, direct_fn):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        lo = y < self.y[0]
        hi = y > self.y[-1]
        mid = ~(lo | hi)
        out[mid] = table_fn(y[mid])
        if lo.any():
            out[lo] = small_fn(y[lo])
        if hi.any():
            logger.debug("%d points beyond the g table (y_max=%g); direct quadrature", hi.sum(), self.y[-1])
            out[hi] = direct_fn(y[hi])
        return out

    def g(self, y):
        """``g(y)`` for ``y >= 0``."""
        return self._dispatch(
            y,
            lambda v: np.clip(self._g(v), 0.0, 1.0),
            lambda v: 1.0 - self.sigma * v + 0.5 * self.gpp0 * v**2,
            lambda v: compute_g(self.profile, v),
        )

    def g_prime(self, y):
        return self._dispatch(
            y,
            self._gp,
            lambda v: -self.sigma + self.gpp0 * v,
            lambda v: compute_g_prime(self.profile, v),
        )

    def b(self, y):
        """Convex remainder ``g(y) - 1 + sigma y`` (nonnegative)."""
        return self._dispatch(
            y,
            lambda v: np.maximum(self._b(v), 0.0),
            lambda v: 0.5 * self.gpp0 * v**2,
            lambda v: compute_g(self.profile, v) - 1.0 + self.sigma * v,
        )

    def b_prime(self, y):
        return self._dispatch(
            y,
            self._bp,
            lambda v: self.gpp0 * v,
            lambda v: compute_g_prime(self.profile, v) + self.sigma,
        )

    def summary(self) -> dict[str, float]:
        return {"sigma": self.sigma, "lip_b": self.lip_b, "gpp_max": self.gpp_max}


def build_response(profile: VelocityProfile, y_max: float = 100.0, n: int = TABLE_SIZE) -> ScreeningResponse:
    """Tabulate ``g, g', g''`` on ``n`` log-spaced nodes up to ``y_max``."""
    sigma = compute_sigma(profile)
    gpp0 = float(compute_g_doubleprime(profile, 0.0))
    y_max = max(float(y_max), 10.0 * TABLE_YMIN)
    y = np.logspace(math.log10(TABLE_YMIN), math.log10(y_max), n)
    g = compute_g(profile, y)
    gp = compute_g_prime(profile, y)
    gpp = compute_g_doubleprime(profile, y)
    # g'' underflows to 0 far out for fast-decaying profiles
    if np.any(gpp < 0) or np.any(gpp[g > 1e-250] <= 0):
        raise PenroseViolationError("g is not strictly convex on the table")
    b = g - 1.0 + sigma * y
    bp = gp + sigma
    small = y <= _SMALL_Y
    b[small], bp[small] = _remainder_from_curvature(profile, y[small])
    lip_b = sigma + float(np.max(np.abs(gp)))
    gpp_max = max(float(np.max(gpp)), gpp0)
    return ScreeningResponse(
        profile=profile,
        sigma=sigma,
        gpp0=gpp0,
        y=y,
        g_table=g,
        gp_table=gp,
        gpp_table=gpp,
        lip_b=lip_b,
        gpp_max=gpp_max,
        _g=CubicHermiteSpline(y, g, gp),
        _gp=CubicHermiteSpline(y, gp, gpp),
        _b=CubicHermiteSpline(y, b, bp),
        _bp=CubicHermiteSpline(y, bp, gpp),
    )


def _remainder_from_curvature(profile, y, order=32):
    """``b(y) = int_0^y (y - t) g''(t) dt`` and ``b'(y) = int_0^y g''(t) dt``."""
    x, w = gauss_legendre(order)
    t = 0.5 * y[:, None] * (x[None, :] + 1.0)
    gpp = compute_g_doubleprime(profile, t.ravel()).reshape(t.shape)
    half = 0.5 * y
    bp = half * (gpp @ w)
    b = half * (((y[:, None] - t) * gpp) @ w)
    return b, bp


def apply_B(response: ScreeningResponse, field):
    """Pointwise ``B[Q] = g(Q_+) - 1 + sigma Q_+``.

    Accepts a :class:`~debyescreen.grid.RadialField` or an array and
    returns the same kind.
    """
    values = field.values if isinstance(field, RadialField) else np.asarray(field, dtype=float)
    if np.any(~np.isfinite(values)):
        raise DomainError("B is applied to finite fields only")
    out = response.b(np.maximum(values, 0.0))
    return field.with_values(out) if isinstance(field, RadialField) else out
