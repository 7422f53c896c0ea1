"""Log-spaced radial grids and fields sampled on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import DomainError, InvalidParameterError

__all__ = ["RadialGrid", "RadialField", "DEFAULT_N", "DEFAULT_RMIN_MULT", "DEFAULT_RMAX_MULT"]

DEFAULT_N = 2000
#: grid ends in units of the screening length 1/sqrt(sigma)
DEFAULT_RMIN_MULT = 1e-4
DEFAULT_RMAX_MULT = 30.0


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes ``r_1 < ... < r_n`` uniformly spaced in ``log r``.

    ``weights`` is the trapezoid rule in ``r`` on ``[r_1, r_n]``.
    ``kernel_weights`` is the trapezoid rule in ``log r`` (``h r_j``)
    with the cell ``[0, r_1]`` folded into the first node; the Green
    operators use it.
    """

    r: np.ndarray
    h: float
    weights: np.ndarray = field(repr=False)
    kernel_weights: np.ndarray = field(repr=False)

    @classmethod
    def log_spaced(cls, n: int, r_min: float, r_max: float) -> "RadialGrid":
        if n < 3:
            raise InvalidParameterError("a radial grid needs at least 3 nodes")
        if not (0 < r_min < r_max) or not math.isfinite(r_max):
            raise InvalidParameterError(f"need 0 < r_min < r_max, got {r_min!r}, {r_max!r}")
        x = np.linspace(math.log(r_min), math.log(r_max), n)
        r = np.exp(x)
        r[0], r[-1] = r_min, r_max
        h = (x[-1] - x[0]) / (n - 1)
        dr = np.diff(r)
        w = np.zeros(n)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        kw = h * r
        kw[0] = 0.5 * h * r[0] + 0.5 * r[0]
        kw[-1] = 0.5 * h * r[-1]
        for arr in (r, w, kw):
            arr.setflags(write=False)
        return cls(r, h, w, kw)

    @classmethod
    def for_sigma(
        cls,
        sigma: float,
        n: int = DEFAULT_N,
        r_min_mult: float = DEFAULT_RMIN_MULT,
        r_max_mult: float = DEFAULT_RMAX_MULT,
    ) -> "RadialGrid":
        """Grid on ``[r_min_mult, r_max_mult] / sqrt(sigma)``."""
        lam = 1.0 / math.sqrt(sigma)
        return cls.log_spaced(n, r_min_mult * lam, r_max_mult * lam)

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def refined(self) -> "RadialGrid":
        """Same interval with the log step halved."""
        return RadialGrid.log_spaced(2 * self.n - 1, self.r_min, self.r_max)

    def integrate_volume(self, values) -> float:
        """``4 pi int u(r) r^2 dr`` by the trapezoid weights."""
        return float(4.0 * math.pi * np.dot(self.weights, np.asarray(values) * self.r**2))

    def same_as(self, other: "RadialGrid") -> bool:
        return self.n == other.n and np.array_equal(self.r, other.r)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values of a radial function at the nodes of a grid.

    ``tail_rate`` selects the model used beyond ``r_max``: ``None`` means
    evaluation there is an error, a positive number continues the field
    as ``u_n (r_n / r) exp(-rate (r - r_n))``.
    """

    grid: RadialGrid
    values: np.ndarray
    tail_rate: float | None = None
    _interp: object = field(default=None, repr=False)
    _spline: object = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.r.shape:
            raise InvalidParameterError("field values do not match the grid")
        if np.any(~np.isfinite(vals)):
            raise InvalidParameterError("field values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "RadialField":
        return RadialField(self.grid, values, self.tail_rate)

    def with_tail(self, rate: float | None) -> "RadialField":
        return RadialField(self.grid, self.values, rate)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        g = self.grid
        if np.any(r < g.r_min * (1 - 1e-12)):
            raise DomainError(f"field evaluated below r_min={g.r_min}")
        beyond = r > g.r_max
        if beyond.any() and self.tail_rate is None:
            raise DomainError(f"field evaluated beyond r_max={g.r_max} without a tail model")
        if self._interp is None:
            object.__setattr__(self, "_interp", PchipInterpolator(np.log(g.r), self.values))
        out = np.empty_like(r)
        inside = ~beyond
        out[inside] = self._interp(np.log(np.clip(r[inside], g.r_min, g.r_max)))
        if beyond.any():
            rb = r[beyond]
            out[beyond] = self.values[-1] * (g.r_max / rb) * np.exp(-self.tail_rate * (rb - g.r_max))
        return out if out.ndim else float(out)

    def _cubic(self):
        if self._spline is None:
            object.__setattr__(self, "_spline", CubicSpline(np.log(self.grid.r), self.values))
        return self._spline

    def smooth(self, r):
        """Not-a-knot cubic spline in ``log r``; higher order than ``__call__``."""
        r = self._check_inside(r)
        return self._cubic()(np.log(r))

    def smooth_derivative(self, r):
        """``du/dr`` from the same spline."""
        r = self._check_inside(r)
        return self._cubic()(np.log(r), 1) / r

    def _check_inside(self, r):
        r = np.asarray(r, dtype=float)
        g = self.grid
        if np.any(r < g.r_min * (1 - 1e-12)) or np.any(r > g.r_max * (1 + 1e-12)):
            raise DomainError(f"spline evaluation outside [{g.r_min}, {g.r_max}]")
        return np.clip(r, g.r_min, g.r_max)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))
