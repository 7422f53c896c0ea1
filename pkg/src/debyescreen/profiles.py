"""Radial velocity profiles ``f0(v) = F(|v|^2 / 2)``.

Three families are supported: the Maxwellian, an algebraic power law and
tabulated samples interpolated with a monotone cubic.  Every constructed
profile is normalised so that ``4 pi int_0^inf sqrt(2 r) F(r) dr = 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InvalidParameterError
from .quadrature import integrate_semi_infinite

__all__ = [
    "VelocityProfile",
    "make_maxwellian",
    "make_power_law",
    "make_tabulated",
    "load_tabulated",
    "profile_from_spec",
    "eval_F",
    "eval_dF",
    "validate_profile",
    "ValidationReport",
    "VALIDATION_GRID",
]

#: energies used to check the standing assumptions on a profile
VALIDATION_GRID = np.logspace(-6, 6, 200)

_NORM_TOL = 1e-12


def _mass_integral(F) -> float:
    # r = u^2 removes the sqrt endpoint behaviour: sqrt(2r) dr = 2 sqrt(2) u^2 du
    value, _ = integrate_semi_infinite(lambda u: 2.0 * math.sqrt(2.0) * u**2 * F(u**2), tol=_NORM_TOL)
    return 4.0 * math.pi * float(value)


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    """Immutable radial profile ``F`` with its derivative.

    Attributes
    ----------
    kind : str
        ``"maxwellian"``, ``"power_law"`` or ``"tabulated"``.
    params : dict
        Family parameters (``T``; ``s`` and ``p``; or the tabulated samples).
    normalization : float
        Prefactor ``A`` multiplying the shape function.
    decay_constant : float
        ``max (1 + r^2)(|F| + |F'|)`` over :data:`VALIDATION_GRID`.
    """

    kind: str
    params: dict[str, Any]
    normalization: float
    decay_constant: float = field(default=float("nan"))
    _interp: Any = field(default=None, repr=False)

    def F(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "maxwellian":
            T = self.params["T"]
            return self.normalization * np.exp(-r / T)
        if self.kind == "power_law":
            s, p = self.params["s"], self.params["p"]
            return self.normalization * (1.0 + r / s) ** (-p)
        return self.normalization * self._interp.value(r)

    def dF(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "maxwellian":
            T = self.params["T"]
            return -self.normalization / T * np.exp(-r / T)
        if self.kind == "power_law":
            s, p = self.params["s"], self.params["p"]
            return -self.normalization * p / s * (1.0 + r / s) ** (-p - 1.0)
        return self.normalization * self._interp.derivative(r)

    def to_spec(self) -> dict[str, Any]:
        """JSON-able description that rebuilds the same profile."""
        if self.kind == "maxwellian":
            return {"kind": "maxwellian", "T": self.params["T"]}
        if self.kind == "power_law":
            return {"kind": "power_law", "s": self.params["s"], "p": self.params["p"]}
        spec = {"kind": "tabulated"}
        if self.params.get("path"):
            spec["path"] = self.params["path"]
        return spec


class _TabulatedShape:
    """Monotone cubic through the samples with an algebraic tail.

    Below the first node the curve is continued linearly with the end
    slope; above the last node by ``F_n ((1 + r_n) / (1 + r))^q`` where
    ``q`` matches the end slope, so the extension stays C^1.
    """

    def __init__(self, r: np.ndarray, F: np.ndarray):
        self.r = r
        self.values = F
        self.pchip = PchipInterpolator(r, F, extrapolate=False)
        self.dpchip = self.pchip.derivative()
        self.r0, self.rn = r[0], r[-1]
        self.F0, self.Fn = F[0], F[-1]
        self.dF0 = float(self.dpchip(self.r0))
        dFn = float(self.dpchip(self.rn))
        self.q = -dFn * (1.0 + self.rn) / self.Fn if self.Fn > 0 else 4.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lo = r < self.r0
        hi = r > self.rn
        mid = ~(lo | hi)
        out[mid] = self.pchip(r[mid])
        out[lo] = self.F0 + self.dF0 * (r[lo] - self.r0)
        out[hi] = self.Fn * ((1.0 + self.rn) / (1.0 + r[hi])) ** self.q
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lo = r < self.r0
        hi = r > self.rn
        mid = ~(lo | hi)
        out[mid] = self.dpchip(r[mid])
        out[lo] = self.dF0
        out[hi] = -self.q * self.Fn * (1.0 + self.rn) ** self.q * (1.0 + r[hi]) ** (-self.q - 1.0)
        return out


def _decay_constant(profile: VelocityProfile) -> float:
    r = VALIDATION_GRID
    return float(np.max((1.0 + r**2) * (np.abs(profile.F(r)) + np.abs(profile.dF(r)))))


def _finish(kind, params, normalization, interp=None) -> VelocityProfile:
    prof = VelocityProfile(kind, params, normalization, _interp=interp)
    object.__setattr__(prof, "decay_constant", _decay_constant(prof))
    return prof


def make_maxwellian(T: float) -> VelocityProfile:
    """Maxwellian at temperature ``T``: ``F(r) = (2 pi T)^(-3/2) exp(-r / T)``."""
    if not (np.isfinite(T) and T > 0):
        raise InvalidParameterError(f"temperature must be positive, got T={T!r}")
    return _finish("maxwellian", {"T": float(T)}, (2.0 * math.pi * T) ** -1.5)


def make_power_law(s: float, p: float) -> VelocityProfile:
    """Algebraic profile ``F(r) = A (1 + r / s)^(-p)``.

    ``A`` is fixed numerically from the mass integral.  Exponents below 3
    are rejected.
    """
    if not (np.isfinite(s) and s > 0):
        raise InvalidParameterError(f"energy scale must be positive, got s={s!r}")
    if not (np.isfinite(p) and p >= 3):
        raise InvalidParameterError(f"power-law exponent must satisfy p >= 3 for decay and normalisation, got p={p!r}")
    mass = _mass_integral(lambda r: (1.0 + r / s) ** (-p))
    return _finish("power_law", {"s": float(s), "p": float(p)}, 1.0 / mass)


def make_tabulated(r, F, path: str | None = None) -> VelocityProfile:
    """Profile interpolated from samples ``(r_i, F_i)``.

    The samples are rescaled so that the profile has unit mass.
    """
    r = np.asarray(r, dtype=float)
    F = np.asarray(F, dtype=float)
    if r.ndim != 1 or r.shape != F.shape or r.size < 3:
        raise InvalidParameterError("tabulated profile needs at least three (r, F) samples")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise InvalidParameterError("tabulated energies must be nonnegative and strictly increasing")
    if np.any(~np.isfinite(F)) or np.any(F < 0):
        raise InvalidParameterError("tabulated F must be finite and nonnegative")
    shape = _TabulatedShape(r, F)
    mass = _mass_integral(shape.value)
    if not mass > 0:
        raise InvalidParameterError("tabulated profile has zero mass")
    params = {"r": r.copy(), "F": F.copy(), "path": path}
    return _finish("tabulated", params, 1.0 / mass, interp=shape)


def load_tabulated(path: str | Path) -> VelocityProfile:
    """Read a two-column CSV (``r,F``; header optional)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise InvalidParameterError(f"{path}: non-numeric row {row!r}") from None
                continue  # header line
    if not rows:
        raise InvalidParameterError(f"{path}: no numeric (r, F) rows found")
    data = np.array(rows)
    return make_tabulated(data[:, 0], data[:, 1], path=str(path))


def profile_from_spec(spec: dict[str, Any], base_dir: Path | None = None) -> VelocityProfile:
    kind = spec.get("kind")
    if kind == "maxwellian":
        return make_maxwellian(spec["T"])
    if kind == "power_law":
        return make_power_law(spec["s"], spec["p"])
    if kind == "tabulated":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_tabulated(path)
    raise InvalidParameterError(f"unknown profile kind {kind!r}")


def eval_F(profile: VelocityProfile, r):
    """``F(r)`` for ``r >= 0``."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("F is defined for nonnegative energies only")
    out = profile.F(arr)
    return float(out) if np.ndim(out) == 0 else out


def eval_dF(profile: VelocityProfile, r):
    """``F'(r)`` for ``r > 0``."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0) or np.any(np.isnan(arr)):
        raise DomainError("F' is evaluated at positive energies only")
    out = profile.dF(arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class ValidationReport:
    checks: list[dict[str, Any]]

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def failed(self) -> list[str]:
        return [c["name"] for c in self.checks if not c["pass"]]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": self.checks}


def validate_profile(
    profile: VelocityProfile,
    norm_tol: float = 1e-8,
    fd_tol: float = 1e-5,
) -> ValidationReport:
    """Check positivity, the Penrose sign, algebraic decay and unit mass.

    Failures are recorded in the report; nothing is raised.
    """
    r = VALIDATION_GRID
    F = profile.F(r)
    dF = profile.dF(r)
    checks = []

    checks.append({"name": "nonnegative", "margin": float(np.min(F)), "pass": bool(np.all(F >= 0))})

    # pointwise sign of F' plus pairwise monotonicity on a dense grid, so
    # a bump between validation nodes is still caught
    dense = np.concatenate([[0.0], np.logspace(-6, 6, 4001)])
    Fd = profile.F(dense)
    worst_rise = float(np.max(np.diff(Fd)))
    positive_F = F > 0
    penrose = bool(np.all(dF[positive_F] < 0) and worst_rise <= 0)
    checks.append(
        {
            "name": "penrose",
            "margin": float(np.max(dF[positive_F])) if positive_F.any() else 0.0,
            "max_increase": worst_rise,
            "pass": penrose,
        }
    )

    weighted = (1.0 + r**2) * (np.abs(F) + np.abs(dF))
    tail = r >= 1e5
    checks.append(
        {
            "name": "algebraic_decay",
            "decay_constant": profile.decay_constant,
            "tail_max": float(np.max(weighted[tail])),
            "pass": bool(
                np.max(weighted) <= profile.decay_constant * (1 + 1e-12)
                and np.max(weighted[tail]) <= np.max(weighted[~tail]) * (1 + 1e-12)
            ),
        }
    )

    mass = _mass_integral(profile.F)
    checks.append({"name": "normalization", "mass": mass, "margin": abs(mass - 1.0), "pass": abs(mass - 1.0) <= norm_tol})

    # central differences at 50 log-spaced interior energies
    rs = np.logspace(-3, 2, 50)
    hstep = 1e-4 * np.minimum(rs, 1.0)
    fd = (profile.F(rs + hstep) - profile.F(rs - hstep)) / (2 * hstep)
    scale = np.maximum(np.abs(profile.dF(rs)), 1e-300)
    fd_err = float(np.max(np.abs(fd - profile.dF(rs)) / scale))
    checks.append({"name": "derivative_consistency", "margin": fd_err, "pass": fd_err <= fd_tol})

    if profile.kind == "tabulated":
        has_origin = bool(profile.params["r"][0] == 0.0)
        # flagged, not failed: F(0) is then a linear extrapolation
        checks.append({"name": "origin_sample", "pass": True, "warning": not has_origin})
    return ValidationReport(checks)
