"""Run configuration: a strict JSON schema with every default written out.

A minimal file needs only the profile and the charge::

    {"profile": {"kind": "maxwellian", "T": 1.0}, "theta": 1.0}

After loading, every field is present in :meth:`RunConfig.to_dict`, so
the serialised form of a loaded config reloads to the same object.
Unknown keys are rejected by name.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError, DebyeError
from .grid import DEFAULT_N, DEFAULT_RMAX_MULT, DEFAULT_RMIN_MULT
from .solver import SolverConfig

__all__ = ["RunConfig", "load_config", "parse_config", "PROFILE_FIELDS"]

#: allowed keys per profile kind (besides "kind")
PROFILE_FIELDS = {
    "maxwellian": {"T"},
    "power_law": {"s", "p"},
    "tabulated": {"path"},
}


@dataclass(frozen=True)
class SolverSection:
    damping: float = 1.0
    tol: float = 1e-10
    max_iter: int = 10000
    continuation: str = "auto"
    continuation_steps: int = 8


@dataclass(frozen=True)
class GridSection:
    """Grid extent in screening lengths ``1/sqrt(sigma)``."""

    n: int = DEFAULT_N
    r_min: float = DEFAULT_RMIN_MULT
    r_max: float = DEFAULT_RMAX_MULT


@dataclass(frozen=True)
class SweepSection:
    thetas: tuple[float, ...] = (0.1, 1.0, 10.0)
    temperatures: tuple[float, ...] = ()
    workers: int = 1


@dataclass(frozen=True)
class PhaseSection:
    """Product grid for the ``phase`` output, in screening lengths and thermal speeds."""

    radii: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
    speeds: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0)
    probe: float = DEFAULT_RMAX_MULT


@dataclass(frozen=True)
class GfunSection:
    y_max: float = 20.0
    n: int = 200


_SECTIONS = {
    "solver": SolverSection,
    "grid": GridSection,
    "sweep": SweepSection,
    "phase": PhaseSection,
    "gfun": GfunSection,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs, fully defaulted."""

    profile: dict[str, Any]
    theta: float
    solver: SolverSection = field(default_factory=SolverSection)
    grid: GridSection = field(default_factory=GridSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    phase: PhaseSection = field(default_factory=PhaseSection)
    gfun: GfunSection = field(default_factory=GfunSection)
    fit_window: tuple[float, float] = (5.0, 15.0)
    emit_plots: bool = False
    base_dir: str | None = field(default=None, compare=False)

    def solver_config(self, theta: float | None = None) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            theta=self.theta if theta is None else theta,
            damping=s.damping,
            tol=s.tol,
            max_iter=s.max_iter,
            continuation=s.continuation,
            continuation_steps=s.continuation_steps,
            n=self.grid.n,
            r_min_mult=self.grid.r_min,
            r_max_mult=self.grid.r_max,
        )

    def with_profile(self, profile: dict[str, Any], theta: float | None = None) -> "RunConfig":
        data = self.to_dict()
        data["profile"] = dict(profile)
        if theta is not None:
            data["theta"] = theta
        return parse_config(data, base_dir=self.base_dir)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("base_dir")
        return _lists(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _lists(obj):
    if isinstance(obj, dict):
        return {k: _lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_lists(v) for v in obj]
    return obj


def _number(where: str, value, *, integer=False, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    value = int(value) if integer else float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    if nonnegative and value < 0:
        raise ConfigError(f"{where}: must be nonnegative, got {value!r}")
    return value


def _section(name: str, raw) -> Any:
    cls = _SECTIONS[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown field {name}.{unknown[0]}")
    values = {}
    for key, value in raw.items():
        where = f"{name}.{key}"
        default = getattr(cls(), key)
        if isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(f"{where}: expected a list")
            values[key] = tuple(_number(f"{where}[{i}]", v, positive=key != "speeds", nonnegative=True) for i, v in enumerate(value))
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"{where}: expected a string")
            values[key] = value
        else:
            values[key] = _number(where, value, integer=isinstance(default, int), positive=True)
    return cls(**values)


def _profile(raw) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError("profile: expected an object")
    kind = raw.get("kind")
    if kind not in PROFILE_FIELDS:
        raise ConfigError(f"profile.kind: unknown profile kind {kind!r}")
    unknown = sorted(set(raw) - PROFILE_FIELDS[kind] - {"kind"})
    if unknown:
        raise ConfigError(f"unknown field profile.{unknown[0]}")
    missing = sorted(PROFILE_FIELDS[kind] - set(raw))
    if missing:
        raise ConfigError(f"profile.{missing[0]}: required for kind {kind!r}")
    out = {"kind": kind}
    for key in sorted(PROFILE_FIELDS[kind]):
        if key == "path":
            if not isinstance(raw[key], str):
                raise ConfigError("profile.path: expected a string")
            out[key] = raw[key]
        else:
            out[key] = _number(f"profile.{key}", raw[key], positive=True)
    if kind == "power_law" and out["p"] < 3:
        raise ConfigError("profile.p: the power-law exponent must be at least 3")
    return out


def parse_config(data: Any, base_dir: str | Path | None = None) -> RunConfig:
    """Validate a decoded JSON object and fill in all defaults."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    allowed = {f.name for f in fields(RunConfig)} - {"base_dir"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]}")
    for required in ("profile", "theta"):
        if required not in data:
            raise ConfigError(f"{required}: required field is missing")
    theta = _number("theta", data["theta"])
    if not theta > 0:
        raise ConfigError("theta: repulsive case requires theta > 0")
    kwargs: dict[str, Any] = {"profile": _profile(data["profile"]), "theta": theta}
    for name in _SECTIONS:
        if name in data:
            kwargs[name] = _section(name, data[name])
    if "fit_window" in data:
        win = data["fit_window"]
        if not (isinstance(win, list) and len(win) == 2):
            raise ConfigError("fit_window: expected [start, end] in screening lengths")
        lo, hi = (_number(f"fit_window[{i}]", v, positive=True) for i, v in enumerate(win))
        if not lo < hi:
            raise ConfigError("fit_window: start must be below end")
        kwargs["fit_window"] = (lo, hi)
    if "emit_plots" in data:
        if not isinstance(data["emit_plots"], bool):
            raise ConfigError("emit_plots: expected true or false")
        kwargs["emit_plots"] = data["emit_plots"]
    cfg = RunConfig(**kwargs, base_dir=None if base_dir is None else str(base_dir))
    if cfg.solver.continuation not in ("auto", "none", "theta_steps", "lambda_steps"):
        raise ConfigError(f"solver.continuation: unknown mode {cfg.solver.continuation!r}")
    if cfg.grid.r_max < 10:
        raise ConfigError("grid.r_max: must be at least 10 screening lengths")
    if not cfg.grid.r_min < cfg.grid.r_max:
        raise ConfigError("grid.r_min: must lie below grid.r_max")
    if not cfg.solver.damping <= 1:
        raise ConfigError("solver.damping: must lie in (0, 1]")
    if cfg.phase.probe > cfg.grid.r_max:
        raise ConfigError("phase.probe: must not exceed grid.r_max")
    try:
        cfg.solver_config()
    except DebyeError as exc:  # pragma: no cover - guarded above
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file.

    Raises
    ------
    ConfigError
        On a missing file, malformed JSON (the message carries line and
        column) or a semantic problem (the message names the field).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data, base_dir=path.resolve().parent)
