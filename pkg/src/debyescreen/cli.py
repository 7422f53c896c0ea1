"""Command line interface: ``solve``, ``sweep``, ``verify``, ``gfun`` and ``phase``.

Exit codes
----------
0  success
2  a verification check failed (the report names it)
3  the solver did not converge, or the grid is too small
4  the configuration is invalid

Every subcommand writes into ``--out`` atomically: outputs are assembled
in a scratch directory and moved into place at the end.
"""

from __future__ import annotations

import argparse
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_config
from .diagnostics import (
    check_charge_neutrality,
    check_pointwise_bounds,
    fit_decay_rate,
    poisson_weak_residual,
)
from .errors import ConfigError, InvalidParameterError, NumericalError, PenroseViolationError
from .green import phi_sigma
from .io import atomic_directory, read_fields, write_csv, write_fields, write_json, write_plots
from .phase_space import (
    KineticState,
    boundary_bound,
    boundary_check,
    consistency_rho,
    default_phase_tests,
    monotone_in_r,
    phase_table,
    vlasov_weak_residual,
)
from .profiles import profile_from_spec
from .response import compute_g, compute_g_doubleprime, compute_g_prime
from .solver import SolveResult, prepare, result_from_fields, solve

logger = logging.getLogger("debyescreen")

__all__ = ["main", "run", "EXIT_OK", "EXIT_VERIFY", "EXIT_SOLVER", "EXIT_CONFIG"]

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4

#: thresholds applied by ``verify`` and ``phase``
NEUTRALITY_TOL = 1e-3
POISSON_TOL = 1e-6
VLASOV_TOL = 1e-5
RHO_CONSISTENCY_TOL = 1e-7
#: stored Q and rho must match R exactly up to rounding
COLUMN_TOL = 1e-12


def _profile(cfg: RunConfig):
    base = Path(cfg.base_dir) if cfg.base_dir else None
    try:
        return profile_from_spec(cfg.profile, base_dir=base)
    except (PenroseViolationError, InvalidParameterError, OSError) as exc:
        raise ConfigError(f"profile: {exc}") from exc


def _prepare(profile, cfg: RunConfig, theta_max: float | None = None):
    try:
        return prepare(profile, cfg.solver_config(), theta_max=theta_max)
    except (PenroseViolationError, InvalidParameterError) as exc:
        raise ConfigError(f"profile: {exc}") from exc


def _metadata(command: str) -> dict[str, Any]:
    return {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _windowed(result: SolveResult, cfg: RunConfig) -> SolveResult:
    """Refit decay and bounds when the config asks for a non-default window."""
    if tuple(cfg.fit_window) != (5.0, 15.0) and result.theta > 0:
        result.fitted_decay_rate = fit_decay_rate(result.Q, result.sigma, cfg.fit_window)[0]
        result.bounds_report = check_pointwise_bounds(result, cfg.fit_window).to_dict()
    return result


def _summary(result: SolveResult) -> dict[str, Any]:
    out = result.summary()
    out["charge_neutrality_deficit"] = check_charge_neutrality(result)
    out["grid"] = {"n": result.grid.n, "r_min": result.grid.r_min, "r_max": result.grid.r_max}
    return out


def _write_solve(directory: Path, result: SolveResult, cfg: RunConfig, command: str) -> None:
    write_fields(directory / "fields.csv", result)
    write_json(directory / "summary.json", _summary(result))
    write_json(directory / "config.json", cfg.to_dict())
    write_json(directory / "residuals.json", {"residual_history": result.residual_history})
    write_json(directory / "metadata.json", _metadata(command))
    if cfg.emit_plots:
        write_plots(directory, result)


# ---------------------------------------------------------------- solve


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    profile = _profile(cfg)
    response, grid = _prepare(profile, cfg)
    result = _windowed(solve(profile, cfg.solver_config(), response=response, grid=grid), cfg)
    with atomic_directory(out) as tmp:
        _write_solve(tmp, result, cfg, "solve")
    logger.info("wrote %s (sigma=%.6g, %d iterations)", out, result.sigma, result.iterations)
    failed = [c["name"] for c in result.bounds_report.get("checks", []) if not c["pass"]]
    if failed:
        logger.error("bounds check failed: %s", ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _verify_directory(directory: Path) -> dict[str, Any]:
    cfg = load_config(directory / "config.json")
    profile = _profile(cfg)
    response, grid = _prepare(profile, cfg)
    fields = read_fields(directory / "fields.csv")
    checks: list[dict[str, Any]] = []

    def add(name, value, limit, passed=None):
        ok = bool(value <= limit) if passed is None else bool(passed)
        checks.append({"name": name, "value": value, "limit": limit, "pass": ok})

    if fields["r"].shape != grid.r.shape or not np.array_equal(fields["r"], grid.r):
        add("grid", float("inf"), 0.0, False)
        return {"checks": checks, "pass": False}
    add("grid", 0.0, 0.0, True)

    result = result_from_fields(profile, cfg.solver_config(), fields["R"], response=response, grid=grid)
    result = _windowed(result, cfg)
    theta = cfg.theta
    phi = phi_sigma(result.sigma, grid.r)
    q_expected = fields["R"] + theta * phi
    scale = float(np.max(np.abs(q_expected)))
    add("Q_column", float(np.max(np.abs(fields["Q"] - q_expected))) / scale, COLUMN_TOL)
    add("rho_column", float(np.max(np.abs(fields["rho"] - response.g(np.maximum(q_expected, 0.0))))), COLUMN_TOL)
    add("fixed_point_residual", result.final_residual, 100.0 * cfg.solver.tol)
    for check in result.bounds_report.get("checks", []):
        add(f"bounds.{check['name']}", check["max_violation"], 0.0, check["pass"])
    add("charge_neutrality", check_charge_neutrality(result), NEUTRALITY_TOL)
    add("poisson_weak_residual", poisson_weak_residual(result)["max_residual"], POISSON_TOL)
    rate, r2 = fit_decay_rate(result.Q, result.sigma, cfg.fit_window)
    add("decay_rate", abs(rate - math.sqrt(result.sigma)) / math.sqrt(result.sigma), 0.02)
    return {
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "sigma": result.sigma,
        "fitted_decay_rate": rate,
        "fit_r_squared": r2,
        "bounds_constants": result.bounds_report.get("constants", {}),
    }


def cmd_verify(cfg: RunConfig | None, out: Path) -> int:
    if not (out / "fields.csv").exists():
        raise ConfigError(f"{out}: no fields.csv to verify")
    report = _verify_directory(out)
    write_json(out / "bounds_report.json", report)
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    if failed:
        logger.error("verification failed: %s", ", ".join(failed))
        return EXIT_VERIFY
    logger.info("verification passed (%d checks)", len(report["checks"]))
    return EXIT_OK


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class _Job:
    config: dict[str, Any]
    base_dir: str | None
    theta_max: float
    name: str


def _sweep_job(job: _Job):
    cfg = parse_config(job.config, base_dir=job.base_dir)
    profile = _profile(cfg)
    response, grid = _prepare(profile, cfg, theta_max=job.theta_max)
    result = _windowed(solve(profile, cfg.solver_config(), response=response, grid=grid), cfg)
    return job.name, result.Q.values, result


def _tag(value: float) -> str:
    return repr(float(value)).replace("-", "m")


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    profiles = [cfg.profile]
    if cfg.sweep.temperatures:
        profiles = [{"kind": "maxwellian", "T": T} for T in cfg.sweep.temperatures]
    thetas = sorted(set(cfg.sweep.thetas) | {1.0})
    jobs = []
    for spec in profiles:
        label = "_".join(f"{k}{_tag(v)}" for k, v in spec.items() if k != "kind" and k != "path") or "tabulated"
        for th in thetas:
            sub = cfg.with_profile(spec, theta=th)
            jobs.append(_Job(sub.to_dict(), cfg.base_dir, max(thetas), f"{spec['kind']}_{label}/theta{_tag(th)}"))
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            outcomes = list(pool.map(_sweep_job, jobs))
    else:
        outcomes = [_sweep_job(job) for job in jobs]

    comparison: dict[str, Any] = {}
    by_profile: dict[str, dict[float, np.ndarray]] = {}
    for job, (name, Q, result) in zip(jobs, outcomes):
        by_profile.setdefault(name.split("/")[0], {})[result.theta] = Q
    for key, table in by_profile.items():
        q1 = table[1.0]
        records = []
        for th in sorted(table):
            excess = table[th] - th * q1
            violation = max(float(np.max(excess)), 0.0)
            records.append(
                {
                    "theta": th,
                    "max_violation": violation,
                    "pass": violation <= 1e-8 * th,
                    # convexity gives the opposite ordering once theta exceeds 1
                    "reverse_holds": bool(np.all(excess >= -1e-8 * th)) if th > 1 else None,
                }
            )
        comparison[key] = records

    failed_bounds = []
    with atomic_directory(out) as tmp:
        for job, (name, _, result) in zip(jobs, outcomes):
            if result.theta not in cfg.sweep.thetas:
                continue
            sub = tmp / name
            sub.mkdir(parents=True, exist_ok=True)
            _write_solve(sub, result, parse_config(job.config, base_dir=job.base_dir), "sweep")
            failed_bounds += [f"{name}:{c['name']}" for c in result.bounds_report.get("checks", []) if not c["pass"]]
        write_json(tmp / "comparison_report.json", comparison)
        write_json(tmp / "config.json", cfg.to_dict())
        write_json(tmp / "metadata.json", _metadata("sweep"))
    if failed_bounds:
        logger.error("bounds checks failed: %s", ", ".join(failed_bounds))
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------- gfun


def cmd_gfun(cfg: RunConfig, out: Path) -> int:
    profile = _profile(cfg)
    response, _ = _prepare(profile, cfg)
    y = np.linspace(0.0, cfg.gfun.y_max, cfg.gfun.n)
    g = compute_g(profile, y)
    gp = compute_g_prime(profile, y)
    gpp = compute_g_doubleprime(profile, y)
    b = response.b(y)
    header = {
        "sigma": response.sigma,
        "lip_b": response.lip_b,
        "gpp_max": response.gpp_max,
        "bound_constant": response.bound_constant,
        "profile": cfg.profile,
    }
    with atomic_directory(out) as tmp:
        write_csv(tmp / "gfun.csv", ("y", "g", "g_prime", "g_doubleprime", "b"), [y, g, gp, gpp, b])
        write_json(tmp / "gfun.json", header)
        write_json(tmp / "config.json", cfg.to_dict())
        write_json(tmp / "metadata.json", _metadata("gfun"))
    return EXIT_OK


# ---------------------------------------------------------------- phase


def cmd_phase(cfg: RunConfig, out: Path) -> int:
    profile = _profile(cfg)
    response, grid = _prepare(profile, cfg)
    result = solve(profile, cfg.solver_config(), response=response, grid=grid)
    state = KineticState(result)
    lam = 1.0 / math.sqrt(result.sigma)
    radii = np.array([m * lam for m in cfg.phase.radii if grid.r_min <= m * lam <= grid.r_max])
    speeds = np.array(cfg.phase.speeds) * state.thermal_speed
    table = phase_table(state, radii, speeds)
    rr, ww = np.meshgrid(radii, speeds, indexing="ij")
    f0 = np.broadcast_to(state.f0(speeds)[None, :], table.shape)
    probe = min(cfg.phase.probe * lam, grid.r_max)
    dipole = vlasov_weak_residual(state, default_phase_tests(result.sigma, "dipole"))
    radial = vlasov_weak_residual(state, default_phase_tests(result.sigma, "radial"))
    rho_dev = consistency_rho(state)
    deviation = boundary_check(state, probe)
    bound = boundary_bound(state, probe)
    mono = monotone_in_r(state)
    summary = {
        "sigma": result.sigma,
        "theta": result.theta,
        "rho_consistency": rho_dev["max_deviation"],
        "vlasov_dipole_residual": dipole["max_residual"],
        "vlasov_radial_residual": radial["max_residual"],
        "boundary_probe_r": probe,
        "boundary_deviation": deviation,
        "boundary_bound": bound,
        "monotone_in_r": mono,
        "checks": {
            "rho_consistency": rho_dev["max_deviation"] <= RHO_CONSISTENCY_TOL,
            "vlasov_dipole": dipole["max_residual"] <= VLASOV_TOL,
            # the mean-value bound is exact arithmetic; F itself rounds at a few ulp
            "boundary": deviation <= bound * (1 + 1e-6) + 64 * np.finfo(float).eps * float(np.max(state.f0(speeds))),
            "monotone_in_r": mono["pass"],
        },
    }
    with atomic_directory(out) as tmp:
        write_csv(tmp / "phase.csv", ("r", "speed", "f", "f0"), [rr, ww, table, f0])
        write_json(tmp / "phase_summary.json", summary)
        write_json(tmp / "config.json", cfg.to_dict())
        write_json(tmp / "metadata.json", _metadata("phase"))
    failed = [k for k, ok in summary["checks"].items() if not ok]
    if failed:
        logger.error("phase-space checks failed: %s", ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------- entry points

_COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "gfun": cmd_gfun, "phase": cmd_phase}


def run(config: RunConfig | None, command: str, out: str | Path) -> int:
    """Execute one subcommand and map failures to exit codes."""
    out = Path(out)
    try:
        if command == "verify":
            return cmd_verify(config, out)
        if config is None:
            raise ConfigError(f"{command} needs --config")
        return _COMMANDS[command](config, out)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debyescreen", description="Screened point charge in a Vlasov-Poisson plasma.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve for Q, R and rho and write fields.csv and summary.json",
        "sweep": "solve over lists of theta (and temperatures) with a comparison report",
        "verify": "re-check a solve output directory and write bounds_report.json",
        "gfun": "tabulate the screening response g and its derivatives",
        "phase": "evaluate f(r, |v|) and the kinetic weak-solution checks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, required=name != "verify", help="JSON run configuration")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--quiet", action="store_true", help="only report warnings and errors")
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    cfg = None
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            logger.error("configuration error: %s", exc)
            return EXIT_CONFIG
        if args.plots:
            cfg = parse_config({**cfg.to_dict(), "emit_plots": True}, base_dir=cfg.base_dir)
    return run(cfg, args.command, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
