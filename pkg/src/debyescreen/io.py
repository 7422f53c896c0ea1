"""Deterministic writers for run outputs.

Data files never contain timestamps or host information; those go to
``metadata.json``.  Floats are written with ``repr``, the shortest
string that round-trips, so CSV and JSON outputs are byte-identical
between runs of the same build.
"""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import math
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "FIELD_COLUMNS",
    "jsonable",
    "dumps",
    "write_json",
    "write_csv",
    "read_csv",
    "write_fields",
    "read_fields",
    "atomic_directory",
    "atomic_write_text",
    "write_plots",
]

#: column order of ``fields.csv``
FIELD_COLUMNS = ("r", "Q", "R", "rho")


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars and arrays to plain Python; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temporary file and ``os.replace``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, obj: Any) -> None:
    atomic_write_text(path, dumps(obj))


def write_csv(path: str | Path, columns: Sequence[str], data: Sequence[np.ndarray]) -> None:
    """Write equal-length columns with full ``repr`` precision."""
    arrays = [np.asarray(col, dtype=float).ravel() for col in data]
    if len({a.size for a in arrays}) != 1:
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(columns)]
    for row in zip(*(a.tolist() for a in arrays)):
        lines.append(",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, j].copy() for j, name in enumerate(header)}


def write_fields(path: str | Path, result) -> None:
    """``fields.csv`` with columns ``r, Q, R, rho``."""
    write_csv(path, FIELD_COLUMNS, [result.grid.r, result.Q.values, result.R.values, result.rho.values])


def read_fields(path: str | Path) -> dict[str, np.ndarray]:
    data = read_csv(path)
    missing = [c for c in FIELD_COLUMNS if c not in data]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return data


@contextlib.contextmanager
def atomic_directory(target: str | Path) -> Iterator[Path]:
    """Yield a scratch directory that replaces ``target`` on success.

    Files written inside the block appear at ``target`` all at once; an
    exception leaves any previous ``target`` untouched.
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{target.name}.tmp-"))
    try:
        yield scratch
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    old = None
    if target.exists():
        old = target.parent / f".{target.name}.old-{os.getpid()}"
        os.replace(target, old)
    os.replace(scratch, target)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def write_plots(directory: str | Path, result) -> list[str]:
    """SVG line plots of ``r Q``, ``rho`` and the residual history.

    matplotlib is imported lazily so that it stays an optional extra.
    """
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:  # pragma: no cover - depends on the environment
        logger.warning("matplotlib is not installed; skipping plots")
        return []
    matplotlib.rcParams["svg.hashsalt"] = "debyescreen"
    directory = Path(directory)
    r = result.grid.r
    written = []
    panels = [
        ("rQ.svg", r, r * result.Q.values, "r", "r Q(r)", "semilogx"),
        ("rho.svg", r, result.rho.values, "r", "rho(r)", "semilogx"),
        ("residuals.svg", np.arange(1, len(result.residual_history) + 1), result.residual_history, "iteration", "residual", "semilogy"),
    ]
    for name, x, y, xl, yl, kind in panels:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        getattr(ax, kind)(x, np.maximum(np.asarray(y, dtype=float), 1e-300) if kind == "semilogy" else y)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        fig.tight_layout()
        fig.savefig(directory / name, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(name)
    return written
