"""REE time series and their self-describing CSV form."""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import EvolutionConfig, evolve
from .ree import SolverOptions, ree

__all__ = ["TimeSeries", "ree_time_series", "read_csv"]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    gamma0_t: np.ndarray
    ree: np.ndarray
    converged: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gamma0_t, dtype=float)
        if g.ndim != 1 or len(g) == 0:
            raise ValueError("gamma0_t must be a non-empty 1-d grid")
        if g[0] != 0.0 or np.any(np.diff(g) <= 0):
            raise ValueError("gamma0_t must start at 0 and increase strictly")
        if not (len(self.ree) == len(self.converged) == len(g)):
            raise ValueError("column lengths differ")

    def __len__(self) -> int:
        return len(self.gamma0_t)

    def to_csv(self, path) -> Path:
        """Write atomically: temp file in the target directory, then rename."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"# {k}={v}" for k, v in self.metadata.items()]
        lines.append("gamma0_t,ree,converged")
        for g, e, c in zip(self.gamma0_t, self.ree, self.converged):
            lines.append(f"{g:.12g},{e:.12g},{int(bool(c))}")
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path


def read_csv(path) -> TimeSeries:
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif line and not line.startswith("gamma0_t"):
                g, e, c = line.split(",")
                rows.append((float(g), float(e), bool(int(c))))
    arr = list(zip(*rows)) if rows else ([], [], [])
    return TimeSeries(np.array(arr[0]), np.array(arr[1]), np.array(arr[2], dtype=bool), meta)


def _solve_point(args):
    rho0, cfg, g, opts = args
    return ree(evolve(rho0, cfg, g / cfg.gamma0), opts)


def ree_time_series(
    rho0: np.ndarray,
    cfg: EvolutionConfig,
    grid,
    opts: SolverOptions | None = None,
    metadata: dict | None = None,
    progress: Callable[[int, float, float], None] | None = None,
    chain: bool = True,
    workers: int = 1,
) -> TimeSeries:
    """Evolve ``rho0`` and estimate the REE at each point of ``grid``.

    ``grid`` is in units of gamma_0 t (gamma_0 the Markov rate of the first
    bath). With ``chain`` (the default) points are solved in order and each
    warm-starts from the previous optimum while also running
    ``opts.series_restarts`` fresh restarts. Without it every point is an
    independent full solve, spread over ``workers`` processes; results do
    not depend on the worker count.
    """
    opts = opts or SolverOptions()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    values = np.empty(len(grid))
    flags = np.empty(len(grid), dtype=bool)
    if chain:
        warm = None
        for i, g in enumerate(grid):
            rho_t = evolve(rho0, cfg, g / cfg.gamma0)
            if warm is None:
                est = ree(rho_t, opts)
            else:
                est = ree(rho_t, opts, warm_start=warm, restarts=opts.series_restarts)
            values[i], flags[i] = est.value, est.converged
            warm = est.sigma_star
            if progress is not None:
                progress(i, g, est.value)
    else:
        jobs = [(rho0, cfg, g, opts) for g in grid]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                ests = pool.map(_solve_point, jobs)
                results = list(ests)
        else:
            results = map(_solve_point, jobs)
        for i, est in enumerate(results):
            values[i], flags[i] = est.value, est.converged
            if progress is not None:
                progress(i, grid[i], est.value)
    return TimeSeries(grid, values, flags, dict(metadata or {}))
