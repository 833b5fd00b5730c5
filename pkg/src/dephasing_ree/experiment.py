"""Experiment configuration, CSV runs and the figure table.

A run is fully described by an :class:`ExperimentConfig`. Its fields are
echoed as ``# key=value`` lines at the top of every CSV, so a file can be
regenerated from its own header (:func:`config_from_header`).
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .baths import DEFAULT_KBT, BathSpec, build_kernel, markov_rate, write_kernel_csv
from .dynamics import make_config
from .ree import SolverOptions
from .series import TimeSeries, ree_time_series
from .states import make_state, parse_state

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FIGURES",
    "load_config_file",
    "config_from_header",
    "run",
    "reproduce",
    "dump_kernel",
]

log = logging.getLogger(__name__)

GENERATOR = "dephasing_ree"


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One state / bath / memory combination on a gamma_0 t grid.

    ``tmax`` is the end of the grid in units of 1/gamma_0 (so the default
    grid covers gamma_0 t in [0, 5]); ``steps`` intervals give steps + 1 rows.
    """

    state: str = "ghz"
    topology: str = "local"
    memory: str = "markov"
    eta: float = 0.1
    lambda_cut: float = 1e-2
    kbt: float = DEFAULT_KBT
    tmax: float = 5.0
    steps: int = 100
    kernel_steps: int = 501
    seed: int = 0
    ree_terms: int = 32
    ree_restarts: int = 64
    ree_tol: float = 1e-7
    ree_atol: float = 1e-9
    series_restarts: int = 2
    chain: bool = True

    def __post_init__(self):
        try:
            label = parse_state(self.state).label
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "state", label)
        memory = self.memory.replace("_", "-")
        object.__setattr__(self, "memory", memory)
        if self.topology not in ("local", "common"):
            raise ConfigError(f"topology must be local or common, got {self.topology!r}")
        if memory not in ("markov", "non-markov"):
            raise ConfigError(f"memory must be markov or non-markov, got {self.memory!r}")
        for name in ("eta", "lambda_cut", "kbt", "tmax", "ree_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if self.ree_atol < 0:
            raise ConfigError("ree_atol must be non-negative")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if self.kernel_steps < 2:
            raise ConfigError("kernel_steps must be at least 2")
        if self.ree_terms < 1 or self.ree_restarts < 1 or self.series_restarts < 0:
            raise ConfigError("ree_terms and ree_restarts must be positive, series_restarts >= 0")

    # key names as they appear in config files and CSV headers
    @staticmethod
    def keys() -> list[str]:
        return ["lambda" if f.name == "lambda_cut" else f.name for f in fields(ExperimentConfig)]

    @classmethod
    def from_mapping(cls, values: Mapping[str, str | object]) -> "ExperimentConfig":
        """Build from string (or typed) values keyed as in :meth:`keys`.

        Dashes in keys are accepted in place of underscores.
        """
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for raw_key, value in values.items():
            key = raw_key.strip().replace("-", "_")
            if key == "lambda":
                key = "lambda_cut"
            if key not in types:
                raise ConfigError(f"unknown config key {raw_key!r}")
            kind = types[key]
            try:
                if isinstance(value, str):
                    if kind == "int":
                        value = int(value)
                    elif kind == "float":
                        value = float(value)
                    elif kind == "bool":
                        value = _parse_bool(value)
                    else:
                        value = value.strip()
            except ValueError:
                raise ConfigError(f"bad value for {raw_key}: {value!r}") from None
            kwargs[key] = value
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, str]:
        """Canonical text form; floats use repr so they round-trip exactly."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            key = "lambda" if f.name == "lambda_cut" else f.name
            if isinstance(v, bool):
                out[key] = "true" if v else "false"
            elif isinstance(v, float):
                out[key] = repr(v)
            else:
                out[key] = str(v)
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def bath(self) -> BathSpec:
        return BathSpec(eta=self.eta, lambda_cut=self.lambda_cut, kbt=self.kbt, topology=self.topology)

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(terms=self.ree_terms, restarts=self.ree_restarts, tol=self.ree_tol,
                             atol=self.ree_atol, seed=self.seed,
                             series_restarts=self.series_restarts)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.tmax, self.steps + 1)


def _parse_lines(lines: Iterable[str], header: bool) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if header:
            if not line.startswith("#"):
                break
            line = line[1:].strip()
        else:
            line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        values[key.strip()] = value.strip()
    return values


def load_config_file(path) -> dict[str, str]:
    """Read a flat ``key=value`` file (UTF-8, ``#`` starts a comment)."""
    try:
        with open(path, encoding="utf-8") as fh:
            return _parse_lines(fh, header=False)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def config_from_header(path) -> ExperimentConfig:
    """Recover the config echoed at the top of a series CSV."""
    try:
        with open(path, encoding="utf-8") as fh:
            values = _parse_lines(fh, header=True)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    values.pop("generator", None)
    values.pop("gamma0", None)
    return ExperimentConfig.from_mapping(values)


def _metadata(cfg: ExperimentConfig) -> dict[str, str]:
    meta = {"generator": GENERATOR}
    meta.update(cfg.to_mapping())
    meta["gamma0"] = repr(markov_rate(cfg.bath))
    return meta


def run(cfg: ExperimentConfig, out=None, workers: int = 1,
        progress: Callable[[int, float, float], None] | None = None) -> TimeSeries:
    """Evolve, estimate the REE along the grid and (optionally) write ``out``."""
    bath = cfg.bath
    g0 = markov_rate(bath)
    evo = make_config(cfg.topology, cfg.memory, bath, t_max=cfg.tmax / g0, n_steps=cfg.kernel_steps)
    rho0 = make_state(cfg.state)
    series = ree_time_series(rho0, evo, cfg.grid(), cfg.solver, metadata=_metadata(cfg),
                             progress=progress, chain=cfg.chain, workers=workers)
    if out is not None:
        series.to_csv(out)
    return series


# figure id -> (states, topology, memory); p in {0.1, 0.5, 0.9} for the mixed families
_P = (0.1, 0.5, 0.9)
_PURE = ("ghz", "w", "star", "wwbar")


def _family(name: str) -> tuple[str, ...]:
    return tuple(f"{name}:{p}" for p in _P)


FIGURES: dict[str, tuple[tuple[str, ...], str, str]] = {
    "fig1a": (_PURE, "local", "markov"),
    "fig1b": (_PURE, "common", "markov"),
    "fig1c": (_PURE, "local", "non-markov"),
    "fig1d": (_PURE, "common", "non-markov"),
}
for _fig, _memory in (("fig2", "markov"), ("fig3", "non-markov")):
    for _panel, _name, _topology in zip("abcdef", ("werner-ghz", "werner-w", "ghzw") * 2,
                                        ("local",) * 3 + ("common",) * 3):
        FIGURES[_fig + _panel] = (_family(_name), _topology, _memory)


def _file_name(fig: str, state: str) -> str:
    return f"{fig}_{state.replace(':', '_p')}.csv"


def reproduce(fig: str, outdir, base: ExperimentConfig | None = None, workers: int = 1,
              progress: Callable[[str], None] | None = None) -> list[Path]:
    """Write one CSV per curve of a figure panel into ``outdir``.

    ``base`` supplies everything except state, topology and memory.
    """
    if fig not in FIGURES:
        raise ConfigError(f"unknown figure id {fig!r}; expected one of {', '.join(FIGURES)}")
    states, topology, memory = FIGURES[fig]
    base = base or ExperimentConfig()
    outdir = Path(outdir)
    paths = []
    for state in states:
        cfg = base.replace(state=state, topology=topology, memory=memory)
        path = outdir / _file_name(fig, cfg.state)
        if progress is not None:
            progress(f"{fig}: {cfg.state} ({topology}, {memory}) -> {path}")
        run(cfg, path, workers=workers)
        paths.append(path)
    return paths


def dump_kernel(out, tmax: float = 5.0, steps: int = 501, bath: BathSpec | None = None) -> Path:
    """Tabulate the non-Markov kernel on t in [0, tmax / gamma_0] and write it."""
    bath = bath or BathSpec()
    if steps < 2 or not tmax > 0:
        raise ConfigError("kernel needs tmax > 0 and steps >= 2")
    kernel = build_kernel(bath, tmax / markov_rate(bath), steps)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_kernel_csv(kernel, out)
    return out
