"""Pure-dephasing propagation of qubit registers under local or common baths.

Production propagators are closed-form element-wise maps in the computational
basis. ``evolve_ode`` integrates the master equations directly and exists to
cross-check them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .baths import BathSpec, DephasingKernel, build_kernel, markov_kernel, markov_rate, rates
from .qstate import num_qubits, spin_labels, tensor

__all__ = [
    "EvolutionConfig",
    "IntegrationError",
    "make_config",
    "sz_labels",
    "evolve",
    "evolve_local",
    "evolve_common",
    "evolve_ode",
]

Memory = Literal["markov", "non_markov"]


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class EvolutionConfig:
    topology: Literal["local", "common"]
    memory: Memory
    baths: tuple[BathSpec, ...]
    kernels: tuple[DephasingKernel, ...]

    def __post_init__(self):
        if self.topology not in ("local", "common"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.memory not in ("markov", "non_markov"):
            raise ValueError(f"unknown memory mode {self.memory!r}")
        if len(self.baths) != len(self.kernels):
            raise ValueError("one kernel per bath is required")
        if self.topology == "common" and len(self.kernels) != 1:
            raise ValueError("common topology carries exactly one kernel")
        if self.topology == "local" and len(self.kernels) < 1:
            raise ValueError("local topology needs one kernel per qubit")
        for k in self.kernels:
            if k.memory != self.memory:
                raise ValueError(f"kernel memory {k.memory!r} does not match {self.memory!r}")

    @property
    def gamma0(self) -> float:
        """Reference Markov rate of the first bath; sets the gamma_0 t axis."""
        return markov_rate(self.baths[0])

    @property
    def t_max(self) -> float:
        return min(k.t_max for k in self.kernels)


def make_config(
    topology: str,
    memory: str,
    bath: BathSpec | Sequence[BathSpec] | None = None,
    t_max: float | None = None,
    n_steps: int = 501,
    n_qubits: int = 3,
) -> EvolutionConfig:
    """Build an :class:`EvolutionConfig` with kernels on [0, t_max].

    ``bath`` may be a single spec (uniform baths) or one spec per qubit for
    the local topology. ``t_max`` defaults to 5 / gamma_0.
    """
    memory = memory.replace("-", "_")
    if bath is None:
        bath = BathSpec(topology=topology)
    if isinstance(bath, BathSpec):
        baths = (bath,) * (n_qubits if topology == "local" else 1)
    else:
        baths = tuple(bath)
    if topology == "local" and len(baths) != n_qubits:
        raise ValueError(f"local topology needs {n_qubits} bath specs, got {len(baths)}")
    if topology == "common" and len(baths) != 1:
        raise ValueError("common topology takes a single shared bath spec")
    if t_max is None:
        t_max = 5.0 / markov_rate(baths[0])
    builder = markov_kernel if memory == "markov" else build_kernel
    cache: dict[BathSpec, DephasingKernel] = {}
    kernels = []
    for b in baths:
        if b not in cache:
            cache[b] = builder(b, float(t_max), int(n_steps))
        kernels.append(cache[b])
    return EvolutionConfig(topology, memory, baths, tuple(kernels))


def sz_labels(n: int) -> np.ndarray:
    """Collective S_z eigenvalue m(b) = sum_i s_i(b_i) for every basis index."""
    _, s = spin_labels(n)
    return s.sum(axis=1)


def _check_inputs(rho0: np.ndarray, t: float, cfg: EvolutionConfig) -> tuple[np.ndarray, int]:
    rho0 = np.asarray(rho0, dtype=complex)
    n = num_qubits(rho0.shape[-1])
    if t < 0:
        raise ValueError("t must be non-negative")
    if t > cfg.t_max * (1 + 1e-12):
        raise ValueError(f"t={t} outside kernel range [0, {cfg.t_max}]")
    return rho0, n


def evolve_local(rho0: np.ndarray, cfg: EvolutionConfig, t: float) -> np.ndarray:
    """rho_bb'(t) = rho_bb'(0) exp(-2 sum_{i: b_i != b'_i} Gamma_i(t))."""
    if cfg.topology != "local":
        raise ValueError("evolve_local needs a local-topology config")
    rho0, n = _check_inputs(rho0, t, cfg)
    if len(cfg.kernels) != n:
        raise ValueError(f"config has {len(cfg.kernels)} kernels for {n} qubits")
    bits, _ = spin_labels(n)
    differ = bits[:, None, :] != bits[None, :, :]
    g = np.array([float(k.integrals(t)[0]) for k in cfg.kernels])
    return rho0 * np.exp(-2.0 * (differ @ g))


def evolve_common(rho0: np.ndarray, cfg: EvolutionConfig, t: float) -> np.ndarray:
    """rho_bb'(t) = rho_bb'(0) exp(m n Gamma(t) - m^2 A(t) - n^2 conj(A(t)))."""
    if cfg.topology != "common":
        raise ValueError("evolve_common needs a common-topology config")
    rho0, n = _check_inputs(rho0, t, cfg)
    gam, a = cfg.kernels[0].integrals(t)
    gam, a = float(gam), complex(a)
    m = sz_labels(n).astype(float)
    mm, nn = m[:, None], m[None, :]
    return rho0 * np.exp(mm * nn * gam - mm**2 * a - nn**2 * np.conj(a))


def evolve(rho0: np.ndarray, cfg: EvolutionConfig, t: float) -> np.ndarray:
    if cfg.topology == "local":
        return evolve_local(rho0, cfg, t)
    return evolve_common(rho0, cfg, t)


def _z_ops(n: int) -> list[np.ndarray]:
    eye, z = np.eye(2), np.diag([1.0, -1.0])
    return [tensor(*[z if j == i else eye for j in range(n)]) for i in range(n)]


def _rate_table(cfg: EvolutionConfig, times: np.ndarray):
    """Exact (quadrature) rates at the requested times, one row per kernel."""
    gammas, alphas = [], []
    for k in cfg.kernels:
        if cfg.memory == "markov":
            g0 = markov_rate(k.spec)
            gammas.append(np.full(times.shape, g0))
            alphas.append(np.full(times.shape, 0.5 * g0, dtype=complex))
        else:
            g, a = rates(times, k.spec)
            gammas.append(g)
            alphas.append(a)
    return np.array(gammas), np.array(alphas)


def evolve_ode(
    rho0: np.ndarray,
    cfg: EvolutionConfig,
    t,
    max_step: float | None = None,
    rate_step: float = 0.01,
) -> np.ndarray:
    """Integrate the dephasing master equation with classical fixed-step RK4.

    Works on a single matrix or a stack ``(..., d, d)`` and on a scalar time
    or an increasing array of times (returns a matching stack along axis 0).
    Rates are evaluated by direct quadrature, independent of the kernel
    tables. Instability is reported as :class:`IntegrationError` when the
    trace drifts or the Frobenius norm grows by more than 1e-6. The step is
    capped by ``max_step`` (default kernel spacing) and by
    ``rate_step / fastest_decay_rate``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = num_qubits(rho0.shape[-1])
    times = np.atleast_1d(np.asarray(t, dtype=float))
    scalar = np.ndim(t) == 0
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be non-negative and increasing")
    if max_step is None:
        k0 = cfg.kernels[0]
        max_step = float(k0.t[1] - k0.t[0])

    zs = _z_ops(n)
    sz = sum(zs)
    sz2 = sz @ sz
    # fastest coherence decay rate bounds the stable step
    g_ref = max(markov_rate(b) for b in cfg.baths)
    fastest = 2.0 * n * g_ref if cfg.topology == "local" else 0.5 * (2 * n) ** 2 * g_ref
    h_cap = min(max_step, rate_step / fastest)

    # integration nodes: each segment between requested times gets equal RK4 steps
    marks = np.concatenate([[0.0], times])
    seg_steps = np.maximum(1, np.ceil(np.diff(marks) / h_cap).astype(int))
    starts, hs = [], []
    for a, b, ns in zip(marks[:-1], marks[1:], seg_steps):
        h = (b - a) / ns
        starts.append(a + h * np.arange(ns))
        hs.append(np.full(ns, h))
    starts, hs = np.concatenate(starts), np.concatenate(hs)
    stage_t = np.stack([starts, starts + 0.5 * hs, starts + hs], axis=1)
    gam_tab, alp_tab = _rate_table(cfg, stage_t.ravel())
    gam_tab = gam_tab.reshape(len(cfg.kernels), *stage_t.shape)
    alp_tab = alp_tab.reshape(len(cfg.kernels), *stage_t.shape)

    if cfg.topology == "local":
        def rhs(rho, step, stage):
            out = np.zeros_like(rho)
            for i, z in enumerate(zs):
                out += gam_tab[i, step, stage] * (z @ rho @ z - rho)
            return out
    else:
        def rhs(rho, step, stage):
            g = gam_tab[0, step, stage]
            a = alp_tab[0, step, stage]
            return g * (sz @ rho @ sz) - a * (sz2 @ rho) - np.conj(a) * (rho @ sz2)

    rho = rho0.copy()
    tr0 = np.trace(rho0, axis1=-2, axis2=-1)
    norm0 = np.linalg.norm(rho0, axis=(-2, -1))
    out = []
    step = 0
    for seg in range(len(times)):
        for _ in range(seg_steps[seg]):
            h = hs[step]
            k1 = rhs(rho, step, 0)
            k2 = rhs(rho + 0.5 * h * k1, step, 1)
            k3 = rhs(rho + 0.5 * h * k2, step, 1)
            k4 = rhs(rho + h * k3, step, 2)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            step += 1
        drift = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - tr0))
        if drift > 1e-6:
            raise IntegrationError(f"trace drift {drift:.3e} exceeds 1e-6; step too large")
        # dephasing leaves the diagonal (hence the trace) exactly fixed, so an
        # unstable step shows up as growing coherences instead
        growth = np.max(np.linalg.norm(rho, axis=(-2, -1)) - norm0)
        if not growth <= 1e-6:
            raise IntegrationError(f"norm growth {growth:.3e} exceeds 1e-6; step too large")
        out.append(rho.copy())
    return out[0] if scalar else np.stack(out)
