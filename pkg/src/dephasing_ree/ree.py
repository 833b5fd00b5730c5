"""Relative entropy of entanglement against the fully separable three-qubit set.

The minimization runs over mixtures of K pure product states,

    sigma = (1 - eps) sum_k w_k |a_k b_k c_k><a_k b_k c_k| + eps I / 8,

where the small white-noise floor ``eps`` keeps ln(sigma) finite. Mixing in
I/8 keeps sigma separable, so every reported value is a genuine upper bound
on the REE.

Internally each term is held as three unnormalized single-qubit factors
whose product norm carries the term weight. Each restart alternates a few
multiplicative (exponentiated gradient) steps on the weights with a joint
L-BFGS pass over all factors. Results are handed out as weights plus Bloch
angles.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ._kernels import objective_and_gradient
from .qstate import check_density_matrix, partial_trace, relative_entropy, safe_eigvalsh

__all__ = [
    "SolverOptions",
    "SeparableEnsemble",
    "EntanglementEstimate",
    "ree",
    "closest_separable_state",
    "ensemble_from_products",
    "bloch_angles",
]


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the multistart REE minimizer.

    ``series_restarts`` is the number of fresh restarts per grid point when
    solving along a time series (in addition to the warm start).
    """

    terms: int = 32
    restarts: int = 64
    tol: float = 1e-7
    atol: float = 1e-9
    patience: int = 5
    max_sweeps: int = 2000
    seed: int = 0
    floor: float = 1e-9
    series_restarts: int = 2
    weight_steps: int = 3
    sweep_iters: int = 50
    workers: int = 1

    def __post_init__(self):
        if self.terms < 1 or self.restarts < 1:
            raise ValueError("terms and restarts must be positive")
        if not 0 < self.floor < 1:
            raise ValueError("floor must lie in (0, 1)")
        if self.atol < 0:
            raise ValueError("atol must be non-negative")
        if self.tol <= 0 or self.patience < 1 or self.max_sweeps < 1:
            raise ValueError("tol, patience and max_sweeps must be positive")
        if self.series_restarts < 0:
            raise ValueError("series_restarts must be non-negative")


# smallest relative term weight kept during the search
_MIN_WEIGHT = 1e-24


def _qubit_vectors(angles: np.ndarray) -> np.ndarray:
    th, ph = angles[..., 0], angles[..., 1]
    return np.stack([np.cos(0.5 * th) + 0j, np.exp(1j * ph) * np.sin(0.5 * th)], axis=-1)


def _products(q: np.ndarray) -> np.ndarray:
    a, b, c = q[:, 0], q[:, 1], q[:, 2]
    return (a[:, :, None, None] * b[:, None, :, None] * c[:, None, None, :]).reshape(len(q), 8)


def bloch_angles(v: np.ndarray) -> tuple[float, float]:
    """(theta, phi) of a single-qubit ket, discarding its global phase."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    theta = 2.0 * np.arccos(np.clip(abs(v[0]), 0.0, 1.0))
    phi = float(np.angle(v[1]) - np.angle(v[0])) if abs(v[1]) > 0 else 0.0
    return float(theta), phi


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Weights and Bloch angles (theta, phi) of K three-qubit product states."""

    weights: np.ndarray
    angles: np.ndarray
    floor: float = 1e-9

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        ang = np.array(self.angles, dtype=float)
        if ang.ndim != 3 or ang.shape[1:] != (3, 2) or len(w) != len(ang):
            raise ValueError("angles must have shape (K, 3, 2) matching K weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        w.flags.writeable = False
        ang.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "angles", ang)

    @property
    def size(self) -> int:
        return len(self.weights)

    def qubit_states(self) -> np.ndarray:
        """Single-qubit kets, shape (K, 3, 2)."""
        return _qubit_vectors(self.angles)

    def product_states(self) -> np.ndarray:
        return _products(self.qubit_states())

    def mixture(self) -> np.ndarray:
        """The separable density matrix, including the white-noise floor."""
        psi = self.product_states()
        sigma = (psi.T * self.weights) @ psi.conj()
        return (1.0 - self.floor) * sigma + (self.floor / 8.0) * np.eye(8)


@dataclass(frozen=True, eq=False)
class EntanglementEstimate:
    value: float
    sigma_star: SeparableEnsemble
    restarts_used: int
    residual: float
    converged: bool
    restart_values: np.ndarray = field(repr=False, default=None)
    best_restart: int = 0


def ensemble_from_products(weights: Sequence[float], kets: Sequence[Sequence[np.ndarray]],
                           floor: float = 1e-9) -> SeparableEnsemble:
    """Build an ensemble from explicit single-qubit kets ``kets[k] = (a, b, c)``."""
    angles = np.array([[bloch_angles(v) for v in triple] for triple in kets])
    return SeparableEnsemble(np.asarray(weights, dtype=float), angles, floor)


class _Objective:
    """S(rho || sigma) over unnormalized product factors, shape (K, 3, 2)."""

    def __init__(self, rho: np.ndarray, floor: float):
        self.rho = np.ascontiguousarray(rho, dtype=complex)
        self.floor = float(floor)
        lam = safe_eigvalsh(rho)
        lam = lam[lam > 0]
        self.neg_entropy = float(np.sum(lam * np.log(lam)))

    def __call__(self, factors: np.ndarray, grad: bool = True):
        value, g = objective_and_gradient(self.rho, self.neg_entropy, self.floor,
                                          np.ascontiguousarray(factors), grad)
        return (value, g) if grad else value


def _term_weights(factors: np.ndarray) -> np.ndarray:
    n = np.prod(np.sum(np.abs(factors) ** 2, axis=2), axis=1)
    return n / n.sum()


def _to_factors(weights: np.ndarray, kets: np.ndarray) -> np.ndarray:
    """Spread each term weight evenly over its three (normalized) kets."""
    w = np.maximum(weights / np.sum(weights), _MIN_WEIGHT)
    return kets * (w ** (1.0 / 6.0))[:, None, None]


def _balanced(factors: np.ndarray) -> np.ndarray:
    """Equalize the three factor norms of each term and floor its weight.

    Keeps every term alive (weight >= _MIN_WEIGHT relative to the total) so
    neither the weight gradient nor the rebalancing divides by zero.
    """
    norms = np.linalg.norm(factors, axis=2)
    kets = factors / np.maximum(norms, 1e-300)[..., None]
    dead = ~np.all(np.isfinite(kets), axis=(1, 2)) | np.any(norms == 0, axis=1)
    kets[dead] = np.array([1.0, 0.0])
    return _to_factors(np.where(dead, 0.0, np.prod(norms, axis=1) ** 2), kets)


def _to_ensemble(factors: np.ndarray, floor: float) -> SeparableEnsemble:
    w = _term_weights(factors)
    angles = np.array([[bloch_angles(v) for v in triple] for triple in factors])
    return SeparableEnsemble(w, angles, floor)


def _weight_steps(obj: _Objective, factors, f, step, n_steps):
    """Exponentiated-gradient steps on the term weights, kets held fixed.

    Rescaling x_k by s changes the unnormalized weight n_k by s^2, so
    df/dn_k = Re<x_k, grad_x_k> / (2 n_k).
    """
    for _ in range(n_steps):
        _, g = obj(factors)
        n = np.prod(np.sum(np.abs(factors) ** 2, axis=2), axis=1)
        dn = np.real(np.sum(factors[:, 0].conj() * g[:, 0], axis=1)) / (2.0 * n) * n.sum()
        shift = dn - dn.min()
        accepted = False
        for _ in range(30):
            ratio = np.exp(-step * shift)
            trial = factors.copy()
            trial[:, 0] *= np.sqrt(ratio)[:, None]
            trial = _balanced(trial)
            f_new = obj(trial, grad=False)
            if f_new <= f:
                factors, f = trial, f_new
                step *= 1.5
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return factors, f, step


def _lbfgs_chunk(obj: _Objective, factors, f, max_iter):
    shape = factors.shape
    size = factors.size

    def fun(z):
        x = (z[:size] + 1j * z[size:]).reshape(shape)
        val, g = obj(x)
        g = g.ravel()
        return val, np.concatenate([g.real, g.imag])

    z0 = np.concatenate([factors.real.ravel(), factors.imag.ravel()])
    res = minimize(fun, z0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-13})
    if res.fun <= f:
        x = (res.x[:size] + 1j * res.x[size:]).reshape(shape)
        return _balanced(x), float(res.fun)
    return factors, f


def _marginal_start(rho: np.ndarray, terms: int, rng: np.random.Generator, jitter: float):
    """Product terms built from eigenvectors of the single-qubit marginals."""
    eig = []
    for qubit in range(3):
        lam, vec = np.linalg.eigh(partial_trace(rho, [qubit]))
        order = np.argsort(lam)[::-1]
        eig.append((np.clip(lam[order], 0.0, None), vec[:, order]))
    kets = np.empty((terms, 3, 2), dtype=complex)
    weights = np.empty(terms)
    for k in range(terms):
        combo = [(k >> (2 - i)) & 1 for i in range(3)]
        weights[k] = np.prod([eig[i][0][combo[i]] for i in range(3)]) + 1e-3
        for i in range(3):
            kets[k, i] = eig[i][1][:, combo[i]]
    # duplicated combos (k >= 8) always get jitter so they can move apart
    scale = np.where(np.arange(terms) >= 8, max(jitter, 0.3), jitter)
    kets = kets + scale[:, None, None] * (rng.standard_normal(kets.shape)
                                          + 1j * rng.standard_normal(kets.shape)) / np.sqrt(2)
    kets /= np.linalg.norm(kets, axis=2, keepdims=True)
    return _to_factors(weights / weights.sum(), kets)


def _random_start(terms: int, rng: np.random.Generator):
    # normalized complex Gaussians are uniform on the Bloch sphere
    kets = rng.standard_normal((terms, 3, 2)) + 1j * rng.standard_normal((terms, 3, 2))
    kets /= np.linalg.norm(kets, axis=2, keepdims=True)
    return _to_factors(np.full(terms, 1.0 / terms), kets)


def _initial_point(rho, opts: SolverOptions, index: int, n_restarts: int):
    rng = np.random.default_rng([opts.seed, index])
    n_marginal = (n_restarts + 1) // 2
    if index < n_marginal:
        jitter = 0.0 if index == 0 else 0.5 * index / max(1, n_marginal - 1)
        return _marginal_start(rho, opts.terms, rng, jitter)
    return _random_start(opts.terms, rng)


def _descend(rho: np.ndarray, factors: np.ndarray, opts: SolverOptions):
    """One restart: alternate weight steps and joint factor refinement.

    Stops when the improvement accumulated over the last ``patience``
    sweeps falls below ``tol * |f| + atol``. The reported residual is that
    improvement divided by the same scale, so converged means residual < 1.
    """
    obj = _Objective(rho, opts.floor)
    f = obj(factors, grad=False)
    history = [f]
    step = 1.0
    residual = np.inf
    for _ in range(opts.max_sweeps):
        if opts.weight_steps:
            factors, f, step = _weight_steps(obj, factors, f, step, opts.weight_steps)
        factors, f = _lbfgs_chunk(obj, factors, f, opts.sweep_iters)
        history.append(f)
        if len(history) > opts.patience:
            before = history[-1 - opts.patience]
            residual = (before - f) / (opts.tol * abs(f) + opts.atol)
            if residual < 1.0:
                return factors, f, residual, True
    return factors, f, residual, False


def _run_restart(args):
    rho, opts, index, n_restarts, warm = args
    if warm is not None:
        factors = _to_factors(np.asarray(warm.weights), warm.qubit_states())
    else:
        factors = _initial_point(rho, opts, index, n_restarts)
    return _descend(rho, factors, opts)


def _validate(rho: np.ndarray) -> np.ndarray:
    rho = check_density_matrix(rho, atol=1e-10)
    if rho.shape != (8, 8):
        raise ValueError(f"REE solver handles three-qubit states only, got shape {rho.shape}")
    return rho


def ree(rho: np.ndarray, opts: SolverOptions | None = None,
        warm_start: SeparableEnsemble | None = None,
        restarts: int | None = None) -> EntanglementEstimate:
    """Relative entropy of entanglement (nats) by multistart local search.

    ``restarts`` overrides ``opts.restarts`` for the number of fresh
    restarts; a ``warm_start`` ensemble is tried first as an extra restart.
    Ties between restarts go to the lowest index, the warm start counting as
    index 0.
    """
    opts = opts or SolverOptions()
    rho = _validate(rho)
    n_fresh = opts.restarts if restarts is None else restarts
    jobs = []
    if warm_start is not None:
        if warm_start.size != opts.terms:
            warm_start = _resize(warm_start, opts.terms)
        jobs.append((rho, opts, -1, n_fresh, warm_start))
    jobs += [(rho, opts, r, n_fresh, None) for r in range(n_fresh)]
    if not jobs:
        raise ValueError("need at least one restart or a warm start")

    if opts.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            results = list(pool.map(_run_restart, jobs))
    else:
        results = [_run_restart(job) for job in jobs]

    values = np.array([r[1] for r in results])
    best = int(np.argmin(values))  # argmin returns the first minimum: lowest index wins
    factors, _, residual, converged = results[best]
    ensemble = _to_ensemble(factors, opts.floor)
    value = relative_entropy(rho, ensemble.mixture())
    return EntanglementEstimate(
        value=value,
        sigma_star=ensemble,
        restarts_used=len(jobs),
        residual=float(residual),
        converged=bool(converged),
        restart_values=values,
        best_restart=best,
    )


def closest_separable_state(rho: np.ndarray, opts: SolverOptions | None = None) -> SeparableEnsemble:
    """The argmin ensemble found by :func:`ree`."""
    return ree(rho, opts).sigma_star


def _resize(ens: SeparableEnsemble, terms: int) -> SeparableEnsemble:
    order = np.argsort(ens.weights, kind="stable")[::-1]
    if terms <= ens.size:
        keep = order[:terms]
        w = ens.weights[keep]
        return SeparableEnsemble(w / w.sum(), ens.angles[keep], ens.floor)
    extra = terms - ens.size
    idx = np.concatenate([order, order[np.arange(extra) % ens.size]])
    w = ens.weights[idx].copy()
    # split duplicated weight evenly between copies
    counts = np.bincount(idx, minlength=ens.size)
    w = w / counts[idx]
    return SeparableEnsemble(w / w.sum(), ens.angles[idx], ens.floor)


def with_options(opts: SolverOptions, **changes) -> SolverOptions:
    return replace(opts, **changes)
