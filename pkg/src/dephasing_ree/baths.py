"""Ohmic dephasing baths: spectral density, time-dependent rates and their integrals.

Natural units throughout: hbar = k_B = omega_0 = 1. Temperatures are given as
k_B T in units of hbar omega_0, times in units of 1/omega_0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "BathSpec",
    "DephasingKernel",
    "QuadratureError",
    "DEFAULT_KBT",
    "spectral_density",
    "dephasing_rate",
    "alpha",
    "rates",
    "markov_rate",
    "build_kernel",
    "markov_kernel",
    "write_kernel_csv",
]

# k_B T = hbar omega_0 / 4 pi makes the Markov rate equal eta * omega_0
DEFAULT_KBT = 1.0 / (4.0 * math.pi)

Topology = Literal["local", "common"]

_GL_LO = np.polynomial.legendre.leggauss(16)
_GL_HI = np.polynomial.legendre.leggauss(32)


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath J(w) = eta w exp(-w / lambda_cut) at temperature ``kbt``."""

    eta: float = 0.1
    lambda_cut: float = 1e-2
    kbt: float = DEFAULT_KBT
    topology: Topology = "local"

    def __post_init__(self):
        if not (self.eta > 0 and self.lambda_cut > 0 and self.kbt > 0):
            raise ValueError(
                f"bath parameters must be positive: eta={self.eta}, "
                f"lambda_cut={self.lambda_cut}, kbt={self.kbt}"
            )
        if self.topology not in ("local", "common"):
            raise ValueError(f"unknown topology {self.topology!r}")


def spectral_density(omega, spec: BathSpec):
    """J(omega) = eta * omega * exp(-omega / Lambda)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0 only")
    out = spec.eta * w * np.exp(-w / spec.lambda_cut)
    return out if out.ndim else float(out)


def markov_rate(spec: BathSpec) -> float:
    """Long-time Markov rate 4 pi eta k_B T / hbar, in units of omega_0."""
    return 4.0 * math.pi * spec.eta * spec.kbt


def _x_coth_x(x: np.ndarray) -> np.ndarray:
    # x coth x = x (1 + 2 / (e^{2x} - 1)), finite limit 1 at x = 0
    out = np.ones_like(x)
    nz = x > 0
    xs = x[nz]
    # beyond x ~ 350 the correction underflows and expm1 would overflow
    out[nz] = xs + 2.0 * xs / np.expm1(np.minimum(2.0 * xs, 700.0))
    return out


def _integrands(omega: np.ndarray, t: np.ndarray, spec: BathSpec):
    """Thermal and imaginary integrands on a (len(t), len(omega)) mesh.

    thermal: J(w) coth(w / 2kT) sin(wt) / w  (Re alpha integrand, half the rate integrand)
    imag:    J(w) (1 - cos(wt)) / w
    The w -> 0 limit of the thermal term is eta * 2kT * t; it is obtained by
    writing coth(x) sin(wt) = [x coth x] * [sin(wt) / x] with x = w / 2kT.
    """
    w = omega[None, :]
    tt = t[:, None]
    envelope = spec.eta * np.exp(-w / spec.lambda_cut)
    x = w / (2.0 * spec.kbt)
    sin_over_x = 2.0 * spec.kbt * tt * np.sinc(w * tt / np.pi)
    thermal = envelope * _x_coth_x(x) * sin_over_x
    imag = envelope * (1.0 - np.cos(w * tt))
    return thermal, imag


def _panel_edges(spec: BathSpec, t_ref: float) -> np.ndarray:
    omega_max = 50.0 * spec.lambda_cut
    width = omega_max
    if t_ref > 0:
        omega_max = max(omega_max, 40.0 / t_ref)
        width = math.pi / (4.0 * t_ref)
    n_panels = max(1, math.ceil(omega_max / width))
    return np.linspace(0.0, omega_max, n_panels + 1)


def _gl_panels(a: np.ndarray, b: np.ndarray, rule):
    x, wts = rule
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return nodes.ravel(), (half[:, None] * wts[None, :]).ravel(), len(x)


def _omega_quad(t: np.ndarray, spec: BathSpec, rtol: float = 1e-12, atol: float = 1e-15,
                max_depth: int = 30):
    """Adaptive composite Gauss-Legendre over omega for a batch of times.

    Panels are bisected until the 16- and 32-point rules agree for every t in
    the batch. Returns (thermal_integral, imag_integral) arrays.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    edges = _panel_edges(spec, float(t.max()))
    pending = [(edges[:-1], edges[1:])]
    thermal = np.zeros(t.shape)
    imag = np.zeros(t.shape)
    worst = 0.0
    for _ in range(max_depth):
        a, b = pending.pop()
        results = []
        for rule in (_GL_LO, _GL_HI):
            nodes, wts, npts = _gl_panels(a, b, rule)
            th, im = _integrands(nodes, t, spec)
            th = (th * wts).reshape(len(t), len(a), npts).sum(axis=2)
            im = (im * wts).reshape(len(t), len(a), npts).sum(axis=2)
            results.append((th, im))
        (th_lo, im_lo), (th_hi, im_hi) = results
        err = np.maximum(np.abs(th_hi - th_lo), np.abs(im_hi - im_lo)).max(axis=0)
        scale = np.maximum(np.abs(th_hi), np.abs(im_hi)).max(axis=0)
        ok = err <= np.maximum(atol, rtol * scale)
        thermal += th_hi[:, ok].sum(axis=1)
        imag += im_hi[:, ok].sum(axis=1)
        if np.all(ok):
            if not pending:
                return thermal, imag
            continue
        worst = float(err[~ok].max())
        mid = 0.5 * (a[~ok] + b[~ok])
        pending.append((np.concatenate([a[~ok], mid]), np.concatenate([mid, b[~ok]])))
    raise QuadratureError("omega quadrature did not converge", worst)


def rates(t, spec: BathSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (gamma(t), alpha(t)) for an array of times."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("rates are defined for t >= 0 only")
    thermal, imag = _omega_quad(t, spec)
    return 2.0 * thermal, thermal - 1j * imag


def dephasing_rate(t: float, spec: BathSpec) -> float:
    """gamma(t) = 2 int_0^inf J(w) coth(w / 2kT) sin(wt) / w dw."""
    g, _ = rates(t, spec)
    return float(g[0])


def alpha(t: float, spec: BathSpec) -> complex:
    """Common-bath coefficient alpha(t); Re alpha = gamma / 2, Im alpha <= 0."""
    _, a = rates(t, spec)
    return complex(a[0])


@dataclass(frozen=True, eq=False)
class DephasingKernel:
    """Tabulated rates and their cumulative time integrals.

    ``integrals(t)`` gives (Gamma_int, A_int) at arbitrary times. Non-Markov
    kernels interpolate with cubic Hermite splines whose slopes are the
    tabulated rates; Markov kernels are exact linear functions of t.
    """

    spec: BathSpec
    memory: Literal["markov", "non_markov"]
    t: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    gamma_int: np.ndarray
    a_int: np.ndarray
    _splines: tuple = field(default=(), repr=False)

    def __post_init__(self):
        for name in ("t", "gamma", "alpha", "gamma_int", "a_int"):
            getattr(self, name).flags.writeable = False
        if self.memory == "non_markov":
            splines = (
                CubicHermiteSpline(self.t, self.gamma_int, self.gamma),
                CubicHermiteSpline(self.t, self.a_int.real, self.alpha.real),
                CubicHermiteSpline(self.t, self.a_int.imag, self.alpha.imag),
            )
            object.__setattr__(self, "_splines", splines)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def _check_range(self, t: np.ndarray):
        slack = 1e-9 * max(1.0, self.t_max)
        if np.any(t < -slack) or np.any(t > self.t_max + slack):
            raise ValueError(f"time outside kernel range [0, {self.t_max}]")

    def integrals(self, t):
        """Return (Gamma_int(t), A_int(t)); arrays if ``t`` is an array."""
        tt = np.asarray(t, dtype=float)
        self._check_range(tt)
        tt = np.clip(tt, 0.0, self.t_max)
        if self.memory == "markov":
            g0 = markov_rate(self.spec)
            return g0 * tt, (0.5 * g0 * tt).astype(complex)
        g_spl, re_spl, im_spl = self._splines
        return g_spl(tt), re_spl(tt) + 1j * im_spl(tt)

    def rates_at(self, t):
        """Interpolated (gamma(t), alpha(t)) from the spline derivatives."""
        tt = np.asarray(t, dtype=float)
        self._check_range(tt)
        if self.memory == "markov":
            g0 = markov_rate(self.spec)
            return np.full(tt.shape, g0), np.full(tt.shape, 0.5 * g0, dtype=complex)
        g_spl, re_spl, im_spl = self._splines
        return g_spl.derivative()(tt), re_spl.derivative()(tt) + 1j * im_spl.derivative()(tt)


def _cumulative(t: np.ndarray, spec: BathSpec, rtol: float, max_depth: int = 12):
    """Per-step Gauss-Legendre integration of gamma and alpha over each grid step.

    Each step uses 4- and 8-point rules; steps where they disagree are split
    in half until they agree.
    """
    rules = [np.polynomial.legendre.leggauss(4), np.polynomial.legendre.leggauss(8)]
    g_steps = np.zeros(len(t) - 1)
    a_steps = np.zeros(len(t) - 1, dtype=complex)
    # (owner step index, a, b)
    owner = np.arange(len(t) - 1)
    a, b = t[:-1].copy(), t[1:].copy()
    worst = 0.0
    for _ in range(max_depth):
        est = []
        for x, w in rules:
            half = 0.5 * (b - a)
            nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
            g, al = rates(nodes.ravel(), spec)
            g = (g.reshape(nodes.shape) * w).sum(axis=1) * half
            al = (al.reshape(nodes.shape) * w).sum(axis=1) * half
            est.append((g, al))
        (g_lo, a_lo), (g_hi, a_hi) = est
        err = np.maximum(np.abs(g_hi - g_lo), np.abs(a_hi - a_lo))
        scale = np.maximum(np.abs(g_hi), np.abs(a_hi))
        ok = err <= np.maximum(1e-16, rtol * scale)
        np.add.at(g_steps, owner[ok], g_hi[ok])
        np.add.at(a_steps, owner[ok], a_hi[ok])
        if np.all(ok):
            gamma_int = np.concatenate([[0.0], np.cumsum(g_steps)])
            a_int = np.concatenate([[0.0], np.cumsum(a_steps)])
            return gamma_int, a_int
        worst = float(err[~ok].max())
        mid = 0.5 * (a[~ok] + b[~ok])
        owner = np.concatenate([owner[~ok], owner[~ok]])
        a, b = np.concatenate([a[~ok], mid]), np.concatenate([mid, b[~ok]])
    raise QuadratureError("cumulative time integral did not converge", worst)


@lru_cache(maxsize=64)
def build_kernel(spec: BathSpec, t_max: float, n_steps: int = 501, rtol: float = 1e-12) -> DephasingKernel:
    """Tabulate gamma, alpha and their integrals on ``n_steps`` points in [0, t_max]."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    t = np.linspace(0.0, float(t_max), int(n_steps))
    gamma, alpha_ = rates(t, spec)
    gamma_int, a_int = _cumulative(t, spec, rtol)
    # Re alpha and gamma / 2 come from the same integrand; pin the identity exactly
    a_int = 0.5 * gamma_int + 1j * a_int.imag
    return DephasingKernel(spec, "non_markov", t, gamma, alpha_, gamma_int, a_int)


@lru_cache(maxsize=64)
def markov_kernel(spec: BathSpec, t_max: float, n_steps: int = 501) -> DephasingKernel:
    """Constant-rate kernel: gamma = gamma_0, alpha = gamma_0 / 2."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    g0 = markov_rate(spec)
    t = np.linspace(0.0, float(t_max), int(n_steps))
    return DephasingKernel(
        spec, "markov", t,
        np.full(t.shape, g0), np.full(t.shape, 0.5 * g0, dtype=complex),
        g0 * t, (0.5 * g0 * t).astype(complex),
    )


def write_kernel_csv(kernel: DephasingKernel, path) -> None:
    """Dump a kernel as CSV (units: omega_0 = 1)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# eta={kernel.spec.eta!r}\n# lambda_cut={kernel.spec.lambda_cut!r}\n")
        fh.write(f"# kbt={kernel.spec.kbt!r}\n# memory={kernel.memory}\n# units=omega_0=1\n")
        w = csv.writer(fh)
        w.writerow(["t", "gamma", "re_alpha", "im_alpha", "Gamma_int", "re_A", "im_A"])
        for row in zip(kernel.t, kernel.gamma, kernel.alpha.real, kernel.alpha.imag,
                       kernel.gamma_int, kernel.a_int.real, kernel.a_int.imag):
            w.writerow([f"{v:.12g}" for v in row])
