"""Named three-qubit states and static entanglement fingerprints.

Qubits are labelled A, B, C in register order. In the star state the third
qubit (C) is the hub: C_AC = C_BC = 1/2 and C_AB = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import InvalidStateError, ket, partial_trace, projector

__all__ = [
    "NamedState",
    "STATE_NAMES",
    "parse_state",
    "state_vector",
    "make_state",
    "concurrence",
    "three_tangle_pure",
    "pair_concurrences",
]

_PURE = ("ghz", "w", "wbar", "wwbar", "star")
_MIXED = ("werner-ghz", "werner-w", "ghzw")
STATE_NAMES = _PURE + _MIXED

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


@dataclass(frozen=True)
class NamedState:
    name: str
    p: float | None = None

    def __post_init__(self):
        if self.name not in STATE_NAMES:
            raise ValueError(f"unknown state {self.name!r}; expected one of {', '.join(STATE_NAMES)}")
        if self.name in _MIXED:
            if self.p is None:
                raise ValueError(f"state {self.name!r} needs a mixing probability p")
            if not 0.0 <= self.p <= 1.0:
                raise ValueError(f"mixing probability p={self.p} outside [0, 1]")
        elif self.p is not None:
            raise ValueError(f"pure state {self.name!r} takes no mixing probability")

    @property
    def label(self) -> str:
        return self.name if self.p is None else f"{self.name}:{self.p:g}"


def parse_state(text: str) -> NamedState:
    """Parse the CLI vocabulary, e.g. ``ghz`` or ``werner-w:0.5``."""
    name, sep, p = text.strip().lower().partition(":")
    if not sep:
        return NamedState(name)
    try:
        return NamedState(name, float(p))
    except ValueError as exc:
        if "could not convert" in str(exc):
            raise ValueError(f"bad mixing probability in {text!r}") from None
        raise


def state_vector(name: str) -> np.ndarray:
    """Pure-state kets in the computational basis."""
    r2, r3 = np.sqrt(2.0), np.sqrt(3.0)
    if name == "ghz":
        return (ket("000") + ket("111")) / r2
    if name == "w":
        return (ket("001") + ket("010") + ket("100")) / r3
    if name == "wbar":
        return (ket("110") + ket("101") + ket("011")) / r3
    if name == "wwbar":
        return (state_vector("w") + state_vector("wbar")) / r2
    if name == "star":
        return 0.5 * (ket("000") + ket("100") + ket("101") + ket("111"))
    raise ValueError(f"{name!r} is not a pure named state")


def make_state(spec: NamedState | str) -> np.ndarray:
    """Density matrix of a named state."""
    if isinstance(spec, str):
        spec = parse_state(spec)
    if spec.p is None:
        return projector(state_vector(spec.name))
    p = spec.p
    if spec.name == "werner-ghz":
        return p * projector(state_vector("ghz")) + (1 - p) / 8 * np.eye(8)
    if spec.name == "werner-w":
        return p * projector(state_vector("w")) + (1 - p) / 8 * np.eye(8)
    return p * projector(state_vector("ghz")) + (1 - p) * projector(state_vector("w"))


def concurrence(rho2: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho2 = np.asarray(rho2, dtype=complex)
    if rho2.shape != (4, 4):
        raise InvalidStateError(f"concurrence needs a 4x4 density matrix, got {rho2.shape}")
    evals, evecs = np.linalg.eigh(0.5 * (rho2 + rho2.conj().T))
    sqrt_rho = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    # singular values of sqrt(rho) YY sqrt(rho)* are the square roots of the
    # eigenvalues of rho YY rho* YY, without the sqrt amplifying round-off
    lam = np.linalg.svd(sqrt_rho @ _YY @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def pair_concurrences(rho: np.ndarray) -> dict[str, float]:
    """Concurrences of the three two-qubit marginals, keyed AB, AC, BC."""
    return {
        "AB": concurrence(partial_trace(rho, [0, 1])),
        "AC": concurrence(partial_trace(rho, [0, 2])),
        "BC": concurrence(partial_trace(rho, [1, 2])),
    }


def three_tangle_pure(psi: np.ndarray) -> float:
    """Coffman-Kundu-Wootters 3-tangle, 4 |Cayley hyperdeterminant|."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape != (8,):
        raise InvalidStateError("three_tangle_pure needs an 8-component pure state")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > 1e-10:
        raise InvalidStateError(f"state is not normalized (norm^2 = {norm!r})")
    a = psi.reshape(2, 2, 2)
    d1 = (a[0, 0, 0] ** 2 * a[1, 1, 1] ** 2 + a[0, 0, 1] ** 2 * a[1, 1, 0] ** 2
          + a[0, 1, 0] ** 2 * a[1, 0, 1] ** 2 + a[1, 0, 0] ** 2 * a[0, 1, 1] ** 2)
    d2 = (a[0, 0, 0] * a[1, 1, 1] * a[0, 1, 1] * a[1, 0, 0]
          + a[0, 0, 0] * a[1, 1, 1] * a[1, 0, 1] * a[0, 1, 0]
          + a[0, 0, 0] * a[1, 1, 1] * a[1, 1, 0] * a[0, 0, 1]
          + a[0, 1, 1] * a[1, 0, 0] * a[1, 0, 1] * a[0, 1, 0]
          + a[0, 1, 1] * a[1, 0, 0] * a[1, 1, 0] * a[0, 0, 1]
          + a[1, 0, 1] * a[0, 1, 0] * a[1, 1, 0] * a[0, 0, 1])
    d3 = (a[0, 0, 0] * a[1, 1, 0] * a[1, 0, 1] * a[0, 1, 1]
          + a[1, 1, 1] * a[0, 0, 1] * a[0, 1, 0] * a[1, 0, 0])
    return float(4.0 * abs(d1 - 2.0 * d2 + 4.0 * d3))
