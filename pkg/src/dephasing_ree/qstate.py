"""Dense linear algebra for small multi-qubit registers.

States are plain complex numpy arrays. Basis ordering is |b1 b2 ... bn>
with qubit 1 the most significant bit, so index(|b1 b2 b3>) = 4 b1 + 2 b2 + b3.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

__all__ = [
    "InvalidStateError",
    "EIGEN_FLOOR",
    "num_qubits",
    "ket",
    "projector",
    "tensor",
    "partial_trace",
    "check_density_matrix",
    "safe_eigvalsh",
    "von_neumann_entropy",
    "relative_entropy",
    "random_density_matrix",
    "random_unitary",
    "spin_labels",
]

# eigenvalues in (-EIGEN_FLOOR, 0) are treated as numerical noise and clipped
EIGEN_FLOOR = 1e-10
SUPPORT_TOL = 1e-12
SUPPORT_WEIGHT = 1e-10


class InvalidStateError(ValueError):
    """Raised when an operator is not a valid density matrix or state vector."""


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise InvalidStateError(f"dimension {dim} is not a power of two >= 2")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis vector, e.g. ``ket("101")``."""
    n = len(bits)
    v = np.zeros(1 << n, dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > 1e-12:
        raise InvalidStateError(f"state vector norm^2 = {norm!r}, expected 1")
    return np.outer(psi, psi.conj())


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidStateError(f"{name} must be a square matrix, got shape {a.shape}")
    num_qubits(a.shape[0])
    return a


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of square operators in register order."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = _as_square(ops[0], "operand 0")
    for k, op in enumerate(ops[1:], start=1):
        out = np.kron(out, _as_square(op, f"operand {k}"))
    return out


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduce ``rho`` onto the qubits in ``keep`` (0-based, register order).

    The kept qubits stay in ascending register order regardless of the order
    given in ``keep``.
    """
    rho = _as_square(rho, "rho")
    n = num_qubits(rho.shape[0])
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"qubit index out of range for a {n}-qubit register: {keep}")
    traced = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # trace pairs from the highest index down so earlier axis numbers stay valid
    for q in reversed(traced):
        nq = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + nq)
    d = 1 << len(keep)
    return t.reshape(d, d)


def check_density_matrix(rho: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return ``rho`` as complex."""
    rho = np.asarray(_as_square(rho, "rho"), dtype=complex)
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise InvalidStateError(f"trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho).min()
    if lam_min < -EIGEN_FLOOR:
        raise InvalidStateError(f"matrix has eigenvalue {lam_min:.3e} below -{EIGEN_FLOOR}")
    return rho


def safe_eigvalsh(rho: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(_hermitize(rho))
    if lam.min() < -EIGEN_FLOOR:
        raise InvalidStateError(f"matrix has eigenvalue {lam.min():.3e} below -{EIGEN_FLOOR}")
    return np.clip(lam, 0.0, None)


def _hermitize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def _xlogx_sum(lam: np.ndarray) -> float:
    lam = lam[lam > 0]
    return float(np.sum(lam * np.log(lam)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -Tr rho ln rho in nats, with 0 ln 0 = 0."""
    rho = _as_square(rho, "rho")
    return max(0.0, -_xlogx_sum(safe_eigvalsh(rho)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Quantum relative entropy S(rho || sigma) = Tr rho (ln rho - ln sigma), nats.

    Returns ``inf`` when the support of ``rho`` is not contained in the support
    of ``sigma``.
    """
    rho = _as_square(rho, "rho")
    sigma = _as_square(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    lam_r = safe_eigvalsh(rho)
    lam_s, vec_s = np.linalg.eigh(_hermitize(sigma))
    if lam_s.min() < -EIGEN_FLOOR:
        raise InvalidStateError(f"sigma has eigenvalue {lam_s.min():.3e} below -{EIGEN_FLOOR}")
    # weight of rho on each eigenvector of sigma
    weights = np.real(np.einsum("ij,ik,kj->j", vec_s.conj(), _hermitize(rho), vec_s))
    null = lam_s < SUPPORT_TOL
    if np.any(weights[null] > SUPPORT_WEIGHT):
        return float("inf")
    cross = float(np.sum(weights[~null] * np.log(lam_s[~null])))
    return max(0.0, _xlogx_sum(lam_r) - cross)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = _hermitize(rho)
    return rho / np.trace(rho).real


def spin_labels(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Bit table ``bits[b, i]`` and sigma_z eigenvalues ``s = 1 - 2 bits``."""
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return bits, 1 - 2 * bits
