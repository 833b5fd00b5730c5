"""Compiled inner loop of the REE objective.

Each product term is stored as three unnormalized single-qubit factors
x_k, y_k, z_k; the ket psi_k = x_k (x) y_k (x) z_k carries its weight in its
norm. The scored mixture is

    sigma = (1 - eps) sum_k |psi_k><psi_k| / sum_k <psi_k|psi_k> + eps I / 8.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def objective_and_gradient(rho, neg_entropy, eps, factors, want_grad):
    """Return S(rho || sigma) and its gradient with respect to the factors.

    The gradient is returned as a complex array shaped like ``factors``
    holding dS/d Re + i dS/d Im. The gradient with respect to sigma is
    -D log(sigma)[rho], evaluated with divided differences of log in the
    eigenbasis of sigma.
    """
    k = factors.shape[0]
    psi = np.empty((k, 8), np.complex128)
    for t in range(k):
        for a in range(2):
            for b in range(2):
                ab = factors[t, 0, a] * factors[t, 1, b]
                for c in range(2):
                    psi[t, 4 * a + 2 * b + c] = ab * factors[t, 2, c]
    raw = np.zeros((8, 8), np.complex128)
    for t in range(k):
        for i in range(8):
            pi = psi[t, i]
            for j in range(8):
                raw[i, j] += pi * np.conj(psi[t, j])
    norm = 0.0
    for i in range(8):
        norm += raw[i, i].real
    sigma = raw * ((1.0 - eps) / norm)
    for i in range(8):
        sigma[i, i] += eps / 8.0
    lam, u = np.linalg.eigh(sigma)
    for i in range(8):
        if lam[i] < eps / 16.0:
            lam[i] = eps / 16.0
    loglam = np.log(lam)
    r = u.conj().T @ rho @ u
    value = neg_entropy
    for i in range(8):
        value -= r[i, i].real * loglam[i]
    grad = np.zeros((k, 3, 2), np.complex128)
    if not want_grad:
        return value, grad

    m = np.empty((8, 8), np.complex128)
    for i in range(8):
        for j in range(8):
            d = lam[i] - lam[j]
            if abs(d) <= 1e-10 * max(lam[i], lam[j]):
                dd = 2.0 / (lam[i] + lam[j])
            else:
                dd = (loglam[i] - loglam[j]) / d
            m[i, j] = r[i, j] * dd
    g = -(1.0 - eps) * (u @ m @ u.conj().T)
    # chain rule through the trace normalization of the raw mixture
    tr_g_raw = 0.0
    for i in range(8):
        for j in range(8):
            tr_g_raw += (g[i, j] * raw[j, i]).real
    for i in range(8):
        g[i, i] -= tr_g_raw / norm
    g /= norm
    gpsi = psi @ g.T
    for t in range(k):
        # Wirtinger derivative of <psi_t|g|psi_t> with respect to each conj(factor)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    v = gpsi[t, 4 * a + 2 * b + c]
                    grad[t, 0, a] += v * np.conj(factors[t, 1, b] * factors[t, 2, c])
                    grad[t, 1, b] += v * np.conj(factors[t, 0, a] * factors[t, 2, c])
                    grad[t, 2, c] += v * np.conj(factors[t, 0, a] * factors[t, 1, b])
    return value, 2.0 * grad
