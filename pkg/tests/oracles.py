"""Reference implementations written independently of the package internals.

Everything here is plain loops or a different array layout, so agreement with
the package is evidence rather than tautology.
"""

import math

import numpy as np


def cost_loops(W, T, V, X):
    """ILRMA cost by explicit loops over (i, j, n)."""
    I, J, N = X.shape
    L = T.shape[1]
    total = 0.0
    for i in range(I):
        for j in range(J):
            for n in range(N):
                y = sum(W[i, n, m] * X[i, j, m] for m in range(N))
                r = sum(T[i, l, n] * V[l, j, n] for l in range(L))
                total += abs(y) ** 2 / r + math.log(r)
        total -= 2 * J * math.log(abs(np.linalg.det(W[i])))
    return total


def conventional_ilrma_nmf(W, T, V, X):
    """Classic square-root multiplicative ILRMA update of bases then activations.

    Works in a source-major layout: T_n (I, L), V_n (L, J) stored as (N, I, L)
    and (N, L, J); returns arrays in the package layout.
    """
    Tn = np.ascontiguousarray(T.transpose(2, 0, 1))
    Vn = np.ascontiguousarray(V.transpose(2, 0, 1))
    Xn = X.transpose(2, 0, 1)  # (M, I, J)
    N = Tn.shape[0]
    Y = np.stack([sum(W[:, n, m][:, None] * Xn[m] for m in range(N)) for n in range(N)])
    Pw = np.abs(Y) ** 2
    for n in range(N):
        R = Tn[n] @ Vn[n]
        Tn[n] = Tn[n] * np.sqrt((Pw[n] * R**-2) @ Vn[n].T / (R**-1 @ Vn[n].T))
        R = Tn[n] @ Vn[n]
        Vn[n] = Vn[n] * np.sqrt(Tn[n].T @ (Pw[n] * R**-2) / (Tn[n].T @ R**-1))
    return Tn.transpose(1, 2, 0), Vn.transpose(1, 2, 0)


def iterative_projection_loops(W, R, X):
    """AuxIVA-style row updates bin by bin, source by source."""
    I, J, N = X.shape
    W = W.copy()
    for i in range(I):
        for n in range(N):
            U = sum(np.outer(X[i, j], X[i, j].conj()) / R[i, j, n] for j in range(J)) / J
            w = np.linalg.inv(W[i] @ U)[:, n]
            w = w / np.sqrt((w.conj() @ U @ w).real)
            W[i, n] = w.conj()
    return W


def dft_frame(frame):
    """One-sided DFT by direct summation."""
    F = len(frame)
    k = np.arange(F // 2 + 1)[:, None]
    n = np.arange(F)[None, :]
    return (frame[None, :] * np.exp(-2j * np.pi * k * n / F)).sum(axis=1)
