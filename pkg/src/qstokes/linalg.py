"""Dense complex linear algebra: Sylvester solves, nilpotent log/exp and
spectral (generalized eigenspace) decompositions of small matrices."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .blocks import as_structure
from .config import TOL
from .errors import (
    DimensionMismatch,
    DunfordFailure,
    IllConditionedEigenproblem,
    NotNilpotent,
    NotUnipotent,
    ResonantSylvester,
)

log = logging.getLogger(__name__)

#: when True every Sylvester solve re-checks its residual
DEBUG_RESIDUALS = True


def _square(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    return M


def sylvester_operator(lam, A_j, A_i):
    """Matrix of ``X -> lam X A_j - A_i X`` acting on column-major ``vec(X)``."""
    A_j = _square(A_j, "A_j")
    A_i = _square(A_i, "A_i")
    return lam * np.kron(A_j.T, np.eye(A_i.shape[0])) - np.kron(np.eye(A_j.shape[0]), A_i)


def sylvester_solve(lam, A_j, A_i, V, tol=None, rtol=None):
    """Solve ``lam X A_j - A_i X = V`` for ``X``.

    The equation is lifted to the Kronecker system
    ``(lam A_j^T (x) I - I (x) A_i) vec(X) = vec(V)``.  Near-resonant
    ``lam`` (relative smallest singular value below ``tol``) raises
    :class:`ResonantSylvester`.
    """
    A_j = _square(A_j, "A_j")
    A_i = _square(A_i, "A_i")
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    if V.shape != (A_i.shape[0], A_j.shape[0]):
        raise DimensionMismatch(
            f"V has shape {V.shape}, expected {(A_i.shape[0], A_j.shape[0])}")
    X = sylvester_solve_batch(np.array([lam], dtype=complex), A_j, A_i, V[None], tol=tol, rtol=rtol)
    return X[0]


def sylvester_solve_batch(lams, A_j, A_i, V, tol=None, rtol=None):
    """Vectorized :func:`sylvester_solve` over a stack of ``lam`` values.

    ``lams`` has shape ``(N,)`` and ``V`` shape ``(N, r_i, r_j)``.
    """
    tol = TOL.sylvester if tol is None else tol
    rtol = TOL.rtol if rtol is None else rtol
    A_j = _square(A_j, "A_j")
    A_i = _square(A_i, "A_i")
    lams = np.asarray(lams, dtype=complex).reshape(-1)
    V = np.asarray(V, dtype=complex)
    ri, rj = A_i.shape[0], A_j.shape[0]
    N = lams.shape[0]
    if V.shape != (N, ri, rj):
        raise DimensionMismatch(f"V has shape {V.shape}, expected {(N, ri, rj)}")
    if N == 0:
        return V.copy()
    if ri == 1 and rj == 1:
        denom = lams * A_j[0, 0] - A_i[0, 0]
        scale = np.maximum(np.abs(lams * A_j[0, 0]), np.abs(A_i[0, 0]))
        bad = np.abs(denom) <= tol * scale
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ResonantSylvester(
                f"resonant Sylvester operator at lambda={lams[k]!r}",
                lam=lams[k], sigma_min=float(abs(denom[k])))
        return V / denom[:, None, None]
    Kj = np.kron(A_j.T, np.eye(ri))
    Ki = np.kron(np.eye(rj), A_i)
    K = lams[:, None, None] * Kj[None] - Ki[None]
    sv = np.linalg.svd(K, compute_uv=False)
    bad = sv[:, -1] <= tol * sv[:, 0]
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ResonantSylvester(
            f"resonant Sylvester operator at lambda={lams[k]!r}",
            lam=lams[k], sigma_min=float(sv[k, -1]))
    vecV = V.transpose(0, 2, 1).reshape(N, ri * rj)
    vecX = np.linalg.solve(K, vecV[..., None])[..., 0]
    X = vecX.reshape(N, rj, ri).transpose(0, 2, 1)
    if DEBUG_RESIDUALS:
        res = lams[:, None, None] * (X @ A_j) - A_i @ X - V
        nx = np.linalg.norm(X, axis=(1, 2))
        scale = (np.abs(lams) * nx * np.linalg.norm(A_j) + np.linalg.norm(A_i) * nx
                 + np.linalg.norm(V, axis=(1, 2)))
        rn = np.linalg.norm(res, axis=(1, 2))
        if np.any(rn > max(rtol, 1e-10) * np.maximum(scale, np.finfo(float).tiny)):
            k = int(np.argmax(rn / np.maximum(scale, np.finfo(float).tiny)))
            raise ResonantSylvester(
                f"Sylvester residual {rn[k]:.3e} too large at lambda={lams[k]!r}",
                lam=lams[k], sigma_min=float(sv[k, -1]))
    return X


def log_unipotent(M, structure, tol=1e-10):
    """Logarithm of a block-unipotent matrix by its terminating series.

    ``M - I`` must be strictly block upper triangular for ``structure``;
    the series then stops after ``k - 1`` terms where ``k`` is the number of
    blocks.
    """
    st = as_structure(structure)
    M = st.check_square(M)
    dev = st.unipotent_deviation(M)
    if dev > tol * max(1.0, float(np.max(np.abs(M)))):
        raise NotUnipotent(f"matrix deviates from unipotent block shape by {dev:.3e}")
    N = np.where(st.upper_mask(), M, 0.0)
    out = np.zeros_like(N)
    P = np.eye(st.n, dtype=complex)
    for p in range(1, st.k):
        P = P @ N
        out = out + ((-1) ** (p - 1) / p) * P
    return out


def exp_nilpotent(N, structure, tol=1e-10):
    """Exponential of a strictly block-upper-triangular matrix (finite sum)."""
    st = as_structure(structure)
    N = st.check_square(N)
    dev = st.nilpotent_deviation(N)
    if dev > tol * max(1.0, float(np.max(np.abs(N)))):
        raise NotNilpotent(f"matrix deviates from nilpotent block shape by {dev:.3e}")
    N = np.where(st.upper_mask(), N, 0.0)
    out = np.eye(st.n, dtype=complex)
    P = np.eye(st.n, dtype=complex)
    for p in range(1, st.k):
        P = P @ N
        out = out + P / math.factorial(p)
    return out


def unipotent_inverse(M, structure):
    """Inverse of a block-unipotent matrix, keeping its exact shape."""
    st = as_structure(structure)
    N = np.where(st.upper_mask(), st.check_square(M), 0.0)
    out = np.eye(st.n, dtype=complex)
    P = np.eye(st.n, dtype=complex)
    for _ in range(1, st.k):
        P = -P @ N
        out = out + P
    return out


def null_space(M, rtol=1e-10):
    """Orthonormal basis (columns) of the numerical kernel of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.shape[0] == 0:
        return np.eye(M.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(M)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(top, 1.0)))
    return vh[rank:].conj().T


def eigen_clusters(M, tol=None):
    """Distinct eigenvalues of ``M`` with algebraic multiplicities.

    Eigenvalues within ``tol`` (relative) of each other are merged; the
    cluster value is the mean of its members.
    """
    tol = TOL.cluster if tol is None else tol
    vals = np.linalg.eigvals(_square(M, "M"))
    order = np.lexsort((vals.imag, vals.real))
    clusters: list[list[complex]] = []
    for v in vals[order]:
        for c in clusters:
            if abs(v - np.mean(c)) <= tol * max(1.0, abs(v)):
                c.append(v)
                break
        else:
            clusters.append([v])
    return [(complex(np.mean(c)), len(c)) for c in clusters]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Generalized eigenspace splitting ``M = S diag(B_1, ..., B_p) S^{-1}``."""

    values: tuple
    multiplicities: tuple
    basis: np.ndarray
    basis_inv: np.ndarray

    @property
    def columns(self):
        starts = np.concatenate([[0], np.cumsum(self.multiplicities)]).astype(int)
        return [slice(int(a), int(b)) for a, b in zip(starts[:-1], starts[1:])]

    def projector(self, k):
        cols = self.columns[k]
        return self.basis[:, cols] @ self.basis_inv[cols, :]

    def projectors(self):
        return [self.projector(k) for k in range(len(self.values))]


def spectral_decomposition(M, tol=None):
    M = _square(M, "M")
    n = M.shape[0]
    clusters = eigen_clusters(M, tol)
    bases = []
    for lam, m in clusters:
        P = np.linalg.matrix_power(M - lam * np.eye(n), m)
        _, s, vh = np.linalg.svd(P)
        bases.append(vh[n - m:].conj().T)
    S = np.hstack(bases)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e10:
        raise IllConditionedEigenproblem(
            f"generalized eigenspaces are numerically dependent (cond {cond:.2e})")
    return SpectralDecomposition(
        values=tuple(v for v, _ in clusters),
        multiplicities=tuple(m for _, m in clusters),
        basis=S,
        basis_inv=np.linalg.inv(S),
    )


def dunford(M, tol=None):
    """Multiplicative Dunford decomposition ``M = M_s M_u``.

    ``M_s`` is semisimple, ``M_u`` unipotent, and they commute.
    """
    M = _square(M, "M")
    sd = spectral_decomposition(M, tol)
    diag = np.concatenate([np.full(m, v) for v, m in zip(sd.values, sd.multiplicities)])
    Ms = sd.basis @ np.diag(diag) @ sd.basis_inv
    Mu = np.linalg.solve(Ms, M)
    n = M.shape[0]
    nil = np.linalg.matrix_power(Mu - np.eye(n), n)
    if np.max(np.abs(nil)) > 1e-8 * max(1.0, np.max(np.abs(M))) ** n:
        raise DunfordFailure("unipotent factor is not unipotent to tolerance")
    if np.max(np.abs(Ms @ Mu - Mu @ Ms)) > 1e-8 * max(1.0, np.max(np.abs(M))):
        raise DunfordFailure("Dunford factors do not commute")
    return Ms, Mu


def log_unipotent_matrix(U):
    """Logarithm of a unipotent matrix (nilpotent ``U - I``), no block shape."""
    U = _square(U, "U")
    n = U.shape[0]
    N = U - np.eye(n)
    out = np.zeros_like(N)
    P = np.eye(n, dtype=complex)
    for p in range(1, n + 1):
        P = P @ N
        out = out + ((-1) ** (p - 1) / p) * P
    return out


def exp_nilpotent_matrix(N):
    N = _square(N, "N")
    n = N.shape[0]
    out = np.eye(n, dtype=complex)
    P = np.eye(n, dtype=complex)
    for p in range(1, n + 1):
        P = P @ N
        out = out + P / math.factorial(p)
    return out
