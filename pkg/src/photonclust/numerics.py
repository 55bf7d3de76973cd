"""Dense linear-algebra kernels shared by the samplers.

Every matrix in this package is small (a few dozen rows at most), so the
routines favour clarity and reproducibility over asymptotic speed.  All
eigenwork funnels through one cyclic-Jacobi routine; results therefore do
not depend on the LAPACK build of the host.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "check_symmetric",
    "jacobi_eigh",
    "sigma_max",
    "psd_sqrt",
    "TakagiResult",
    "takagi_real_symmetric",
    "validate_unitary",
]


def check_symmetric(A, tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a float array after checking ``A == A.T`` within ``tol`` (max-abs)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    dev = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} is not symmetric: max |A - A.T| = {dev:.3e} exceeds {tol:.1e}")
    return A


def jacobi_eigh(S, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : array_like
        Real symmetric matrix.
    tol : float
        Convergence threshold: the sweep loop stops once the off-diagonal
        Frobenius mass falls below ``tol * ||S||_F``.
    max_sweeps : int
        Hard sweep cap; exceeding it raises :class:`NumericalError`.

    Returns
    -------
    (w, V) : eigenvalues in ascending order and eigenvectors as columns,
        satisfying ``S @ V == V @ diag(w)``.
    """
    A = check_symmetric(S, name="jacobi_eigh input").copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 0:
        return np.empty(0), V
    scale = float(np.linalg.norm(A))
    if scale == 0.0:
        return np.zeros(n), V
    # Individual rotations below this size cannot move the sweep past the
    # convergence threshold, so they are skipped.
    skip = tol * scale / (n * n)
    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2)))
        if off <= tol * scale:
            w = np.diag(A).copy()
            order = np.argsort(w, kind="stable")
            return w[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                # The rotation was chosen to annihilate this pair exactly.
                A[p, q] = 0.0
                A[q, p] = 0.0
                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    raise NumericalError(
        f"jacobi_eigh did not converge in {max_sweeps} sweeps "
        f"(n={n}, residual off-diagonal mass {off:.3e})"
    )


def sigma_max(M) -> float:
    """Largest singular value of a real rectangular matrix.

    Computed as ``sqrt(lambda_max(M.T @ M))`` with the Gram matrix
    eigendecomposed by :func:`jacobi_eigh` (the smaller Gram side is used).
    Zero for an all-zero or empty matrix.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"sigma_max expects a 2-d array, got shape {M.shape}")
    if M.size == 0:
        return 0.0
    G = M.T @ M if M.shape[1] <= M.shape[0] else M @ M.T
    G = (G + G.T) / 2.0
    w, _ = jacobi_eigh(G)
    return float(np.sqrt(max(w[-1], 0.0)))


def psd_sqrt(S, eig_floor: float = -1e-10) -> np.ndarray:
    """Symmetric square root ``Q`` of a positive semidefinite matrix, ``Q @ Q == S``.

    Eigenvalues in ``[eig_floor, 0)`` are clamped to zero; anything below the
    floor raises ``ValueError``.  The clamp is what keeps unitary dilation
    usable when the scaled matrix has singular values equal to 1, where
    ``I - D D.T`` is singular by construction.
    """
    S = check_symmetric(S, name="psd_sqrt input")
    w, V = jacobi_eigh(S)
    if w.size and w[0] < eig_floor:
        raise ValueError(
            f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e} "
            f"below floor {eig_floor:.1e}"
        )
    Q = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return (Q + Q.T) / 2.0


@dataclass(frozen=True)
class TakagiResult:
    """Symmetric factorization ``A = unitary @ diag(lambdas) @ unitary.T``.

    ``lambdas`` are nonnegative and sorted descending; ``unitary`` is complex
    even for real input because columns of negative eigenvalue carry a factor
    ``1j`` (which flips the eigenvalue sign under the plain-transpose
    congruence).
    """

    unitary: np.ndarray
    lambdas: np.ndarray


def takagi_real_symmetric(A, recon_tol: float = 1e-8) -> TakagiResult:
    """Takagi factorization of a real symmetric matrix via its eigensystem."""
    A = check_symmetric(A, name="takagi input")
    w, V = jacobi_eigh(A)
    lam = np.abs(w)
    order = np.argsort(-lam, kind="stable")
    w = w[order]
    lam = lam[order]
    U = V[:, order].astype(complex)
    U[:, w < 0.0] *= 1j
    dev = float(np.max(np.abs((U * lam) @ U.T - A))) if A.size else 0.0
    if dev > recon_tol:
        raise NumericalError(f"takagi reconstruction off by {dev:.3e}")
    return TakagiResult(unitary=U, lambdas=lam)


def validate_unitary(U, tol: float = 1e-10) -> float:
    """Raise :class:`NumericalError` unless ``U.conj().T @ U == I`` within ``tol`` (max-abs).

    Returns the observed deviation when the check passes.
    """
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"unitary must be square, got shape {U.shape}")
    n = U.shape[0]
    dev = float(np.max(np.abs(U.conj().T @ U - np.eye(n)))) if n else 0.0
    if dev > tol:
        raise NumericalError(f"matrix is not unitary: max |U^H U - I| = {dev:.3e} exceeds {tol:.1e}")
    return dev
