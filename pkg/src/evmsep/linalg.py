"""Dense eigen kernels for small real-symmetric and complex-Hermitian matrices.

Every positive-semidefiniteness question in this package reduces to the
smallest eigenvalue of a matrix of dimension at most 24, so a single cyclic
Jacobi eigensolver for real symmetric input is the only kernel that needs
hardening.  Complex Hermitian matrices are routed through the standard real
embedding [[Re, -Im], [Im, Re]], which doubles the multiplicity of every
eigenvalue and preserves semidefiniteness in both directions.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ConvergenceError",
    "DEFAULT_PSD_TOL",
    "jacobi_eigh",
    "real_embedding",
    "min_eig",
    "is_psd",
]

# PSD slack, relative to the Frobenius norm of the tested matrix.
DEFAULT_PSD_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """The Jacobi sweep cap was exhausted before the off-diagonal collapsed."""


def _square(mat) -> np.ndarray:
    a = np.asarray(mat)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape!r}")
    return a


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("matrix is not symmetric")
    return (a + a.T) / 2.0


def jacobi_eigh(mat, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvectors in the columns of ``v``, satisfying
    ``mat @ v == v @ diag(w)`` to roughly ``tol * max(1, ||mat||_F)``.
    Sweeps run until the off-diagonal Frobenius mass falls below that same
    threshold; if ``max_sweeps`` is hit first a :class:`ConvergenceError` is
    raised so a stalled solve is loud rather than silently wrong.
    """
    a = _square(mat)
    if np.iscomplexobj(a):
        raise ValueError("jacobi_eigh expects a real matrix; embed complex input first")
    a = _check_symmetric(np.array(a, dtype=float))
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v

    scale = max(1.0, float(np.linalg.norm(a)))
    thresh = tol * scale
    # Entries already this small cannot move the spectrum at the target
    # accuracy, so rotating on them just churns.
    skip = thresh / (10.0 * n)

    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.tril(a, -1) ** 2)))
        if off <= thresh:
            order = np.argsort(np.diag(a), kind="stable")
            return np.diag(a)[order].copy(), v[:, order].copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q

    raise ConvergenceError(
        f"Jacobi eigensolver did not converge after {max_sweeps} sweeps "
        f"(dim {n}, residual off-diagonal {off:.3e})"
    )


def real_embedding(mat) -> np.ndarray:
    """Embed an n x n Hermitian matrix as the 2n x 2n real symmetric
    ``[[Re, -Im], [Im, Re]]``.

    The embedding repeats each eigenvalue of the input twice, so the input
    is positive semidefinite exactly when the embedding is.
    """
    h = _square(mat)
    scale = max(1.0, float(np.max(np.abs(h))) if h.size else 0.0)
    if not np.allclose(h, h.conj().T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("matrix is not Hermitian")
    re = np.real(h).astype(float)
    im = np.imag(h).astype(float)
    re = (re + re.T) / 2.0
    im = (im - im.T) / 2.0
    return np.block([[re, -im], [im, re]])


def min_eig(mat, tol: float = 1e-12) -> float:
    """Smallest eigenvalue.  Complex Hermitian input is embedded first."""
    a = _square(mat)
    if np.iscomplexobj(a):
        a = real_embedding(a)
    w, _ = jacobi_eigh(a, tol=tol)
    return float(w[0])


def is_psd(mat, tol: float = DEFAULT_PSD_TOL) -> bool:
    """Positive semidefinite up to ``tol`` relative to the Frobenius norm."""
    a = _square(mat)
    scale = max(1.0, float(np.linalg.norm(a)))
    return min_eig(a) >= -tol * scale
