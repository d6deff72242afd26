"""Singular value decomposition of small dense matrices.

One-sided Jacobi rotations applied to column pairs until all columns are
mutually orthogonal. At the sizes used here (d <= a few hundred) this is
simple, accurate to machine precision, and needs no external solver.
"""

from __future__ import annotations

import math

import numpy as np


def svd_small(m, tol: float = 1e-13, max_sweeps: int = 60):
    """Factor a real matrix as m = u @ diag(s) @ v.T.

    Parameters
    ----------
    m : array_like, shape (rows, cols)
        Real matrix with finite entries.
    tol : float
        Relative off-diagonal threshold below which a column pair is
        considered already orthogonal.
    max_sweeps : int
        Safety cap on full Jacobi sweeps; cyclic sweeps converge long
        before this at the supported sizes.

    Returns
    -------
    u : ndarray, shape (rows, k)
        Orthonormal columns (left singular vectors), k = min(rows, cols).
    s : ndarray, shape (k,)
        Singular values, non-negative and descending.
    v : ndarray, shape (cols, k)
        Orthonormal columns (right singular vectors).
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")

    transposed = a.shape[0] < a.shape[1]
    if transposed:
        a = np.ascontiguousarray(a.T)

    rows, cols = a.shape
    v = np.eye(cols)

    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                ap = a[:, p]
                aq = a[:, q]
                alpha = ap @ ap
                beta = aq @ aq
                gamma = ap @ aq
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                # Rutishauser's stable rotation annihilating gamma.
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                sn = c * t
                a[:, p], a[:, q] = c * ap - sn * aq, sn * ap + c * aq
                v[:, p], v[:, q] = c * v[:, p] - sn * v[:, q], sn * v[:, p] + c * v[:, q]
        if not rotated:
            break

    s = np.sqrt(np.einsum("ij,ij->j", a, a))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    a = a[:, order]
    v = v[:, order]

    # Normalize to get u; complete an orthonormal basis for null columns.
    u = np.zeros((rows, cols))
    cutoff = max(rows, cols) * np.finfo(np.float64).eps * (s[0] if s[0] > 0 else 1.0)
    filled = []
    null_cols = []
    for j in range(cols):
        if s[j] > cutoff:
            u[:, j] = a[:, j] / s[j]
            filled.append(j)
        else:
            s[j] = 0.0
            null_cols.append(j)
    for j in null_cols:
        u[:, j] = _orthonormal_completion(u, filled)
        filled.append(j)

    if transposed:
        return v, s, u
    return u, s, v


def _orthonormal_completion(u: np.ndarray, filled: list[int]) -> np.ndarray:
    """Unit vector orthogonal to the given columns of u (deterministic).

    Uses the standard basis vector with the largest residual after
    projection; its norm is at least sqrt((rows - |filled|) / rows).
    """
    rows = u.shape[0]
    if len(filled) >= rows:
        raise ValueError("cannot complete an orthonormal basis")
    if not filled:
        e = np.zeros(rows)
        e[0] = 1.0
        return e
    basis = u[:, filled]
    residuals = np.eye(rows) - basis @ basis.T
    norms = np.linalg.norm(residuals, axis=0)
    e = residuals[:, int(np.argmax(norms))]
    e = e - basis @ (basis.T @ e)  # second pass for orthogonality
    return e / np.linalg.norm(e)
