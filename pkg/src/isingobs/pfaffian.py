"""Pfaffians of antisymmetric matrices.

Small matrices (dimension <= 8) use the row expansion, vectorized over any
leading batch axes; larger ones use Parlett-Reid elimination with pivoting,
which reduces the matrix to tridiagonal form without changing the Pfaffian
up to the recorded sign flips.
"""

from __future__ import annotations

import numpy as np

EXPANSION_MAX_DIM = 8


class AntisymmetryError(ValueError):
    pass


def _check(M: np.ndarray, tol: float):
    n = M.shape[-1]
    if M.shape[-2] != n:
        raise AntisymmetryError("matrix must be square")
    if n % 2:
        raise AntisymmetryError("odd dimension: the Pfaffian is zero by convention and not supported")
    if n:
        scale = max(float(np.max(np.abs(M))), 1e-300)
        dev = float(np.max(np.abs(M + np.swapaxes(M, -1, -2))))
        if dev > tol * scale:
            raise AntisymmetryError(f"matrix is not antisymmetric (deviation {dev:.3g})")


def _expand(M: np.ndarray, signed: bool = True) -> np.ndarray:
    n = M.shape[-1]
    if n == 0:
        return np.ones(M.shape[:-2], dtype=M.dtype)
    if n == 2:
        return M[..., 0, 1]
    out = np.zeros(M.shape[:-2], dtype=M.dtype)
    rest = np.arange(1, n)
    for pos, j in enumerate(rest):
        keep = np.delete(rest, pos)
        minor = M[..., keep[:, None], keep[None, :]]
        sign = 1 if (pos % 2 == 0 or not signed) else -1
        out = out + sign * M[..., 0, j] * _expand(minor, signed)
    return out


def _parlett_reid(A: np.ndarray) -> complex:
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1 :, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return 0j
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            col = A[k + 2 :, k + 1].copy()
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def pfaffian(M, tol: float = 1e-12):
    """Pfaffian of an even-dimensional antisymmetric matrix or a stack of them.

    ``Pf(M)^2 == det(M)``; the empty matrix has Pfaffian 1.
    """
    M = np.asarray(M)
    if not np.iscomplexobj(M):
        M = M.astype(float)
    _check(M, tol)
    n = M.shape[-1]
    if n <= EXPANSION_MAX_DIM:
        out = _expand(M)
    else:
        flat = M.reshape((-1, n, n))
        out = np.array([_parlett_reid(a) for a in flat]).reshape(M.shape[:-2])
        if not np.iscomplexobj(M):
            out = out.real
    return out if np.ndim(out) else out[()]


def pfaffian_elimination(M, tol: float = 1e-12):
    """Parlett-Reid route regardless of size; used to cross-check the expansion."""
    M = np.asarray(M)
    _check(M, tol)
    return _parlett_reid(M)


def matching_sum_abs(M):
    """Sum over perfect matchings of ``prod |M_ab|`` (hafnian of ``|M|``).

    The magnitude scale of the Pfaffian's terms, for relative error
    estimates where the Pfaffian itself cancels to zero.
    """
    A = np.abs(np.asarray(M))
    n = A.shape[-1]
    if n % 2:
        raise ValueError("odd dimension")
    if n > EXPANSION_MAX_DIM:
        raise ValueError("matching sum only implemented up to dimension 8")
    return _expand(A, signed=False)
