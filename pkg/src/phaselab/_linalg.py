"""Numerical rank and null-space helpers shared by every module."""

import numpy as np

#: Absolute floor on singular values counted as nonzero.
DEFAULT_ATOL = 1e-10


def rank_tolerance(s, shape, atol=DEFAULT_ATOL):
    """Threshold below which a singular value is treated as zero.

    ``max(rows, cols) * eps * s_max``, floored at ``atol``.
    """
    s = np.asarray(s)
    smax = s.max() if s.size else 0.0
    rtol = max(shape) * np.finfo(float).eps
    return max(rtol * smax, atol)


def numerical_rank(A, atol=DEFAULT_ATOL):
    A = np.atleast_2d(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int((s > rank_tolerance(s, A.shape, atol)).sum())


def null_space(A, atol=DEFAULT_ATOL):
    """Orthonormal basis (as columns) for the null space of ``A``.

    Returns
    -------
    basis : ndarray, shape (A.shape[1], nullity)
    s : ndarray
        Singular values of ``A``, padded with zeros up to ``A.shape[1]``.
    """
    A = np.atleast_2d(A)
    ncols = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(ncols, dtype=A.dtype), np.zeros(ncols)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    rank = int((s > rank_tolerance(s, A.shape, atol)).sum())
    padded = np.zeros(ncols)
    padded[: s.size] = s
    return vh[rank:].conj().T, padded


def batched_ranks(mats, atol=DEFAULT_ATOL, ncols=None):
    """Numerical ranks of a stack of matrices of shape (B, m, n).

    ``ncols`` (length B) overrides the column count used in the relative
    tolerance; masked submatrices pass the true subset size here.
    """
    s = np.linalg.svd(mats, compute_uv=False)
    smax = s[:, 0] if s.shape[1] else np.zeros(len(s))
    if ncols is None:
        dims = np.full(len(s), max(mats.shape[1:]))
    else:
        dims = np.maximum(mats.shape[1], np.asarray(ncols))
    tol = np.maximum(dims * np.finfo(float).eps * smax, atol)
    return (s > tol[:, None]).sum(axis=1)
