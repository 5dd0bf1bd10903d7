"""Dense float64 kernels: thin SVD, PSD eigendecomposition, Cholesky, norms.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. Every
public function validates its inputs through :func:`as_matrix` and never
mutates them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import DimensionError, NotSPDError, NumericalError

SYMMETRY_RTOL = 1e-10


def as_matrix(a, name="matrix", allow_empty=True) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float64 array.

    Zero-sized dimensions are allowed unless ``allow_empty`` is False, since
    key sets such as an absent preserved block are naturally ``d x 0``.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True)
class CholeskyFactor:
    l: np.ndarray  # noqa: E741
    dim: int


def thin_svd(a) -> SvdResult:
    """Economy SVD returning ``min(rows, cols)`` triplets, sigma descending."""
    a = as_matrix(a, "a")
    m, n = a.shape
    k = min(m, n)
    if k == 0:
        return SvdResult(np.zeros((m, 0)), np.zeros(0), np.zeros((0, n)))
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}", a.shape) from exc
    return SvdResult(u, s, vt)


def psd_eig(a):
    """Eigendecomposition of a symmetric PSD matrix.

    Returns ``(vectors, values)`` with values sorted descending and clipped
    at zero, so they coincide with the singular values of ``a``.
    """
    a = as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"psd_eig needs a square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros((0, 0)), np.zeros(0)
    try:
        w, v = np.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}", a.shape) from exc
    order = np.argsort(w)[::-1]
    return v[:, order], np.clip(w[order], 0.0, None)


def cholesky(a) -> CholeskyFactor:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises
    ------
    DimensionError
        If ``a`` is not square or not symmetric to 1e-10 relative tolerance.
    NotSPDError
        On a non-positive pivot; ``err.pivot`` is the 0-based pivot index.
    """
    a = as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise DimensionError(f"cholesky needs a square matrix, got {a.shape}")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise DimensionError("cholesky input is not symmetric to 1e-10 relative tolerance")
    if n == 0:
        return CholeskyFactor(np.zeros((0, 0)), 0)
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotSPDError(info - 1, a.shape)
    if info < 0:
        raise NumericalError(f"dpotrf rejected argument {-info}", a.shape)
    return CholeskyFactor(np.tril(c), n)


def tri_solve(factor: CholeskyFactor, b) -> np.ndarray:
    """Solve ``(L L^T) X = b`` by forward then backward substitution."""
    b = as_matrix(b, "b")
    if factor.dim != b.shape[0]:
        raise DimensionError(f"factor has dim {factor.dim} but b has {b.shape[0]} rows")
    if factor.dim == 0:
        return b.copy()
    z = scipy.linalg.solve_triangular(factor.l, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(factor.l, z, lower=True, trans="T", check_finite=False)


def spectral_norm(a) -> float:
    a = as_matrix(a, "a")
    if a.size == 0:
        return 0.0
    return float(thin_svd(a).sigma[0])


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def relative_frobenius(a, reference) -> float:
    """``||a||_F / ||reference||_F``, or ``||a||_F`` when the reference is zero."""
    denom = frobenius(reference)
    num = frobenius(a)
    return num / denom if denom > 0 else num
