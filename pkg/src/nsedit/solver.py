"""Closed-form weight updates for one edit batch.

All solvers return the matrix that is *added* to the weights, i.e. the
already-projected update ``Delta P``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DimensionError
from .numerics import as_matrix, cholesky, tri_solve
from .projector import Projector


@dataclass(frozen=True)
class EditBatch:
    """Keys ``K_t`` (``d_K x n``) and target values ``V_t`` (``d_v x n``)."""

    keys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        keys = as_matrix(self.keys, "keys")
        values = as_matrix(self.values, "values")
        if keys.shape[1] != values.shape[1]:
            raise DimensionError(
                f"keys have {keys.shape[1]} columns but values have {values.shape[1]}"
            )
        if keys.shape[1] < 1:
            raise DimensionError("an edit batch needs at least one key")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.keys.shape[1]


def _check_weights(w, batch: EditBatch) -> np.ndarray:
    w = as_matrix(w, "w")
    if w.shape != (batch.values.shape[0], batch.keys.shape[0]):
        raise DimensionError(
            f"weights {w.shape} do not map keys of dim {batch.keys.shape[0]} "
            f"to values of dim {batch.values.shape[0]}"
        )
    return w


def residual(w, batch: EditBatch) -> np.ndarray:
    """``R_t = V_t - W K_t``."""
    w = _check_weights(w, batch)
    return batch.values - w @ batch.keys


def _solve_right(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Return ``x @ inv(a)`` by an LU solve of ``a^T y = x^T``."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            y = scipy.linalg.solve(a.T, x.T, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise ConditioningError(f"dense system is singular to working precision: {exc}", a.shape) from exc
    return y.T


def solve_direct(w, p: Projector, batch: EditBatch, l2: float = 1.0) -> np.ndarray:
    """Dense ``R K^T P (K K^T P + l2 I)^{-1}``; an ``O(d^3)`` oracle for tests."""
    r = residual(w, batch)
    if not r.any():
        return np.zeros((r.shape[0], p.dim))
    pk = p.apply(batch.keys)  # (P K) = (K^T P)^T since P is symmetric
    a = batch.keys @ pk.T + l2 * np.eye(p.dim)
    return _solve_right(r @ pk.T, a)


def solve_woodbury(w, p: Projector, batch: EditBatch, l2: float = 1.0) -> np.ndarray:
    """Projected update through an ``n x n`` inner system.

    ``Y = P K``, ``S = l2 I + K^T Y = L L^T``, ``X = S^{-1} Y^T`` by two
    triangular solves, update ``= R X``. For ``l2 = 1`` this equals
    ``R (I + K^T P K)^{-1} K^T P``.
    """
    if l2 <= 0:
        raise ValueError("l2 must be positive")
    r = residual(w, batch)
    if not r.any():
        return np.zeros((r.shape[0], p.dim))
    y = p.apply(batch.keys)
    s = l2 * np.eye(batch.size) + batch.keys.T @ y
    factor = cholesky(s)
    x = tri_solve(factor, y.T)
    return r @ x


def solve_alphaedit(w, p0: Projector, preserved_keys, batch: EditBatch) -> np.ndarray:
    """Fixed-projector baseline ``R K^T P (K_p K_p^T P + K K^T P + I)^{-1}``.

    ``preserved_keys`` stacks the keys of earlier edits (may be ``d x 0``);
    ``p0`` is never realigned.
    """
    kp = as_matrix(preserved_keys, "preserved_keys")
    if kp.shape[0] != p0.dim:
        raise DimensionError(f"preserved keys have {kp.shape[0]} rows, projector dim is {p0.dim}")
    r = residual(w, batch)
    if not r.any():
        return np.zeros((r.shape[0], p0.dim))
    k = batch.keys
    gram = k @ k.T
    if kp.shape[1]:
        gram += kp @ kp.T
    # gram @ P in operator form: gram - (gram B) B^T
    if p0.rank:
        gram -= (gram @ p0.basis) @ p0.basis.T
    gram[np.diag_indices_from(gram)] += 1.0
    return _solve_right(r @ p0.apply(k).T, gram)


def solve_plain(w, preserved, batch: EditBatch, ridge: float = 1.0) -> np.ndarray:
    """Unprojected joint least-squares update.

    Minimizes ``||(W+D) K1 - V1||^2 + ||(W+D) K0 - V0||^2 + ridge ||D||^2``::

        D = (R1 K1^T + R0 K0^T) (K0 K0^T + K1 K1^T + ridge I)^{-1}

    with ``R0 = V0 - W K0`` (zero when the preserved facts are intact).
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    k0, v0 = preserved
    k0 = as_matrix(k0, "preserved keys")
    v0 = as_matrix(v0, "preserved values")
    w = _check_weights(w, batch)
    if k0.shape[0] != w.shape[1] or v0.shape != (w.shape[0], k0.shape[1]):
        raise DimensionError("preserved keys/values are not conformable with the weights")
    r1 = batch.values - w @ batch.keys
    r0 = v0 - w @ k0
    if not r1.any() and not r0.any():
        return np.zeros_like(w)
    k1 = batch.keys
    rhs = r1 @ k1.T + r0 @ k0.T
    a = k1 @ k1.T + k0 @ k0.T + ridge * np.eye(w.shape[1])
    return _solve_right(rhs, a)
