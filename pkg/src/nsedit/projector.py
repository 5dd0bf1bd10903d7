"""Null-space projectors stored in complement form ``P = I - B B^T``.

``B`` holds orthonormal columns spanning every key direction that must stay
untouched. The projector is never materialized as a dense ``d x d`` matrix
outside of :meth:`Projector.dense` and :func:`oracle_recompute`, both of which
exist for verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GapDegenerateError
from .numerics import as_matrix, psd_eig, spectral_norm, thin_svd

DEFAULT_TAU = 1e-2
# columns whose norm falls below this after re-orthogonalization are dropped
REORTH_DROP_TOL = 1e-8


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector ``I - B B^T`` onto the complement of ``span(B)``."""

    dim: int
    basis: np.ndarray
    generation: int = 0

    def __post_init__(self):
        if self.basis.shape[0] != self.dim:
            raise DimensionError(f"basis has {self.basis.shape[0]} rows, expected {self.dim}")

    @classmethod
    def identity(cls, dim: int, generation: int = 0) -> "Projector":
        return cls(dim, np.zeros((dim, 0)), generation)

    @property
    def rank(self) -> int:
        """Number of protected directions (columns of ``B``)."""
        return self.basis.shape[1]

    def apply(self, x) -> np.ndarray:
        """Return ``P x`` as ``x - B (B^T x)``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.dim:
            raise DimensionError(f"operand has {x.shape[0]} rows, projector dim is {self.dim}")
        if self.rank == 0:
            return x.copy()
        return x - self.basis @ (self.basis.T @ x)

    def dense(self) -> np.ndarray:
        return np.eye(self.dim) - self.basis @ self.basis.T

    def orthonormality_error(self) -> float:
        """``||B^T B - I||_F``."""
        return float(np.linalg.norm(self.basis.T @ self.basis - np.eye(self.rank)))


@dataclass(frozen=True)
class AlignmentRecord:
    """What one alignment step kept and threw away."""

    retained_directions: np.ndarray
    retained_sigmas: np.ndarray
    discarded_sigmas: np.ndarray
    spectral_gap: float
    tau: float = field(default=DEFAULT_TAU)

    @property
    def n_retained(self) -> int:
        return self.retained_directions.shape[1]


def estimate_initial(k0, tau: float = DEFAULT_TAU) -> Projector:
    """Build ``P_0`` from the preserved-key covariance ``K0 K0^T``.

    Eigenvectors whose eigenvalue is at least ``tau`` form the complement
    basis, so ``P_0`` keeps only directions the covariance considers empty.
    A ``d x 0`` key block yields the identity projector.
    """
    k0 = as_matrix(k0, "k0")
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = k0.shape[0]
    if k0.shape[1] == 0:
        return Projector.identity(d)
    vecs, vals = psd_eig(k0 @ k0.T)
    return Projector(d, np.ascontiguousarray(vecs[:, vals >= tau]), 0)


def _reorthogonalize(q: np.ndarray, basis: np.ndarray):
    # one classical Gram-Schmidt pass of q against basis, then renormalize
    if basis.shape[1]:
        q = q - basis @ (basis.T @ q)
    norms = np.linalg.norm(q, axis=0)
    keep = norms >= REORTH_DROP_TOL
    return q[:, keep] / norms[keep], keep


def align(p: Projector, k_prev, tau: float = DEFAULT_TAU):
    """Deflate ``p`` by the directions of ``k_prev`` it does not yet protect.

    Computes ``Z = P K`` in operator form, takes its thin SVD and appends the
    left singular vectors with ``sigma >= tau`` to the complement basis.

    Returns
    -------
    (Projector, AlignmentRecord)
    """
    k_prev = as_matrix(k_prev, "k_prev")
    if k_prev.shape[0] != p.dim:
        raise DimensionError(f"k_prev has {k_prev.shape[0]} rows, projector dim is {p.dim}")
    if tau <= 0:
        raise ValueError("tau must be positive")

    z = p.apply(k_prev)
    svd = thin_svd(z)
    mask = svd.sigma >= tau
    q, keep = _reorthogonalize(svd.u[:, mask], p.basis)
    retained = svd.sigma[mask][keep]
    discarded = svd.sigma[~mask]

    if retained.size:
        gap = float(retained[-1] - (discarded[0] if discarded.size else 0.0))
    else:
        gap = 0.0
    record = AlignmentRecord(q, retained, discarded, gap, tau)
    new_basis = np.hstack([p.basis, q]) if q.shape[1] else p.basis
    return Projector(p.dim, new_basis, p.generation + 1), record


def oracle_recompute(k_hat, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Dense brute-force projector ``I - U1 U1^T`` for the concatenated keys.

    Uses a full SVD of the covariance rather than the eigen path taken by
    :func:`estimate_initial`, so the two routes check each other.
    """
    k_hat = as_matrix(k_hat, "k_hat")
    d = k_hat.shape[0]
    if k_hat.shape[1] == 0:
        return np.eye(d)
    u, s, _ = np.linalg.svd(k_hat @ k_hat.T)
    u1 = u[:, s >= tau]
    return np.eye(d) - u1 @ u1.T


def deviation(p: Projector, ideal) -> float:
    """Spectral distance ``||(I - B B^T) - ideal||_2``."""
    ideal = as_matrix(ideal, "ideal")
    if ideal.shape != (p.dim, p.dim):
        raise DimensionError(f"ideal has shape {ideal.shape}, projector dim is {p.dim}")
    return spectral_norm(p.dense() - ideal)


def min_nonzero_sigma(c, rtol: float | None = None) -> float:
    """Smallest singular value of ``c`` that is not numerically zero.

    Returns 0.0 for an empty or all-zero matrix.
    """
    c = as_matrix(c, "c")
    if c.size == 0:
        return 0.0
    s = thin_svd(c).sigma
    if s[0] == 0:
        return 0.0
    if rtol is None:
        rtol = max(c.shape) * np.finfo(float).eps
    nz = s[s > rtol * s[0]]
    return float(nz[-1])


def _bound_terms(records, projected_key_history, perturbations):
    if not (len(records) == len(projected_key_history) == len(perturbations)):
        raise DimensionError("records, projected keys and perturbations must have equal length")
    for rec, r_star, e in zip(records, projected_key_history, perturbations):
        e_norm = spectral_norm(e)
        if rec.n_retained == 0 or e_norm == 0.0:
            geometry = 0.0
        elif rec.spectral_gap <= 0.0:
            raise GapDegenerateError(
                "zero spectral gap at the truncation index; the error bound is undefined"
            )
        else:
            geometry = e_norm / rec.spectral_gap
        yield geometry, np.asarray(r_star), rec.discarded_sigmas


def thm2_bound_raw(records, projected_key_history, perturbations, c_t_min_sigma: float) -> float:
    """Unclamped cumulative bound

    ``(1 / sigma_min(C_t)) * sum_j (||E_j||_2 / gamma_j * ||R_j*||_F + ||Sigma_2,j||_F)``.
    """
    total = 0.0
    for geometry, r_star, tail in _bound_terms(records, projected_key_history, perturbations):
        total += geometry * float(np.linalg.norm(r_star)) + float(np.linalg.norm(tail))
    if total == 0.0:
        return 0.0
    if c_t_min_sigma <= 0.0:
        return float("inf")
    return total / c_t_min_sigma


def thm2_bound(records, projected_key_history, perturbations, c_t_min_sigma: float) -> float:
    """Projector deviation bound after truncated alignment, clamped to ``[0, 1]``.

    Parameters
    ----------
    records : list of AlignmentRecord
        One per alignment step, carrying the spectral gap and discarded block.
    projected_key_history : list of ndarray
        Ideal projected keys ``R_j* = P*_{j-1} K_j``.
    perturbations : list of ndarray
        ``E_j = (P_{j-1} - P*_{j-1}) K_j``, computed by the caller from the oracle.
    c_t_min_sigma : float
        Smallest nonzero singular value of ``C_t = [R_1*, ..., R_t*]``.
    """
    raw = thm2_bound_raw(records, projected_key_history, perturbations, c_t_min_sigma)
    return float(min(1.0, max(0.0, raw)))


def thm2_bound_compact(records, projected_key_history, perturbations) -> float:
    """Alternative summary form ``min{1, sum ||E_j||/gamma_j + max_j ||Sigma_2,j||_2 / ||R_j*||_2}``.

    Reported alongside :func:`thm2_bound` for comparison only; it is not
    guaranteed to dominate the measured deviation.
    """
    geo_sum = 0.0
    tail_max = 0.0
    for geometry, r_star, tail in _bound_terms(records, projected_key_history, perturbations):
        geo_sum += geometry
        if tail.size:
            r_norm = spectral_norm(r_star) if r_star.size else 0.0
            ratio = float(tail[0]) / r_norm if r_norm > 0 else (0.0 if tail[0] == 0 else np.inf)
            tail_max = max(tail_max, ratio)
    return float(min(1.0, geo_sum + tail_max))


@dataclass
class InterferenceReport:
    max_ratio: float
    max_excess: float
    trials: int
    passed: bool
    projector_error: float


def interference_bound_check(
    p: Projector,
    ideal,
    c_t,
    gamma_cap: float,
    trials: int,
    seed: int = 0,
    delta=None,
    slack: float = 1e-8,
) -> InterferenceReport:
    """Sample edits ``Delta`` and vectors ``x in span(C_t)`` and test

    ``||Delta P x|| <= gamma_cap * ||P - P*||_2 * ||x|| + slack``.

    ``Delta`` is drawn as a random ``d x d`` matrix rescaled to a spectral norm
    uniform in ``(0, gamma_cap]`` unless a fixed ``delta`` is supplied.
    ``max_ratio`` is the largest ``lhs / rhs`` seen (0 when both vanish).
    """
    ideal = as_matrix(ideal, "ideal")
    c_t = as_matrix(c_t, "c_t", allow_empty=False)
    if c_t.shape[0] != p.dim or ideal.shape != (p.dim, p.dim):
        raise DimensionError("c_t and ideal must match the projector dimension")
    if gamma_cap <= 0:
        raise ValueError("gamma_cap must be positive")
    if delta is not None:
        delta = as_matrix(delta, "delta")
        if delta.shape[1] != p.dim:
            raise DimensionError("delta must have as many columns as the projector dimension")
        if spectral_norm(delta) > gamma_cap * (1 + 1e-12):
            raise ValueError("fixed delta exceeds gamma_cap in spectral norm")

    rng = np.random.default_rng(seed)
    err = deviation(p, ideal)
    max_ratio = 0.0
    max_excess = -np.inf
    for _ in range(trials):
        x = c_t @ rng.standard_normal(c_t.shape[1])
        if delta is None:
            g = rng.standard_normal((p.dim, p.dim))
            d_mat = g * (gamma_cap * rng.uniform(0.0, 1.0) / spectral_norm(g))
        else:
            d_mat = delta
        lhs = float(np.linalg.norm(d_mat @ p.apply(x[:, None])))
        rhs = gamma_cap * err * float(np.linalg.norm(x))
        max_excess = max(max_excess, lhs - rhs)
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
        elif lhs > slack:
            max_ratio = np.inf
    passed = bool(max_excess <= slack) if trials else True
    return InterferenceReport(max_ratio, float(max_excess) if trials else 0.0, trials, passed, err)
