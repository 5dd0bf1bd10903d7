"""Seeded synthetic associative memories, edit streams and summary metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import relative_frobenius
from .solver import EditBatch


@dataclass(frozen=True)
class WorldSpec:
    d_k: int = 64
    d_v: int = 32
    n_preserved: int = 20
    t_steps: int = 50
    batch_size: int = 2
    overlap: float = 0.0
    seed: int = 0
    perturbation_norm: float = 1.0

    def __post_init__(self):
        for name in ("d_k", "d_v"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("n_preserved", "t_steps", "batch_size"):
            if int(getattr(self, name)) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.t_steps > 0 and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1 when t_steps > 0")
        if not 0.0 <= self.overlap <= 1.0:
            raise ConfigError("overlap must lie in [0, 1]")
        if self.perturbation_norm < 0:
            raise ConfigError("perturbation_norm must be non-negative")


def _unit_columns(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0] = 1.0
    return a / norms


def gen_world(spec: WorldSpec):
    """Return ``(W0, K0, V0)`` with ``V0 = W0 @ K0`` exactly.

    ``W0`` is standard normal scaled by ``1/sqrt(d_k)``; ``K0`` has unit-norm
    Gaussian columns.
    """
    rng = np.random.default_rng(spec.seed)
    w0 = rng.standard_normal((spec.d_v, spec.d_k)) / np.sqrt(spec.d_k)
    k0 = _unit_columns(rng.standard_normal((spec.d_k, spec.n_preserved)))
    return w0, k0, w0 @ k0


def gen_stream(spec: WorldSpec, w0, prior_keys=None) -> list[EditBatch]:
    """Generate ``t_steps`` batches of ``batch_size`` unit-norm keys.

    Each key is, with probability ``overlap``, a normalized random combination
    of keys from earlier batches (plus ``prior_keys``, an optional pool of
    keys edited before this stream); otherwise a fresh Gaussian direction.
    Targets are ``W0 K_t + G_t`` where the columns of ``G_t`` have norm
    ``perturbation_norm``.
    """
    rng = np.random.default_rng([spec.seed, 1])
    w0 = np.asarray(w0, dtype=np.float64)
    pool = np.zeros((spec.d_k, 0)) if prior_keys is None else np.asarray(prior_keys, dtype=np.float64)
    stream = []
    for _ in range(spec.t_steps):
        keys = np.empty((spec.d_k, spec.batch_size))
        for j in range(spec.batch_size):
            k = None
            if rng.random() < spec.overlap and pool.shape[1]:
                k = pool @ rng.standard_normal(pool.shape[1])
                if np.linalg.norm(k) == 0:
                    k = None
            if k is None:
                k = rng.standard_normal(spec.d_k)
            keys[:, j] = k / np.linalg.norm(k)
        g = _unit_columns(rng.standard_normal((spec.d_v, spec.batch_size))) * spec.perturbation_norm
        stream.append(EditBatch(keys, w0 @ keys + g))
        pool = np.hstack([pool, keys])
    return stream


@dataclass
class SummaryReport:
    steps: int
    final_preservation_drift: float
    final_early_retention: float
    rewrite_residual_first: float
    preservation_residual: float
    solve_seconds_total: float
    proj_seconds_total: float
    solve_seconds_mean: float
    proj_seconds_mean: float
    total_seconds: float
    final_projector_rank: int
    series: dict = field(default_factory=dict)

    def to_dict(self, include_series=True) -> dict:
        out = asdict(self)
        if not include_series:
            out.pop("series")
        return out


SERIES_FIELDS = (
    "step",
    "solve_seconds",
    "proj_seconds",
    "edit_residual_after",
    "preservation_drift",
    "early_retention",
    "projector_rank",
)


def metrics(traces, final, world, stream) -> SummaryReport:
    """Summarize a run.

    ``world`` is ``(W0, K0, V0)``. Rewrite residual is
    ``||W_T K1 - V1|| / ||V1||`` on the first batch; preservation residual is
    ``||W_T K0 - V0|| / ||V0||``.
    """
    _, k0, v0 = world
    final = np.asarray(final, dtype=np.float64)
    steps = len(traces)
    solve = np.array([t.solve_seconds for t in traces], dtype=float)
    proj = np.array([t.proj_seconds for t in traces], dtype=float)
    if stream:
        first = stream[0]
        rewrite = relative_frobenius(final @ first.keys - first.values, first.values)
    else:
        rewrite = 0.0
    preservation = relative_frobenius(final @ k0 - v0, v0) if np.size(v0) else 0.0
    series = {name: [getattr(t, name) for t in traces] for name in SERIES_FIELDS}
    if any(t.deviation_vs_oracle is not None for t in traces):
        series["deviation_vs_oracle"] = [t.deviation_vs_oracle for t in traces]
    last = traces[-1] if traces else None
    return SummaryReport(
        steps=steps,
        final_preservation_drift=last.preservation_drift if last else 0.0,
        final_early_retention=last.early_retention if last else 0.0,
        rewrite_residual_first=rewrite,
        preservation_residual=preservation,
        solve_seconds_total=float(solve.sum()),
        proj_seconds_total=float(proj.sum()),
        solve_seconds_mean=float(solve.mean()) if steps else 0.0,
        proj_seconds_mean=float(proj.mean()) if steps else 0.0,
        total_seconds=float(solve.sum() + proj.sum()),
        final_projector_rank=last.projector_rank if last else 0,
        series=series,
    )
