"""Sequential editing loop with per-step traces.

Four methods share one driver:

``evoedit``
    Before solving step ``t`` the projector is aligned with the keys of step
    ``t-1``; the update comes from the reduced ``n x n`` solve.
``alphaedit``
    Fixed initial projector, dense ``d x d`` solve with accumulated keys.
``recompute``
    Projector rebuilt from the covariance of every key seen so far, then the
    reduced solve.
``plain``
    No projector; ridge-regularized joint least squares against ``K0``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DimensionError, NSEditError
from .numerics import as_matrix, relative_frobenius
from .projector import DEFAULT_TAU, Projector, align, deviation, estimate_initial, oracle_recompute
from .solver import EditBatch, solve_alphaedit, solve_plain, solve_woodbury


class Method(str, Enum):
    EVOEDIT = "evoedit"
    ALPHAEDIT = "alphaedit"
    RECOMPUTE = "recompute"
    PLAIN = "plain"


@dataclass(frozen=True)
class SolverConfig:
    """Thresholds and regularization for a session.

    ``tau_initial`` thresholds eigenvalues of the key covariance (used by the
    initial estimate and by ``recompute``); ``tau_align`` thresholds singular
    values of the projected keys during alignment. The two live on different
    scales (squared vs. unsquared).
    """

    tau_initial: float = DEFAULT_TAU
    tau_align: float = DEFAULT_TAU
    l2: float = 1.0
    keep_dense_oracle: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("tau_initial", "tau_align", "l2"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


@dataclass
class StepTrace:
    step: int
    solve_seconds: float
    proj_seconds: float
    edit_residual_after: float
    preservation_drift: float
    early_retention: float
    projector_rank: int
    deviation_vs_oracle: float | None = None


@dataclass
class EditSession:
    """Mutable state of one sequential run. Create with :func:`new_session`."""

    weights: np.ndarray
    projector: Projector
    method: Method
    config: SolverConfig
    step: int = 0
    initial_projector: Projector | None = None
    preserved_keys: np.ndarray | None = None
    preserved_outputs: np.ndarray | None = None
    history: list = field(default_factory=list)
    projector_keys: list = field(default_factory=list)
    last_keys: np.ndarray | None = None
    first_keys: np.ndarray | None = None
    first_outputs: np.ndarray | None = None

    def apply(self, batch: EditBatch) -> StepTrace:
        return apply_edit(self, batch)

    def run(self, stream):
        return run_stream(self, stream)


class StreamAbort(NSEditError):
    """A step failed mid-stream. ``traces`` holds every completed step."""

    def __init__(self, step, traces, cause):
        super().__init__(f"stream aborted at step {step}: {cause}")
        self.step = step
        self.traces = traces


def new_session(w0, k0, method="evoedit", config: SolverConfig | None = None) -> EditSession:
    """Start a session from weights ``w0`` and preserved keys ``k0`` (may be ``d x 0``)."""
    config = config or SolverConfig()
    if not isinstance(config, SolverConfig):
        raise ConfigError("config must be a SolverConfig")
    try:
        method = Method(method)
    except ValueError as exc:
        raise ConfigError(f"unknown method {method!r}") from exc
    w0 = as_matrix(w0, "w0", allow_empty=False).copy()
    k0 = as_matrix(k0, "k0")
    if k0.shape[0] != w0.shape[1]:
        raise DimensionError(f"k0 has {k0.shape[0]} rows but weights take {w0.shape[1]}-dim keys")
    p0 = estimate_initial(k0, config.tau_initial)
    session = EditSession(
        weights=w0,
        projector=p0,
        method=method,
        config=config,
        initial_projector=p0,
        preserved_keys=k0,
        preserved_outputs=w0 @ k0,
    )
    if config.keep_dense_oracle:
        session.projector_keys.append(k0)
    return session


def _keys_seen(session: EditSession) -> np.ndarray:
    return np.hstack([session.preserved_keys, *session.history])


def apply_edit(session: EditSession, batch: EditBatch) -> StepTrace:
    """Apply one batch, mutate ``session`` and return the step trace.

    The session is untouched if any error is raised.
    """
    w = session.weights
    if batch.keys.shape[0] != w.shape[1] or batch.values.shape[0] != w.shape[0]:
        raise DimensionError(
            f"batch keys/values of dims {batch.keys.shape[0]}/{batch.values.shape[0]} "
            f"do not fit weights {w.shape}"
        )
    cfg = session.config
    method = session.method
    projector = session.projector
    proj_seconds = 0.0
    new_projector_keys = None

    if method is Method.EVOEDIT:
        t0 = time.perf_counter()
        if session.step >= 1:
            projector, _ = align(projector, session.last_keys, cfg.tau_align)
            new_projector_keys = session.last_keys
        proj_seconds = time.perf_counter() - t0
        t0 = time.perf_counter()
        update = solve_woodbury(w, projector, batch, cfg.l2)
        solve_seconds = time.perf_counter() - t0
    elif method is Method.RECOMPUTE:
        t0 = time.perf_counter()
        if session.history:
            projector = estimate_initial(_keys_seen(session), cfg.tau_initial)
            projector = Projector(projector.dim, projector.basis, session.step)
            new_projector_keys = session.history[-1]
        proj_seconds = time.perf_counter() - t0
        t0 = time.perf_counter()
        update = solve_woodbury(w, projector, batch, cfg.l2)
        solve_seconds = time.perf_counter() - t0
    elif method is Method.ALPHAEDIT:
        t0 = time.perf_counter()
        kp = np.hstack(session.history) if session.history else np.zeros((w.shape[1], 0))
        update = solve_alphaedit(w, session.initial_projector, kp, batch)
        solve_seconds = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        update = solve_plain(
            w, (session.preserved_keys, session.preserved_outputs), batch, ridge=cfg.l2
        )
        solve_seconds = time.perf_counter() - t0

    w_new = w + update

    # commit
    step = session.step + 1
    session.weights = w_new
    session.projector = projector
    session.step = step
    session.last_keys = batch.keys
    if method is not Method.EVOEDIT:
        session.history.append(batch.keys)
    if new_projector_keys is not None and cfg.keep_dense_oracle:
        session.projector_keys.append(new_projector_keys)
    if session.first_keys is None:
        session.first_keys = batch.keys
        session.first_outputs = w_new @ batch.keys

    dev = None
    if cfg.keep_dense_oracle and method in (Method.EVOEDIT, Method.RECOMPUTE):
        ideal = oracle_recompute(np.hstack(session.projector_keys), cfg.tau_initial)
        dev = deviation(projector, ideal)

    return StepTrace(
        step=step,
        solve_seconds=solve_seconds,
        proj_seconds=proj_seconds,
        edit_residual_after=float(np.linalg.norm(w_new @ batch.keys - batch.values)),
        preservation_drift=relative_frobenius(
            w_new @ session.preserved_keys - session.preserved_outputs, session.preserved_outputs
        ),
        early_retention=relative_frobenius(
            w_new @ session.first_keys - session.first_outputs, session.first_outputs
        ),
        projector_rank=0 if method is Method.PLAIN else projector.rank,
        deviation_vs_oracle=dev,
    )


def run_stream(session: EditSession, stream):
    """Apply every batch in order.

    Returns ``(final_weights, traces)``. On failure raises
    :class:`StreamAbort` carrying the traces of the completed steps.
    """
    traces = []
    for batch in stream:
        try:
            traces.append(apply_edit(session, batch))
        except NSEditError as exc:
            raise StreamAbort(session.step + 1, traces, exc) from exc
    return session.weights.copy(), traces
