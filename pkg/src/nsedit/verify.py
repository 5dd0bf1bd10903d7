"""Seeded property suites for the projector lineage and the solvers.

Every suite returns a :class:`SuiteResult` with one :class:`Trial` per seeded
instance, carrying the observed quantity and the bound it must respect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import relative_frobenius
from .projector import (
    Projector,
    align,
    deviation,
    estimate_initial,
    interference_bound_check,
    min_nonzero_sigma,
    oracle_recompute,
    thm2_bound,
    thm2_bound_compact,
    thm2_bound_raw,
)
from .sequence import SolverConfig, apply_edit, new_session
from .solver import EditBatch, solve_direct, solve_woodbury

THM1_TOL = 1e-7
EQUIVALENCE_TOL = 1e-8
PRESERVATION_TOL = 1e-7
BOUND_ROUNDING_SLACK = 1e-10
INTERFERENCE_SLACK = 1e-8
# tau used for every non-truncated step and for the ideal projector
EXACT_TAU = 1e-10


@dataclass
class Trial:
    seed: int
    observed: float
    bound: float
    passed: bool
    extra: dict = field(default_factory=dict)


@dataclass
class SuiteResult:
    suite: str
    trials: list

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    @property
    def failing_seeds(self):
        return [t.seed for t in self.trials if not t.passed]

    def max_observed(self) -> float:
        return max((t.observed for t in self.trials), default=0.0)


def _unit_gaussian(rng, d, n):
    k = rng.standard_normal((d, n))
    return k / np.linalg.norm(k, axis=0)


def random_key_stream(seed, d, n, steps, n_preserved=None):
    """``(K0, [K1, ..., KT])`` of unit-norm Gaussian keys."""
    rng = np.random.default_rng(seed)
    k0 = _unit_gaussian(rng, d, n if n_preserved is None else n_preserved)
    return k0, [_unit_gaussian(rng, d, n) for _ in range(steps)]


def sequential_projector(k0, blocks, taus, tau_initial=EXACT_TAU):
    """Align ``P0`` with every block in turn; returns the lineage and records."""
    lineage = [estimate_initial(k0, tau_initial)]
    records = []
    for k, tau in zip(blocks, taus):
        p, rec = align(lineage[-1], k, tau)
        lineage.append(p)
        records.append(rec)
    return lineage, records


def thm1(trials=50, d=32, n=4, steps=5, tau=EXACT_TAU, seed0=0) -> SuiteResult:
    """Sequential alignment without truncation matches the dense recompute."""
    out = []
    for seed in range(seed0, seed0 + trials):
        k0, blocks = random_key_stream(seed, d, n, steps)
        lineage, _ = sequential_projector(k0, blocks, [tau] * steps, tau)
        ideal = oracle_recompute(np.hstack([k0, *blocks]), tau)
        dev = deviation(lineage[-1], ideal)
        out.append(Trial(seed, dev, THM1_TOL, dev <= THM1_TOL, {"rank": lineage[-1].rank}))
    return SuiteResult("thm1", out)


@dataclass
class TruncatedInstance:
    k0: np.ndarray
    blocks: list
    lineage: list
    records: list
    ideal: list
    projected_keys: list
    perturbations: list
    c_t: np.ndarray


def truncated_instance(seed, d=24, n=3, steps=3, truncate_step=2, tau=EXACT_TAU):
    """Alignment lineage with the threshold of ``truncate_step`` placed
    strictly between the two smallest retained singular values of that step.
    """
    truncate_step = min(max(truncate_step, 1), steps)
    k0, blocks = random_key_stream(seed, d, n, steps)
    lineage = [estimate_initial(k0, tau)]
    records = []
    for j, k in enumerate(blocks, start=1):
        step_tau = tau
        if j == truncate_step and n >= 2:
            s = np.linalg.svd(lineage[-1].apply(k), compute_uv=False)
            # geometric mean of sigma_{n-1} and sigma_n
            step_tau = float(np.sqrt(s[-2] * s[-1]))
        p, rec = align(lineage[-1], k, step_tau)
        lineage.append(p)
        records.append(rec)

    ideal = [oracle_recompute(k0, tau)]
    projected, perturbations = [], []
    for j, k in enumerate(blocks, start=1):
        r_star = ideal[-1] @ k
        projected.append(r_star)
        perturbations.append((lineage[j - 1].dense() - ideal[-1]) @ k)
        ideal.append(oracle_recompute(np.hstack([k0, *blocks[:j]]), tau))
    return TruncatedInstance(
        k0, blocks, lineage, records, ideal, projected, perturbations, np.hstack(projected)
    )


def thm2(trials=50, d=24, n=3, steps=3, tau=EXACT_TAU, seed0=0) -> SuiteResult:
    """Measured deviation after truncation never exceeds the cumulative bound."""
    out = []
    for seed in range(seed0, seed0 + trials):
        inst = truncated_instance(seed, d, n, steps, 2, tau)
        sigma_min = min_nonzero_sigma(inst.c_t)
        raw = thm2_bound_raw(inst.records, inst.projected_keys, inst.perturbations, sigma_min)
        bound = thm2_bound(inst.records, inst.projected_keys, inst.perturbations, sigma_min)
        dev = deviation(inst.lineage[-1], inst.ideal[-1])
        main = thm2_bound_compact(inst.records, inst.projected_keys, inst.perturbations)
        out.append(
            Trial(
                seed,
                dev,
                bound,
                dev <= bound + BOUND_ROUNDING_SLACK,
                {
                    "raw_bound": raw,
                    "clamped": raw > 1.0,
                    "compact_bound": main,
                    "discarded": int(sum(r.discarded_sigmas.size for r in inst.records)),
                },
            )
        )
    return SuiteResult("thm2", out)


def _random_projector(rng, d):
    rank = int(rng.integers(0, d // 2 + 1))
    return estimate_initial(_unit_gaussian(rng, d, rank), 1e-6) if rank else Projector.identity(d)


def equivalence(trials=50, d=64, n=8, seed0=0) -> SuiteResult:
    """Dense normal-equation solve and reduced Cholesky solve agree."""
    out = []
    for seed in range(seed0, seed0 + trials):
        rng = np.random.default_rng(seed)
        n_i = int(rng.integers(1, n + 1))
        d_i = int(rng.integers(max(n_i, 2), d + 1))
        d_v = int(rng.integers(1, d_i + 1))
        p = _random_projector(rng, d_i)
        w = rng.standard_normal((d_v, d_i)) / np.sqrt(d_i)
        batch = EditBatch(_unit_gaussian(rng, d_i, n_i), rng.standard_normal((d_v, n_i)))
        gap = float(np.linalg.norm(solve_direct(w, p, batch) - solve_woodbury(w, p, batch, 1.0)))
        out.append(Trial(seed, gap, EQUIVALENCE_TOL, gap <= EQUIVALENCE_TOL, {"d": d_i, "n": n_i}))
    return SuiteResult("equivalence", out)


def interference(trials=50, d=24, n=3, steps=3, draws=100, gamma_cap=1.0, tau=EXACT_TAU, seed0=0):
    """Future edits act on protected directions only through the projector error."""
    out = []
    for seed in range(seed0, seed0 + trials):
        inst = truncated_instance(seed, d, n, steps, 2, tau)
        rep = interference_bound_check(
            inst.lineage[-1], inst.ideal[-1], inst.c_t, gamma_cap, draws, seed=seed,
            slack=INTERFERENCE_SLACK,
        )
        out.append(
            Trial(
                seed,
                rep.max_excess,
                INTERFERENCE_SLACK,
                rep.passed,
                {"max_ratio": rep.max_ratio, "projector_error": rep.projector_error},
            )
        )
    return SuiteResult("interference", out)


def preservation(trials=50, d=32, n=4, steps=5, tau=EXACT_TAU, seed0=0) -> SuiteResult:
    """Every evoedit step leaves ``W K0`` and already-aligned batch outputs fixed.

    ``observed`` is the worst relative change over all steps, measured for
    ``K0`` against ``W0 K0`` and for batch ``j`` against ``W_j K_j`` (its
    outputs once it was applied; it enters the projector one step later).
    """
    out = []
    cfg = SolverConfig(tau_initial=tau, tau_align=tau)
    for seed in range(seed0, seed0 + trials):
        rng = np.random.default_rng(seed)
        k0, blocks = random_key_stream(seed, d, n, steps)
        w0 = rng.standard_normal((d // 2 or 1, d)) / np.sqrt(d)
        session = new_session(w0, k0, "evoedit", cfg)
        frozen = []
        worst = 0.0
        for k in blocks:
            v = w0 @ k + _unit_gaussian(rng, w0.shape[0], n)
            apply_edit(session, EditBatch(k, v))
            w = session.weights
            worst = max(worst, relative_frobenius(w @ k0 - w0 @ k0, w0 @ k0))
            for kj, out_j in frozen:
                worst = max(worst, relative_frobenius(w @ kj - out_j, out_j))
            frozen.append((k, w @ k))
        out.append(Trial(seed, worst, PRESERVATION_TOL, worst <= PRESERVATION_TOL))
    return SuiteResult("preservation", out)


SUITES = {
    "thm1": thm1,
    "thm2": thm2,
    "equivalence": equivalence,
    "interference": interference,
    "preservation": preservation,
}


def run_suite(name, trials=50, d=None, n=None, steps=None, tau=None, seed0=0) -> SuiteResult:
    """Dispatch by name; ``None`` parameters take each suite's own default."""
    fn = SUITES[name]
    kwargs = {"trials": trials, "seed0": seed0}
    if d is not None:
        kwargs["d"] = d
    if n is not None:
        kwargs["n"] = n
    if steps is not None and name != "equivalence":
        kwargs["steps"] = steps
    if tau is not None and name != "equivalence":
        kwargs["tau"] = tau
    return fn(**kwargs)


def format_trials(result: SuiteResult) -> str:
    """One line per trial: seed, observed, bound, verdict."""
    lines = []
    for t in result.trials:
        verdict = "ok" if t.passed else "FAIL"
        extra = " ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in t.extra.items())
        lines.append(f"{result.suite} seed={t.seed} observed={t.observed:.3e} bound={t.bound:.3e} {verdict} {extra}".rstrip())
    return "\n".join(lines)


__all__ = [
    "SUITES",
    "SuiteResult",
    "Trial",
    "equivalence",
    "interference",
    "preservation",
    "random_key_stream",
    "run_suite",
    "sequential_projector",
    "format_trials",
    "thm1",
    "thm2",
    "truncated_instance",
]
