"""Experiment runner: method comparisons over one shared synthetic stream.

Outputs per run directory:

``<method>_trace.csv``
    One row per step with columns :data:`TRACE_COLUMNS`, in that order.
``summary.json``
    Per-method totals and the speedup of each method over ``alphaedit``
    (``alphaedit_seconds / method_seconds``); see :data:`SCHEMA_VERSION`.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .io import ExperimentConfig, with_override
from .sequence import StreamAbort, new_session, run_stream
from .synth import gen_stream, gen_world, metrics

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TRACE_COLUMNS = (
    "step",
    "solve_seconds",
    "proj_seconds",
    "edit_residual_after",
    "preservation_drift",
    "early_retention",
    "projector_rank",
)
TIMING_COLUMNS = ("solve_seconds", "proj_seconds")
BASELINE = "alphaedit"


def write_trace_csv(path, traces) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for t in traces:
            writer.writerow([repr(getattr(t, c)) for c in TRACE_COLUMNS])


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _ratio(num, den):
    return num / den if den > 0 else None


def speedups(per_method: dict) -> dict:
    """Speedup of every method relative to the baseline, or ``{}`` without one."""
    if BASELINE not in per_method:
        return {}
    base = per_method[BASELINE]
    return {
        m: {
            "total": _ratio(base["total_seconds"], s["total_seconds"]),
            "solve": _ratio(base["solve_seconds_total"], s["solve_seconds_total"]),
        }
        for m, s in per_method.items()
        if m != BASELINE
    }


def run_experiment(config: ExperimentConfig, output_dir=None) -> dict:
    """Run every configured method and verify suite; write reports.

    Raises :class:`~nsedit.sequence.StreamAbort` after flushing the partial
    trace of the failing method.
    """
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = gen_world(config.world)
    w0, k0, _ = world
    stream = gen_stream(config.world, w0)

    per_method = {}
    for method in config.methods:
        log.info("running %s over %d steps", method, len(stream))
        session = new_session(w0, k0, method, config.solver)
        try:
            final, traces = run_stream(session, stream)
        except StreamAbort as exc:
            if "csv" in config.report_formats:
                write_trace_csv(out / f"{method}_trace.csv", exc.traces)
            raise
        if "csv" in config.report_formats:
            write_trace_csv(out / f"{method}_trace.csv", traces)
        report = metrics(traces, final, world, stream)
        per_method[method] = report.to_dict(include_series=False)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "world": asdict(config.world),
        "solver": asdict(config.solver),
        "methods": per_method,
    }
    sp = speedups(per_method)
    if sp:
        summary["speedup_vs_alphaedit"] = sp

    if config.verify_suites:
        from .verify import run_suite

        summary["verify"] = {}
        for suite in config.verify_suites:
            res = run_suite(suite)
            summary["verify"][suite] = {
                "passed": res.passed,
                "max_observed": res.max_observed(),
                "failing_seeds": res.failing_seeds,
            }

    if "json" in config.report_formats:
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    return summary


def sweep_workers() -> int:
    raw = os.environ.get("NSEM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer NSEM_THREADS=%r", raw)
    return os.cpu_count() or 1


def run_sweep(config: ExperimentConfig, key: str, values) -> dict:
    """Run one experiment per sweep value under ``<output_dir>/<name>=<value>/``
    and write a combined ``summary.json`` at the top level.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    short = key.rpartition(".")[2]
    configs = [(v, with_override(config, key, v)) for v in values]

    def one(item):
        value, cfg = item
        return value, run_experiment(cfg, out / f"{short}={value}")

    with ThreadPoolExecutor(max_workers=sweep_workers()) as pool:
        results = list(pool.map(one, configs))

    summary = {
        "schema_version": SCHEMA_VERSION,
        "sweep": {"key": key, "runs": [{"value": v, "summary": s} for v, s in results]},
    }
    if "json" in config.report_formats:
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    return summary
