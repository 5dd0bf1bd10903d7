"""``nsedit`` command-line entry point.

Subcommands::

    run        --config PATH [--sweep KEY=V1,V2,...]
    verify     --suite NAME [--trials N] [--d D] [--n N] [--steps T] [--tau X]
    gen        --config PATH --out DIR
    edit-files --weights F --preserved-keys F --batches DIR --method M --config PATH --out DIR

Exit codes: 0 success, 1 configuration or input-file error, 2 runtime or
numerical error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from . import bench, verify
from .errors import ConfigError, MatrixFormatError, NSEditError
from .io import VERIFY_SUITES, load_config, parse_sweep, read_matrix, write_matrix
from .sequence import Method, StreamAbort, new_session, run_stream
from .solver import EditBatch
from .synth import gen_stream, gen_world

log = logging.getLogger("nsedit")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
_BATCH_KEYS = re.compile(r"^(.+)_keys\.nsem$")


def batch_file_names(index: int):
    return f"{index:04d}_keys.nsem", f"{index:04d}_values.nsem"


def load_batches(directory) -> list[EditBatch]:
    """Read ``<stem>_keys.nsem`` / ``<stem>_values.nsem`` pairs in sorted stem order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MatrixFormatError(f"batch directory {directory} does not exist")
    stems = sorted(m.group(1) for p in directory.iterdir() if (m := _BATCH_KEYS.match(p.name)))
    batches = []
    for stem in stems:
        values_path = directory / f"{stem}_values.nsem"
        if not values_path.exists():
            raise MatrixFormatError(f"{stem}_keys.nsem has no matching {values_path.name}")
        try:
            batches.append(EditBatch(read_matrix(directory / f"{stem}_keys.nsem"), read_matrix(values_path)))
        except NSEditError as exc:
            if isinstance(exc, MatrixFormatError):
                raise
            raise MatrixFormatError(f"batch {stem}: {exc}") from exc
    return batches


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        sweep = parse_sweep(args.sweep) if args.sweep else None
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        if sweep:
            bench.run_sweep(config, *sweep)
        else:
            summary = bench.run_experiment(config)
            for method, stats in summary["methods"].items():
                print(
                    f"{method}: solve={stats['solve_seconds_total']:.4f}s "
                    f"proj={stats['proj_seconds_total']:.4f}s total={stats['total_seconds']:.4f}s "
                    f"early_retention={stats['final_early_retention']:.3e} "
                    f"preservation_drift={stats['final_preservation_drift']:.3e}"
                )
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NSEditError, ArithmeticError) as exc:
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_verify(args) -> int:
    result = verify.run_suite(
        args.suite, trials=args.trials, d=args.d, n=args.n, steps=args.steps, tau=args.tau
    )
    print(verify.format_trials(result))
    if result.passed:
        print(f"{args.suite}: all {len(result.trials)} trials passed")
        return EXIT_OK
    print(f"{args.suite}: FAILED seeds {result.failing_seeds}")
    return EXIT_VERIFY


def cmd_gen(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    out = Path(args.out)
    (out / "batches").mkdir(parents=True, exist_ok=True)
    w0, k0, v0 = gen_world(config.world)
    write_matrix(out / "W0.nsem", w0)
    write_matrix(out / "K0.nsem", k0)
    write_matrix(out / "V0.nsem", v0)
    for i, batch in enumerate(gen_stream(config.world, w0), start=1):
        keys_name, values_name = batch_file_names(i)
        write_matrix(out / "batches" / keys_name, batch.keys)
        write_matrix(out / "batches" / values_name, batch.values)
    return EXIT_OK


def cmd_edit_files(args) -> int:
    try:
        config = load_config(args.config)
        method = Method(args.method)
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        w0 = read_matrix(args.weights)
        k0 = read_matrix(args.preserved_keys)
        batches = load_batches(args.batches)
        session = new_session(w0, k0, method, config.solver)
    except (MatrixFormatError, OSError, NSEditError) as exc:
        log.error("bad input files: %s", exc)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        final, traces = run_stream(session, batches)
    except StreamAbort as exc:
        bench.write_trace_csv(out / f"{method.value}_trace.csv", exc.traces)
        log.error("edit failed: %s", exc)
        return EXIT_RUNTIME
    write_matrix(out / "weights.nsem", final)
    bench.write_trace_csv(out / f"{method.value}_trace.csv", traces)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsedit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compare editing methods on a synthetic stream")
    p.add_argument("--config", required=True)
    p.add_argument("--sweep", help="KEY=V1,V2,... e.g. batch_size=1,10,100")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run a seeded property suite")
    p.add_argument("--suite", required=True, choices=VERIFY_SUITES)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--tau", type=float, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a synthetic world and stream to disk")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("edit-files", help="edit user-supplied matrix files")
    p.add_argument("--weights", required=True)
    p.add_argument("--preserved-keys", required=True)
    p.add_argument("--batches", required=True)
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edit_files)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
