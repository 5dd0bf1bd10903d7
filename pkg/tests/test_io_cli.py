import json
import struct

import numpy as np
import pytest

from nsedit import cli
from nsedit.bench import TIMING_COLUMNS, TRACE_COLUMNS, read_trace_csv, run_experiment
from nsedit.errors import ConfigError, MatrixFormatError
from nsedit.io import (
    ExperimentConfig,
    load_config,
    parse_config,
    parse_sweep,
    read_matrix,
    with_override,
    write_matrix,
)
from nsedit.sequence import new_session, run_stream
from nsedit.synth import WorldSpec, gen_stream, gen_world

SMALL = """
[world]
d_k = 16
d_v = 4
n_preserved = 4
t_steps = {t}
batch_size = 2
seed = {seed}

[solver]
tau_initial = 1e-2
tau_align = 1e-2

[run]
methods = {methods}
output_dir = "{out}"
"""


def write_config(tmp_path, t=3, seed=4, methods='["evoedit", "alphaedit"]', name="cfg.toml"):
    out = tmp_path / "results"
    path = tmp_path / name
    path.write_text(SMALL.format(t=t, seed=seed, methods=methods, out=out))
    return path, out


# ---- matrix files -----------------------------------------------------------


@pytest.mark.parametrize("shape", [(3, 5), (1, 1), (4, 0), (0, 0)])
def test_matrix_roundtrip(tmp_path, shape):
    a = np.random.default_rng(0).standard_normal(shape)
    write_matrix(tmp_path / "m.nsem", a)
    b = read_matrix(tmp_path / "m.nsem")
    assert b.shape == shape and b.dtype == np.float64
    np.testing.assert_array_equal(a, b)


def test_matrix_layout_is_row_major_little_endian(tmp_path):
    write_matrix(tmp_path / "m.nsem", np.array([[1.0, 2.0], [3.0, 4.0]]))
    raw = (tmp_path / "m.nsem").read_bytes()
    assert raw[:4] == b"NSEM" and raw[4] == 1
    assert struct.unpack("<QQ", raw[5:21]) == (2, 2)
    assert struct.unpack("<4d", raw[21:]) == (1.0, 2.0, 3.0, 4.0)


def _header(rows, cols, magic=b"NSEM", version=1):
    return struct.pack("<4sBQQ", magic, version, rows, cols)


@pytest.mark.parametrize(
    "payload",
    [
        b"NSE",
        _header(1, 1, magic=b"XXXX") + struct.pack("<d", 1.0),
        _header(1, 1, version=2) + struct.pack("<d", 1.0),
        _header(2, 2) + struct.pack("<3d", 1, 2, 3),
        _header(1, 1) + struct.pack("<2d", 1, 2),
        _header(1, 1) + struct.pack("<d", float("nan")),
    ],
)
def test_malformed_matrix_files(tmp_path, payload):
    (tmp_path / "bad.nsem").write_bytes(payload)
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "bad.nsem")


def test_write_rejects_non_2d(tmp_path):
    with pytest.raises(MatrixFormatError):
        write_matrix(tmp_path / "v.nsem", np.ones(3))


# ---- configuration ----------------------------------------------------------


def test_config_parses_sections():
    cfg = parse_config(
        "[world]\nd_k = 8\noverlap = 0.5\n[solver]\nl2 = 2\n[run]\nmethods = ['plain']\n"
    )
    assert cfg.world.d_k == 8 and cfg.world.overlap == 0.5
    assert cfg.solver.l2 == 2.0
    assert cfg.methods == ("plain",)


def test_config_dotted_keys():
    cfg = parse_config("world.d_k = 10\nsolver.tau_align = 1e-3\n")
    assert cfg.world.d_k == 10 and cfg.solver.tau_align == 1e-3


@pytest.mark.parametrize(
    "text",
    [
        "[world]\nbogus = 1\n",
        "[world]\nd_k = 'big'\n",
        "[run]\nmethods = ['sgd']\n",
        "[run]\nverify_suites = ['thm9']\n",
        "[solver]\nl2 = -1\n",
        "this is not toml = = =",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_sweep_parsing_and_override():
    key, values = parse_sweep("batch_size=1,10,100")
    assert key == "world.batch_size" and values == [1, 10, 100]
    cfg = with_override(ExperimentConfig(), key, 10)
    assert cfg.world.batch_size == 10
    with pytest.raises(ConfigError):
        parse_sweep("nothing_here=1")
    with pytest.raises(ConfigError):
        parse_sweep("batch_size")


# ---- runner -----------------------------------------------------------------


def test_run_writes_csv_and_summary(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", "--config", str(path)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert set(summary["methods"]) == {"evoedit", "alphaedit"}
    ev = summary["methods"]["evoedit"]
    for key in ("solve_seconds_total", "proj_seconds_total", "total_seconds"):
        assert key in ev
    assert set(summary["speedup_vs_alphaedit"]["evoedit"]) == {"total", "solve"}
    rows = read_trace_csv(out / "evoedit_trace.csv")
    assert len(rows) == 3 and tuple(rows[0]) == TRACE_COLUMNS


def test_run_zero_steps(tmp_path):
    path, out = write_config(tmp_path, t=0)
    assert cli.main(["run", "--config", str(path)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    ev = summary["methods"]["evoedit"]
    assert ev["steps"] == 0 and ev["total_seconds"] == 0.0
    assert read_trace_csv(out / "evoedit_trace.csv") == []


def test_single_method_has_no_speedup(tmp_path):
    path, out = write_config(tmp_path, methods='["evoedit"]')
    assert cli.main(["run", "--config", str(path)]) == 0
    assert "speedup_vs_alphaedit" not in json.loads((out / "summary.json").read_text())


def test_run_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[world]\nunknown_key = 3\n")
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1


def test_run_sweep(tmp_path):
    path, out = write_config(tmp_path, t=2, methods='["evoedit"]')
    assert cli.main(["run", "--config", str(path), "--sweep", "batch_size=1,3"]) == 0
    top = json.loads((out / "summary.json").read_text())
    assert [r["value"] for r in top["sweep"]["runs"]] == [1, 3]
    assert (out / "batch_size=3" / "evoedit_trace.csv").exists()


def test_non_timing_columns_are_deterministic(tmp_path):
    cfg = with_override(ExperimentConfig(methods=("evoedit", "plain")), "t_steps", 4)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for method in cfg.methods:
        a = read_trace_csv(tmp_path / "a" / f"{method}_trace.csv")
        b = read_trace_csv(tmp_path / "b" / f"{method}_trace.csv")
        strip = lambda rows: [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]
        assert strip(a) == strip(b)


def test_verify_summary_section(tmp_path):
    cfg = ExperimentConfig(
        world=WorldSpec(d_k=8, d_v=2, n_preserved=2, t_steps=1), methods=("evoedit",), verify_suites=("equivalence",)
    )
    summary = run_experiment(cfg, tmp_path)
    assert summary["verify"]["equivalence"]["passed"] is True


# ---- verify subcommand ------------------------------------------------------


def test_verify_command_passes(capsys):
    assert cli.main(["verify", "--suite", "thm1", "--trials", "3", "--d", "16", "--n", "2", "--steps", "3"]) == 0
    assert "all 3 trials passed" in capsys.readouterr().out


def test_verify_command_failure_exit_code():
    # a tau inside the key spectrum truncates, so exact equivalence breaks
    code = cli.main(["verify", "--suite", "thm1", "--trials", "3", "--d", "16", "--n", "4", "--steps", "3", "--tau", "1.5"])
    assert code == 3


def test_verify_rejects_unknown_suite():
    with pytest.raises(SystemExit):
        cli.main(["verify", "--suite", "nope"])


# ---- gen / edit-files -------------------------------------------------------


def test_gen_then_edit_files_matches_in_process(tmp_path):
    path, _ = write_config(tmp_path, t=3, seed=4)
    data = tmp_path / "data"
    assert cli.main(["gen", "--config", str(path), "--out", str(data)]) == 0
    assert sorted(p.name for p in (data / "batches").iterdir())[:2] == ["0001_keys.nsem", "0001_values.nsem"]
    out = tmp_path / "edited"
    code = cli.main(
        [
            "edit-files",
            "--weights", str(data / "W0.nsem"),
            "--preserved-keys", str(data / "K0.nsem"),
            "--batches", str(data / "batches"),
            "--method", "evoedit",
            "--config", str(path),
            "--out", str(out),
        ]
    )
    assert code == 0
    cfg = load_config(path)
    w0, k0, _ = gen_world(cfg.world)
    expected, _ = run_stream(new_session(w0, k0, "evoedit", cfg.solver), gen_stream(cfg.world, w0))
    np.testing.assert_array_equal(read_matrix(out / "weights.nsem"), expected)
    assert len(read_trace_csv(out / "evoedit_trace.csv")) == 3


def _edit_files(tmp_path, batches, method="evoedit"):
    path, _ = write_config(tmp_path)
    w = tmp_path / "W.nsem"
    k = tmp_path / "K.nsem"
    write_matrix(w, np.eye(3))
    write_matrix(k, np.ones((3, 1)))
    return cli.main(
        [
            "edit-files", "--weights", str(w), "--preserved-keys", str(k), "--batches", str(batches),
            "--method", method, "--config", str(path), "--out", str(tmp_path / "out"),
        ]
    )


def test_edit_files_empty_batch_dir(tmp_path):
    (tmp_path / "b").mkdir()
    assert _edit_files(tmp_path, tmp_path / "b") == 0
    np.testing.assert_array_equal(read_matrix(tmp_path / "out" / "weights.nsem"), np.eye(3))


def test_edit_files_bad_inputs(tmp_path):
    assert _edit_files(tmp_path, tmp_path / "missing") == 1
    b = tmp_path / "b"
    b.mkdir()
    write_matrix(b / "0001_keys.nsem", np.ones((3, 1)))
    assert _edit_files(tmp_path, b) == 1  # no values file
    write_matrix(b / "0001_values.nsem", np.ones((3, 2)))
    assert _edit_files(tmp_path, b) == 1  # column mismatch
    (b / "0001_values.nsem").write_bytes(b"junk")
    assert _edit_files(tmp_path, b) == 1


def test_edit_files_runtime_failure_writes_partial_trace(tmp_path):
    b = tmp_path / "b"
    b.mkdir()
    write_matrix(b / "0001_keys.nsem", np.ones((3, 1)))
    write_matrix(b / "0001_values.nsem", np.ones((3, 1)))
    write_matrix(b / "0002_keys.nsem", np.ones((4, 1)))
    write_matrix(b / "0002_values.nsem", np.ones((3, 1)))
    assert _edit_files(tmp_path, b) == 2
    assert len(read_trace_csv(tmp_path / "out" / "evoedit_trace.csv")) == 1
