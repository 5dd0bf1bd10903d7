"""
Editing matrices stored on disk
===============================

``nsedit gen`` writes a synthetic world as ``.nsem`` files and ``nsedit
edit-files`` edits any weights/keys/batches supplied in that format. The
same commands are driven here through ``cli.main``.
"""

import tempfile
from pathlib import Path

import numpy as np

from nsedit import cli
from nsedit.io import read_matrix

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    config = tmp / "world.toml"
    config.write_text("[world]\nd_k = 32\nd_v = 8\nn_preserved = 6\nt_steps = 4\nbatch_size = 2\nseed = 4\n")

    cli.main(["gen", "--config", str(config), "--out", str(tmp / "data")])
    print(sorted(p.name for p in (tmp / "data" / "batches").iterdir()))

    cli.main([
        "edit-files",
        "--weights", str(tmp / "data" / "W0.nsem"),
        "--preserved-keys", str(tmp / "data" / "K0.nsem"),
        "--batches", str(tmp / "data" / "batches"),
        "--method", "evoedit",
        "--config", str(config),
        "--out", str(tmp / "edited"),
    ])

    w0 = read_matrix(tmp / "data" / "W0.nsem")
    k0 = read_matrix(tmp / "data" / "K0.nsem")
    w = read_matrix(tmp / "edited" / "weights.nsem")
    print(f"weights changed by {np.linalg.norm(w - w0):.3f}; preserved outputs moved {np.linalg.norm((w - w0) @ k0):.1e}")
    print((tmp / "edited" / "evoedit_trace.csv").read_text())
