"""
Where the time goes
===================

The aligned solver only factors an ``n x n`` system per edit, while the
fixed-projector baseline solves a ``d x d`` one. At ``d = 2048`` that is the
whole difference.
"""

import tempfile

from nsedit.bench import run_experiment
from nsedit.io import ExperimentConfig
from nsedit.synth import WorldSpec

config = ExperimentConfig(
    world=WorldSpec(d_k=2048, d_v=64, n_preserved=512, t_steps=20, batch_size=8, seed=1),
    methods=("evoedit", "alphaedit"),
)

with tempfile.TemporaryDirectory() as out:
    summary = run_experiment(config, out)

for method, stats in summary["methods"].items():
    print(
        f"{method:>9}: solve {stats['solve_seconds_total']:.3f}s, "
        f"proj {stats['proj_seconds_total']:.3f}s, total {stats['total_seconds']:.3f}s"
    )
speed = summary["speedup_vs_alphaedit"]["evoedit"]
print(f"speedup over alphaedit: solve {speed['solve']:.0f}x, total {speed['total']:.1f}x")
