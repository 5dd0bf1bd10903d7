"""
Checking the projector guarantees
=================================

Each guarantee is a seeded suite. Without truncation the aligned projector
equals the recomputed one; with truncation its error stays under the
cumulative bound, and later edits leak into protected directions only through
that error.
"""

from nsedit import verify

for name in ("thm1", "thm2", "equivalence", "interference", "preservation"):
    result = verify.run_suite(name, trials=20)
    status = "ok" if result.passed else "FAILED"
    print(f"{name:>12}: {status}, worst observed {result.max_observed():.2e}")

# A single truncated instance, term by term.
inst = verify.truncated_instance(seed=3)
for step, rec in enumerate(inst.records, start=1):
    print(f"step {step}: kept {rec.retained_sigmas.round(3)}, dropped {rec.discarded_sigmas.round(3)}")
