"""
Sequential edits without forgetting
====================================

Two hundred small edits on a synthetic linear memory. The aligned projector
keeps the first edit intact; a fixed projector with a soft penalty on earlier
edits slowly overwrites it, and an unprojected least-squares update also
disturbs the preserved facts.
"""

from nsedit import WorldSpec, gen_stream, gen_world, new_session, run_stream

spec = WorldSpec(d_k=64, d_v=32, n_preserved=20, t_steps=200, batch_size=2, overlap=0.3, seed=33)
w0, k0, v0 = gen_world(spec)
stream = gen_stream(spec, w0)

for method in ("evoedit", "recompute", "alphaedit", "plain"):
    final, traces = run_stream(new_session(w0, k0, method), stream)
    last = traces[-1]
    print(
        f"{method:>9}: first-edit drift {last.early_retention:.2e}, "
        f"preserved drift {last.preservation_drift:.2e}, projector rank {last.projector_rank}"
    )

# Step-level control: apply edits one at a time and watch the first edit.
session = new_session(w0, k0, "evoedit")
for batch in stream[:5]:
    trace = session.apply(batch)
    print(f"step {trace.step}: residual after edit {trace.edit_residual_after:.3f}, retention {trace.early_retention:.1e}")
