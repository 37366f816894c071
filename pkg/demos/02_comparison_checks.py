"""Eigenvalue comparisons after decoupling a vertex or an edge.

All variants share one mesh, so the checks are exact up to round-off.
"""
# %%
from alloyqg.bracketing import check_bracketing, check_interlacing
from alloyqg.corpus import random_instance

inst = random_instance(7)
print("edges:", [(e.id, e.iota, e.tau, e.length) for e in inst.graph.edges])

# %% Neumann below, Dirichlet above, at every vertex.
for v in sorted(inst.view.v_lambda):
    rep = check_bracketing(inst.view, inst.config, inst.sample, inst.mesh, v, 10)
    n, lo, lam, hi, ok = rep.rows[0]
    print(f"vertex {v}: {lo:9.4f} <= {lam:9.4f} <= {hi:9.4f}  all {len(rep.rows)} ok={rep.ok}")

# %% Cutting one edge out shifts indices by at most the number of glued ends.
e = inst.view.edge_ids[0]
rep = check_interlacing(inst.view, inst.config, inst.sample, inst.mesh, e, 8)
print(f"edge {e}: rank {rep.rank}, ok={rep.ok}, direct sum error {rep.direct_sum_error:.1e}")
for row in rep.rows[:4]:
    print("  ", row)
