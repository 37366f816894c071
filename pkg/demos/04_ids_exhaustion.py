"""Counting functions on growing lattice boxes.

Writes ``ids_free.svg`` and ``ids_disorder.svg`` to the current directory.
"""
# %%
import numpy as np

from alloyqg.ids import Box, IdsExperiment, check_superadditivity, exhaustion_run, free_config, random_partition
from alloyqg.io import step_plot_svg, write_text
from alloyqg.potential import AlloyConfig

grid = tuple(np.linspace(0.5, 40.0, 80))

# %% Free chains: N^l(lambda) = floor((l - 2) sqrt(lambda) / pi) / l.
free = exhaustion_run(IdsExperiment(1, (10, 20, 40), grid, free_config()))
worst = max(free.free_limit, key=lambda r: r[4] * r[0])
print("largest l * |N^l - sqrt(lambda)/pi|:", round(worst[4] * worst[0], 3), "at l, lambda =", worst[:2])
write_text("ids_free.svg", step_plot_svg([(f"l = {c.l}", c.lambdas, c.N) for c in free.curves], "free chain"))

# %% Disordered squares: successive curves form a Cauchy sequence.
dis = exhaustion_run(IdsExperiment(2, (4, 6, 8), grid, AlloyConfig.default(), master_seed=5), threads=4)
for a, b, d in dis.sup_differences:
    print(f"sup |N^{b} - N^{a}| = {d:.3f}")
write_text("ids_disorder.svg", step_plot_svg([(f"l = {c.l}", c.lambdas, c.N) for c in dis.curves], "disorder"))

# %% Superadditivity on a random guillotine partition of a 6 x 6 box.
rng = np.random.default_rng(3)
q = Box((0, 0), (6, 6))
parts = random_partition(q, rng, 3)
rep = check_superadditivity(q, parts, AlloyConfig.default(), None, 25.3, master_seed=5)
print("F_Q =", rep.F_box, ">= sum of parts", rep.F_parts, "=", sum(rep.F_parts))
