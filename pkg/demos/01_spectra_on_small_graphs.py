"""Spectra of a few small quantum graphs.

Run with ``python demos/01_spectra_on_small_graphs.py``.
"""
# %%
import numpy as np

from alloyqg.assembly import DIRICHLET, NEUMANN, Mesh, assemble_system, default_bc, solve_spectrum
from alloyqg.graph import Edge, build_graph, full_view
from alloyqg.potential import AlloyConfig, constant_sample

free = AlloyConfig.default()


def lowest(view, bc, n=100, k=6, degree=2, omega=0.0):
    system = assemble_system(view, free, constant_sample(view, omega), bc, Mesh.uniform(view, n, degree))
    return solve_spectrum(system, k=k).eigenvalues


# %% A unit interval with Dirichlet ends: lambda_n = n^2 pi^2.
edge = full_view(build_graph(["a", "b"], [Edge("e", "a", "b", 1.0)], 0.5, 2.0))
exact = np.pi ** 2 * np.arange(1, 11) ** 2
for degree in (1, 2, 3):
    vals = lowest(edge, default_bc(edge), k=10, degree=degree)
    print(f"P{degree}: max relative error {np.max(np.abs(vals - exact) / exact):.2e}")

# %% Two unit edges glued at a Kirchhoff vertex behave like one interval of length 2.
path = full_view(build_graph("abc", [Edge("ab", "a", "b", 1.0), Edge("bc", "b", "c", 1.0)], 0.5, 2.0))
print("path   ", np.round(lowest(path, default_bc(path)) / (np.pi ** 2 / 4), 5))

# %% Pinning or cutting the middle vertex.
print("b=D    ", np.round(lowest(path, dict(default_bc(path), b=DIRICHLET)) / (np.pi ** 2 / 4), 5))
print("b=N    ", np.round(lowest(path, dict(default_bc(path), b=NEUMANN)) / (np.pi ** 2 / 4), 5))

# %% A star with three leaves of different length and a constant potential shift.
star = full_view(build_graph(["c", "x", "y", "z"], [Edge("cx", "c", "x", 1.0), Edge("cy", "c", "y", 1.3),
                                                    Edge("cz", "c", "z", 0.7)], 0.5, 2.0))
v0 = lowest(star, default_bc(star))
v1 = lowest(star, default_bc(star), omega=0.4)
print("star   ", np.round(v0, 4))
print("shift  ", np.round(v1 - v0, 12))
