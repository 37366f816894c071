"""P1 finite elements for ``-d^2/dx^2 + W`` on a finite subgraph.

Every edge carries its own 1D mesh.  Vertex conditions only decide how the
end nodes of the edges are numbered:

* ``COUPLED``   one degree of freedom shared by all incident edge ends
  (continuity; the Kirchhoff flux balance is the natural condition),
* ``NEUMANN``   one independent degree of freedom per incident edge end,
* ``DIRICHLET`` every incident edge end is pinned to zero and eliminated.

Eigenvalue indices ``n`` are 1-based throughout, as in ``lambda_1 <= lambda_2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import (
    DimensionTooLarge,
    IncompleteSpectrum,
    MeshMisaligned,
    MissingVertexCondition,
    NoVectors,
    RegionMisaligned,
    SolverFailure,
)

DEFAULT_MAX_DIM = 6000
RESIDUAL_TOL = 1e-8
CLUSTER_GAP = 1e-7


class Condition(str, Enum):
    COUPLED = "coupled"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


COUPLED, DIRICHLET, NEUMANN = Condition.COUPLED, Condition.DIRICHLET, Condition.NEUMANN


def default_bc(view) -> dict:
    """Dirichlet at the degree-one vertices, coupled everywhere else."""
    return {v: (DIRICHLET if v in view.boundary_vertices else COUPLED) for v in view.v_lambda}


def box_bc(view) -> dict:
    """Dirichlet wherever the subgraph ends or is cut out of its parent."""
    pinned = view.boundary_vertices | view.frontier
    return {v: (DIRICHLET if v in pinned else COUPLED) for v in view.v_lambda}


# -- mesh -------------------------------------------------------------------

@dataclass(frozen=True)
class Mesh:
    """Element boundaries per edge plus the Lagrange degree of the elements."""

    nodes: dict  # edge id -> increasing element boundaries, first 0 and last l_e
    degree: int = 2

    def n_elements(self, edge_id) -> int:
        return len(self.nodes[edge_id]) - 1

    def refined(self) -> "Mesh":
        out = {}
        for eid, x in self.nodes.items():
            mid = 0.5 * (x[:-1] + x[1:])
            y = np.empty(2 * len(x) - 1)
            y[0::2], y[1::2] = x, mid
            out[eid] = y
        return Mesh(out, self.degree)

    def restrict(self, edge_ids) -> "Mesh":
        return Mesh({eid: self.nodes[eid] for eid in edge_ids}, self.degree)

    @property
    def h_max(self) -> float:
        return max(float(np.max(np.diff(x))) for x in self.nodes.values())

    @classmethod
    def uniform(cls, view, n: int, degree: int = 2) -> "Mesh":
        if n < 2:
            raise ValueError("need at least two elements per edge")
        return cls({e.id: np.linspace(0.0, e.length, n + 1) for e in view.edges}, degree)


def build_mesh(view, config=None, h_max: float = 0.1, min_elements: int = 2, degree: int = 2) -> Mesh:
    """Mesh whose nodes include every profile breakpoint and support endpoint.

    Each piece between consecutive breakpoints is split uniformly with spacing
    at most ``h_max``; aligned breakpoints therefore give a uniform mesh.
    """
    nodes = {}
    for e in view.edges:
        pts = {0.0, e.length}
        if config is not None:
            pts.update(p for p in config.site(e).breakpoints() if 0.0 < p < e.length)
        pts = sorted(pts)
        pieces = []
        for a, b in zip(pts[:-1], pts[1:]):
            k = max(1, math.ceil((b - a) / h_max - 1e-9))
            pieces.append(np.linspace(a, b, k + 1)[:-1])
        x = np.concatenate(pieces + [[e.length]])
        while len(x) - 1 < min_elements:
            x = Mesh({0: x}).refined().nodes[0]
        nodes[e.id] = x
    return Mesh(nodes, degree)


def _check_aligned(edge, nodes, site):
    scale = max(edge.length, 1.0)
    if abs(nodes[0]) > 1e-12 * scale or abs(nodes[-1] - edge.length) > 1e-12 * scale:
        raise MeshMisaligned(f"mesh of edge {edge.id!r} does not span [0, {edge.length}]")
    for p in site.breakpoints():
        if 0.0 < p < edge.length and np.min(np.abs(nodes - p)) > 1e-10 * scale:
            raise MeshMisaligned(f"breakpoint {p} of edge {edge.id!r} is not a mesh node")


# -- assembly ---------------------------------------------------------------

@lru_cache(maxsize=None)
def reference_matrices(degree: int):
    """Stiffness and mass of the Lagrange element of ``degree`` on [0, 1]."""
    if degree < 1:
        raise ValueError("element degree must be >= 1")
    xi = np.linspace(0.0, 1.0, degree + 1)
    coef = np.linalg.inv(np.vander(xi, increasing=True))  # column j: shape function j
    gx, gw = np.polynomial.legendre.leggauss(degree + 1)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    powers = np.arange(degree + 1)
    V = gx[:, None] ** powers  # quadrature points x monomials
    dV = np.zeros_like(V)
    dV[:, 1:] = powers[1:] * gx[:, None] ** (powers[1:] - 1)
    phi, dphi = V @ coef, dV @ coef
    S = dphi.T @ (gw[:, None] * dphi)
    Mref = phi.T @ (gw[:, None] * phi)
    return S, Mref


@dataclass(frozen=True)
class AssembledSystem:
    view: object
    config: object
    sample: object
    bc: dict
    mesh: Mesh
    K: sp.csr_matrix
    M: sp.csr_matrix
    edge_dofs: dict = field(repr=False)  # edge id -> global index per Lagrange node, -1 if pinned
    element_potential: dict = field(repr=False)  # edge id -> u_e on each element

    @property
    def dimension(self) -> int:
        return self.K.shape[0]

    def node_coordinates(self, edge_id) -> np.ndarray:
        x = np.asarray(self.mesh.nodes[edge_id])
        p = self.mesh.degree
        frac = np.arange(p) / p
        inner = (x[:-1, None] + np.diff(x)[:, None] * frac).ravel()
        return np.append(inner, x[-1])

    def edge_values(self, vec, edge_id) -> np.ndarray:
        idx = self.edge_dofs[edge_id]
        out = np.zeros(len(idx))
        live = idx >= 0
        out[live] = vec[idx[live]]
        return out


def _element_energy(x, values, degree, weight=None):
    """Exact integral of ``weight * f**2`` for the finite element function ``f``."""
    _, Mref = reference_matrices(degree)
    h = np.diff(x)
    n = len(h)
    loc = np.lib.stride_tricks.sliding_window_view(values, degree + 1)[::degree][:n]
    q = h * np.einsum("ij,jk,ik->i", loc, Mref, loc)
    if weight is not None:
        q = q * weight
    return float(np.sum(q))


def assemble_system(view, config, sample, bc: dict, mesh: Mesh) -> AssembledSystem:
    for v in view.v_lambda:
        if v not in bc:
            raise MissingVertexCondition(f"vertex {v!r} has no boundary condition")
    p = mesh.degree
    S_ref, M_ref = reference_matrices(p)
    vertex_dof = {}
    edge_dofs = {}
    counter = 0

    def end_dof(v):
        nonlocal counter
        cond = Condition(bc[v])
        if cond is DIRICHLET:
            return -1
        if cond is COUPLED:
            if v not in vertex_dof:
                vertex_dof[v] = counter
                counter += 1
            return vertex_dof[v]
        counter += 1
        return counter - 1

    li, lj = np.meshgrid(np.arange(p + 1), np.arange(p + 1), indexing="ij")
    rows, cols, kvals, mvals = [], [], [], []
    element_potential = {}
    for e in view.edges:
        if e.id not in mesh.nodes:
            raise MeshMisaligned(f"mesh has no nodes for edge {e.id!r}")
        x = np.asarray(mesh.nodes[e.id], dtype=float)
        site = config.site(e)
        _check_aligned(e, x, site)
        n = len(x) - 1
        n_nodes = n * p + 1
        idx = np.empty(n_nodes, dtype=np.int64)
        idx[0] = end_dof(e.iota)
        idx[1:n_nodes - 1] = np.arange(counter, counter + n_nodes - 2)
        counter += n_nodes - 2
        idx[-1] = end_dof(e.tau)
        edge_dofs[e.id] = idx

        h = np.diff(x)
        u = np.array([site(0.5 * (a + b)) for a, b in zip(x[:-1], x[1:])])
        element_potential[e.id] = u
        w = sample[e.id] * u
        elem = idx[np.arange(n)[:, None] * p + np.arange(p + 1)]  # n x (p+1)
        r = elem[:, li].reshape(n, -1)
        c = elem[:, lj].reshape(n, -1)
        kv = (S_ref.ravel()[None, :] / h[:, None]) + (w * h)[:, None] * M_ref.ravel()[None, :]
        mv = h[:, None] * M_ref.ravel()[None, :]
        keep = (r >= 0) & (c >= 0)
        rows.append(r[keep])
        cols.append(c[keep])
        kvals.append(kv[keep])
        mvals.append(mv[keep])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    shape = (counter, counter)
    K = sp.coo_matrix((np.concatenate(kvals), (rows, cols)), shape=shape).tocsr()
    M = sp.coo_matrix((np.concatenate(mvals), (rows, cols)), shape=shape).tocsr()
    return AssembledSystem(view, config, sample, dict(bc), mesh, K, M, edge_dofs, element_potential)


# -- spectrum ---------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]  # columns, M-orthonormal
    residuals: np.ndarray
    resolved_up_to: float  # every eigenvalue <= this value is present
    clustered: np.ndarray  # True where the eigenvalue sits in a near-degenerate cluster
    dimension: int
    tol: float = RESIDUAL_TOL

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def vector(self, n: int) -> np.ndarray:
        if self.eigenvectors is None:
            raise NoVectors("spectrum was solved without eigenvectors")
        return self.eigenvectors[:, n - 1]


def _cluster_flags(vals, above=None):
    flags = np.zeros(len(vals), dtype=bool)
    ext = np.append(vals, np.inf if above is None else above)
    for i in range(len(vals)):
        scale = max(1.0, abs(vals[i]))
        lo = i > 0 and vals[i] - vals[i - 1] < CLUSTER_GAP * scale
        hi = ext[i + 1] - vals[i] < CLUSTER_GAP * scale
        flags[i] = lo or hi
    return flags


def _norm1(A) -> float:
    return float(abs(A).sum(axis=0).max())


def solve_spectrum(system: AssembledSystem, k: Optional[int] = None, lam_max: Optional[float] = None,
                   want_vectors: bool = False, max_dim: int = DEFAULT_MAX_DIM,
                   tol: float = RESIDUAL_TOL) -> Spectrum:
    """Lowest ``k`` eigenpairs, or all eigenpairs ``<= lam_max``, or everything."""
    dim = system.dimension
    if dim > max_dim:
        raise DimensionTooLarge(f"system dimension {dim} exceeds cap {max_dim}")
    if k is not None and lam_max is not None:
        raise ValueError("request either k or lam_max, not both")
    if dim == 0:
        empty = np.empty(0)
        return Spectrum(empty, np.empty((0, 0)) if want_vectors else None, empty, math.inf,
                        np.empty(0, dtype=bool), 0, tol)
    K, M = system.K.toarray(), system.M.toarray()
    above = None
    try:
        if lam_max is not None:
            vals, vecs = scipy.linalg.eigh(K, M, subset_by_value=(-np.inf, lam_max), driver="gvx")
            resolved = float(lam_max)
        elif k is not None and k < dim:
            vals, vecs = scipy.linalg.eigh(K, M, subset_by_index=(0, k), driver="gvx")
            above = vals[k]
            resolved = float(np.nextafter(above, -np.inf))
            vals, vecs = vals[:k], vecs[:, :k]
        else:
            vals, vecs = scipy.linalg.eigh(K, M)
            resolved = math.inf
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(str(exc)) from exc
    # residuals use the sparse matrices, so they cost little even without vectors
    Ks, Ms = system.K, system.M
    resid = np.linalg.norm(Ks @ vecs - (Ms @ vecs) * vals, axis=0)
    scale = (_norm1(Ks) + np.abs(vals) * _norm1(Ms)) * np.linalg.norm(vecs, axis=0)
    resid = resid / np.where(scale > 0, scale, 1.0)
    if np.any(resid > tol):
        raise SolverFailure(f"relative residual {resid.max():.3e} above {tol:.1e}")
    if not want_vectors:
        vecs = None
    return Spectrum(vals, vecs, resid, resolved, _cluster_flags(vals, above), dim, tol)


def count_eigenvalues(spectrum: Spectrum, threshold: float, mode: str = "leq") -> int:
    if threshold > spectrum.resolved_up_to:
        raise IncompleteSpectrum(
            f"threshold {threshold} above resolved range {spectrum.resolved_up_to}")
    side = {"leq": "right", "lt": "left"}[mode]
    return int(np.searchsorted(spectrum.eigenvalues, threshold, side=side))


def n0_reference(lam: float) -> int:
    """Number of Dirichlet eigenvalues ``n^2 pi^2 <= lam`` of the unit interval."""
    if lam < 0:
        return 0
    n = int(math.floor(math.sqrt(lam) / math.pi))
    while ((n + 1) * math.pi) ** 2 <= lam:
        n += 1
    while n > 0 and (n * math.pi) ** 2 > lam:
        n -= 1
    return n


def eigenfunction_mass(spectrum: Spectrum, system: AssembledSystem, n: int, edge_id,
                       interval: Optional[tuple] = None) -> float:
    """Integral of ``|psi_n|^2`` over an edge or a subinterval bounded by mesh nodes."""
    vec = spectrum.vector(n)
    x = np.asarray(system.mesh.nodes[edge_id])
    p = system.mesh.degree
    vals = system.edge_values(vec, edge_id)
    if interval is None:
        return _element_energy(x, vals, p)
    a, b = interval
    tol = 1e-10 * max(1.0, x[-1])
    ia, ib = int(np.argmin(np.abs(x - a))), int(np.argmin(np.abs(x - b)))
    if abs(x[ia] - a) > tol or abs(x[ib] - b) > tol or ib < ia:
        raise RegionMisaligned(f"[{a}, {b}] endpoints are not mesh nodes of edge {edge_id!r}")
    if ib == ia:
        return 0.0
    return _element_energy(x[ia:ib + 1], vals[ia * p:ib * p + 1], p)


def potential_expectation(spectrum: Spectrum, system: AssembledSystem, n: int, edge_id) -> float:
    """``(psi_n | u_e psi_n)``, the derivative of lambda_n in omega_e."""
    vec = spectrum.vector(n)
    x = np.asarray(system.mesh.nodes[edge_id])
    return _element_energy(x, system.edge_values(vec, edge_id), system.mesh.degree,
                           system.element_potential[edge_id])
