import dataclasses
import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from app.errors import EmptySystemError
from app.mesh.triangulation import Triangulation, edge_audit

logger = logging.getLogger(__name__)


class ElementKind(Enum):
    P1 = 'p1'
    CR = 'cr'


@dataclasses.dataclass(frozen=True, eq=False)
class AssembledSystem:
    K: sparse.csr_matrix  # stiffness, energy inner product (grad u, grad v)
    M: sparse.csr_matrix  # consistent mass, L2 inner product
    dof_map: np.ndarray  # free DOF -> global DOF (vertex for P1, edge for CR)
    num_global_dofs: int
    element: ElementKind = ElementKind.P1
    Ch: Optional[float] = None

    @property
    def size(self) -> int:
        return self.K.shape[0]

    def with_Ch(self, Ch: float) -> 'AssembledSystem':
        return dataclasses.replace(self, Ch=Ch)

    def expand(self, free_values: np.ndarray) -> np.ndarray:
        """Embeds free DOF coefficients (vector or columns) into the global numbering, zero on Dirichlet DOFs."""
        shape = (self.num_global_dofs,) + free_values.shape[1:]
        full = np.zeros(shape, dtype=free_values.dtype)
        full[self.dof_map] = free_values
        return full


def barycentric_gradients(t: Triangulation) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric gradients per triangle, shape (nt, 3, 2), and triangle areas."""
    p = t.vertices[t.triangles]
    # edge opposite vertex k, oriented counterclockwise
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    areas = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    # grad lambda_k = rot(e_k) / (2A) with rot(x, y) = (-y, x), pointing inward
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * areas[:, None, None])
    return grads, areas


def _scatter(local: np.ndarray, dofs: np.ndarray, n: int) -> sparse.csr_matrix:
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    matrix = sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    matrix.sum_duplicates()
    return matrix


def _p1_local(t: Triangulation) -> Tuple[np.ndarray, np.ndarray]:
    grads, areas = barycentric_gradients(t)
    stiffness = areas[:, None, None] * np.einsum('tad,tbd->tab', grads, grads)
    mass = areas[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    return stiffness, mass


def assemble_p1_global(t: Triangulation) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Stiffness and consistent mass matrices of linear Lagrange elements before boundary conditions."""
    stiffness, mass = _p1_local(t)
    n = t.num_vertices
    return _scatter(stiffness, t.triangles, n), _scatter(mass, t.triangles, n)


def assemble_cr_global(t: Triangulation) -> Tuple[sparse.csr_matrix, sparse.csr_matrix, np.ndarray]:
    """
    Crouzeix-Raviart matrices on edge-midpoint DOFs before boundary conditions.

    The basis function of the edge opposite vertex k is 1 - 2*lambda_k, so the local
    stiffness is four times the linear one and the local mass is (area/3) I.
    Returns the matrices and the per-edge use count (1 on boundary edges).
    """
    stiffness, _ = _p1_local(t)
    _, areas = barycentric_gradients(t)
    unique_edges, counts, local_edges = edge_audit(t.triangles)
    n = len(unique_edges)
    mass = areas[:, None, None] * np.eye(3)[None] / 3.0
    return _scatter(4.0 * stiffness, local_edges, n), _scatter(mass, local_edges, n), counts


def _eliminate(K: sparse.csr_matrix, M: sparse.csr_matrix, free: np.ndarray, element: ElementKind) -> AssembledSystem:
    if free.size == 0:
        raise EmptySystemError(f'no free degrees of freedom for {element.value} on this mesh')
    K_free = K[free][:, free].tocsr()
    M_free = M[free][:, free].tocsr()
    logger.info(f'Assembled {element.value}: {free.size} free of {K.shape[0]} DOFs, {K_free.nnz} stiffness nonzeros')
    return AssembledSystem(K_free, M_free, free, K.shape[0], element)


def assemble_p1(t: Triangulation) -> AssembledSystem:
    K, M = assemble_p1_global(t)
    return _eliminate(K, M, t.interior_vertices(), ElementKind.P1)


def assemble_cr(t: Triangulation) -> AssembledSystem:
    K, M, counts = assemble_cr_global(t)
    return _eliminate(K, M, np.flatnonzero(counts == 2), ElementKind.CR)


def assemble(t: Triangulation, element: ElementKind) -> AssembledSystem:
    if element == ElementKind.CR:
        return assemble_cr(t)
    return assemble_p1(t)


def solve_poisson_p1(t: Triangulation, f: float = 1.0) -> Tuple[AssembledSystem, np.ndarray]:
    """Galerkin solution of -div grad u = f (constant) with homogeneous Dirichlet data, free DOF coefficients."""
    system = assemble_p1(t)
    _, M = assemble_p1_global(t)
    load = f * np.asarray(M.sum(axis=1)).ravel()[system.dof_map]
    return system, spsolve(system.K.tocsc(), load)


def prolongate_p1(coarse: Triangulation, nodal_values: np.ndarray) -> np.ndarray:
    """Nodal values of a coarse P1 function on refine_uniform(coarse), which appends edge midpoints."""
    unique_edges, _, _ = edge_audit(coarse.triangles)
    midpoints = 0.5 * (nodal_values[unique_edges[:, 0]] + nodal_values[unique_edges[:, 1]])
    return np.concatenate([nodal_values, midpoints])
