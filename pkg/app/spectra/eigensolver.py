import dataclasses
import logging
from typing import Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import LinearOperator, eigsh, factorized, splu

import settings
from app.errors import InvalidArgumentError, NumericalError
from app.fem.assembly import AssembledSystem

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # (free DOFs, count), M-orthonormal columns
    solver: str = 'dense'

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def cluster_vectors(self, n: int, N: int) -> np.ndarray:
        """Columns of eigenpairs n..N (1-based, inclusive)."""
        if n < 1 or N < n or N > self.count:
            raise InvalidArgumentError(f'cluster {n}..{N} outside the computed range 1..{self.count}')
        return self.eigenvectors[:, n - 1:N]


def _dense_solve(system: AssembledSystem, count: int) -> Tuple[np.ndarray, np.ndarray]:
    K = system.K.toarray()
    M = system.M.toarray()
    try:
        linalg.cholesky(M, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f'mass matrix is not positive definite: {e}')
    return linalg.eigh(K, M, subset_by_index=[0, count - 1])


def _shift_invert_solve(system: AssembledSystem, count: int) -> Tuple[np.ndarray, np.ndarray]:
    sigma = settings.SHIFT_INVERT_SIGMA
    try:
        lu = splu((system.K - sigma * system.M).tocsc())
    except RuntimeError as e:
        raise NumericalError(f'shifted stiffness factorization failed: {e}')
    op_inv = LinearOperator(matvec=lu.solve, shape=system.K.shape, dtype=system.K.dtype)
    return eigsh(system.K.tocsc(), k=count, M=system.M.tocsc(), sigma=sigma, which='LM', OPinv=op_inv)


def m_orthonormalize(V: np.ndarray, M: sparse.spmatrix) -> np.ndarray:
    """Cholesky based Gram-Schmidt of the columns of V in the M inner product."""
    G = V.T @ (M @ V)
    G = (G + G.T) / 2
    try:
        L = linalg.cholesky(G, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f'eigenvectors are linearly dependent: {e}')
    return linalg.solve_triangular(L, V.T, lower=True).T


def degenerate_groups(eigenvalues: np.ndarray, rtol: float = settings.DEGENERACY_RTOL):
    groups = [[0]] if len(eigenvalues) else []
    for i in range(1, len(eigenvalues)):
        previous = eigenvalues[groups[-1][-1]]
        if abs(eigenvalues[i] - previous) <= rtol * max(abs(eigenvalues[i]), abs(previous)):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Makes the first clearly nonzero coefficient of every column positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        column = V[:, j]
        significant = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())
        if significant.size and column[significant[0]] < 0:
            V[:, j] = -column
    return V


def residual_norms(system: AssembledSystem, eigenvalues: np.ndarray, V: np.ndarray) -> np.ndarray:
    """M^-1 norms of K v - lambda M v per column."""
    solve_M = factorized(system.M.tocsc())
    R = system.K @ V - (system.M @ V) * eigenvalues[None, :]
    norms = np.empty(V.shape[1])
    for j in range(V.shape[1]):
        norms[j] = np.sqrt(max(float(R[:, j] @ solve_M(R[:, j])), 0.0))
    return norms


def solve_generalized(system: AssembledSystem, count: int) -> Spectrum:
    """Smallest `count` eigenpairs of K x = lambda M x with M-orthonormal eigenvectors."""
    if count < 1 or count > system.size:
        raise InvalidArgumentError(f'cannot compute {count} eigenpairs of a {system.size}-DOF system')

    if system.size <= settings.DENSE_EIGEN_DOF_LIMIT:
        solver = 'dense'
        eigenvalues, V = _dense_solve(system, count)
    else:
        solver = 'shift-invert'
        eigenvalues, V = _shift_invert_solve(system, count)
    logger.info(f'Solved {count} eigenpairs of a {system.size}-DOF {system.element.value} system ({solver})')

    order = np.argsort(eigenvalues, kind='stable')
    eigenvalues = np.asarray(eigenvalues[order], dtype=float)
    V = np.asarray(V[:, order], dtype=float)

    for group in degenerate_groups(eigenvalues):
        V[:, group] = m_orthonormalize(V[:, group], system.M)
    V = fix_signs(V)

    gram = V.T @ (system.M @ V)
    deviation = np.abs(gram - np.eye(count)).max()
    if deviation > settings.ORTHONORMALITY_TOL:
        raise NumericalError(f'eigenvectors are not M-orthonormal, deviation {deviation:.3e}')

    residuals = residual_norms(system, eigenvalues, V)
    worst = int(np.argmax(residuals / np.abs(eigenvalues)))
    if residuals[worst] > settings.RESIDUAL_RTOL * abs(eigenvalues[worst]):
        raise NumericalError(f'eigenpair {worst + 1} residual {residuals[worst]:.3e} exceeds tolerance')

    return Spectrum(eigenvalues, V, solver)


def rayleigh_max(V: np.ndarray, K: sparse.spmatrix, M: sparse.spmatrix) -> float:
    """Largest Rayleigh quotient v'Kv / v'Mv over the span of the columns of V."""
    if V.ndim != 2 or V.shape[1] == 0:
        raise InvalidArgumentError('empty subspace')
    A = V.T @ (K @ V)
    B = V.T @ (M @ V)
    A = (A + A.T) / 2
    B = (B + B.T) / 2
    if V.shape[1] == 1:
        return float(A[0, 0] / B[0, 0])
    try:
        return float(linalg.eigh(A, B, eigvals_only=True)[-1])
    except linalg.LinAlgError as e:
        raise NumericalError(f'subspace basis is degenerate in the mass inner product: {e}')


def cluster_rayleigh_max(spectrum: Spectrum, system: AssembledSystem, cluster: Tuple[int, int]) -> float:
    n, N = cluster
    if N < n:
        raise InvalidArgumentError(f'empty cluster {n}..{N}')
    return rayleigh_max(spectrum.cluster_vectors(n, N), system.K, system.M)
