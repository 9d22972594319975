import dataclasses
import logging
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import linalg, sparse

import settings
from app.errors import ConditionViolatedError, IllConditionedBasisError, InvalidArgumentError, NumericalError

logger = logging.getLogger(__name__)


class InnerProduct(Enum):
    ENERGY = 'energy'  # (grad u, grad v), stiffness matrix
    L2 = 'l2'  # (u, v), mass matrix


@dataclasses.dataclass(frozen=True, eq=False)
class SubspaceBasis:
    vectors: np.ndarray  # (DOFs, dim), linearly independent columns
    inner_product: InnerProduct = InnerProduct.L2

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise InvalidArgumentError(f'a basis needs at least one column, got shape {self.vectors.shape}')

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclasses.dataclass(frozen=True, eq=False)
class GramTriple:
    F: np.ndarray  # ((v_i, v'_j)), m x m'
    G: np.ndarray  # ((v_i, v_j)), m x m
    H: np.ndarray  # ((v'_i, v'_j)), m' x m'


def _symmetrize(A: np.ndarray) -> np.ndarray:
    return (A + A.T) / 2


def gram_triple(a: SubspaceBasis, b: SubspaceBasis, op) -> GramTriple:
    """Gram matrices of two bases through a symmetric operator (sparse or dense matrix)."""
    if a.inner_product != b.inner_product:
        raise InvalidArgumentError(f'bases use different inner products: {a.inner_product.value} and {b.inner_product.value}')
    n = op.shape[0]
    if a.vectors.shape[0] != n or b.vectors.shape[0] != n:
        raise InvalidArgumentError(f'basis lengths {a.vectors.shape[0]}, {b.vectors.shape[0]} do not match operator size {n}')

    op_b = op @ b.vectors
    F = a.vectors.T @ op_b
    G = _symmetrize(a.vectors.T @ (op @ a.vectors))
    H = _symmetrize(b.vectors.T @ op_b)
    return GramTriple(np.asarray(F), np.asarray(G), np.asarray(H))


def normalized(basis: SubspaceBasis, op) -> SubspaceBasis:
    """Scales every column to unit norm in the operator inner product."""
    norms = np.sqrt(np.einsum('ij,ij->j', basis.vectors, op @ basis.vectors))
    return SubspaceBasis(basis.vectors / norms[None, :], basis.inner_product)


def operator_for(inner_product: InnerProduct, K: sparse.spmatrix, M: sparse.spmatrix):
    return K if inner_product == InnerProduct.ENERGY else M


def checked_cholesky(S: np.ndarray, name: str) -> np.ndarray:
    try:
        L = linalg.cholesky(S, lower=True)
    except linalg.LinAlgError:
        raise IllConditionedBasisError(f'{name} is not positive definite')
    diag = np.abs(np.diag(L))
    if diag.min() == 0 or (diag.max() / diag.min()) ** 2 > settings.GRAM_CONDITION_LIMIT:
        raise IllConditionedBasisError(f'{name} is ill-conditioned')
    return L


def _lambda_max(A: np.ndarray, B: np.ndarray) -> float:
    return float(linalg.eigh(_symmetrize(A), B, eigvals_only=True)[-1])


def epsilon_hat_sq(gt: GramTriple) -> float:
    """
    Non-orthogonality measure: max over unit v in the first space of the squared
    inner product with a unit vector of the second space.

    Both generalized eigenvalue formulations are evaluated and must agree.
    """
    checked_cholesky(gt.G, 'G')
    checked_cholesky(gt.H, 'H')
    first = _lambda_max(gt.F.T @ linalg.solve(gt.G, gt.F, assume_a='pos'), gt.H)
    second = _lambda_max(gt.F @ linalg.solve(gt.H, gt.F.T, assume_a='pos'), gt.G)
    if not np.isclose(first, second, rtol=settings.EPSILON_AGREEMENT_RTOL, atol=settings.EPSILON_AGREEMENT_ATOL):
        raise NumericalError(f'generalized eigenvalue formulations disagree: {first!r} vs {second!r}')
    return max(first, 0.0)


def epsilon_hat_sq_upper(etaF: float, etaG: float, etaH: float) -> float:
    if etaG >= 1 or etaH >= 1:
        raise ConditionViolatedError(f'Gershgorin estimate needs eta_G, eta_H < 1, got {etaG:.3g}, {etaH:.3g}')
    return etaF / ((1 - etaG) * (1 - etaH))


def gershgorin_radius(S: np.ndarray) -> float:
    """Upper bound of the spectral norm of a symmetric matrix: largest absolute row sum."""
    return float(np.abs(S).sum(axis=1).max())


def gershgorin_etas(gt: GramTriple) -> Tuple[float, float, float]:
    etaF = gershgorin_radius(gt.F.T @ gt.F)
    etaG = gershgorin_radius(np.eye(gt.G.shape[0]) - gt.G)
    etaH = gershgorin_radius(np.eye(gt.H.shape[0]) - gt.H)
    return etaF, etaG, etaH
