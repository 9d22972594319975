import logging

import numpy as np
from scipy import linalg

from app.errors import InvalidArgumentError
from app.subspace.gram import GramTriple, SubspaceBasis, checked_cholesky, gram_triple

logger = logging.getLogger(__name__)


def principal_cosines(gt: GramTriple) -> np.ndarray:
    """Cosines of the principal angles, descending, from the Gram matrices of two bases."""
    La = checked_cholesky(gt.G, 'G')
    Lb = checked_cholesky(gt.H, 'H')
    # cross matrix of the orthonormalized bases: La^-1 F Lb^-T
    C = linalg.solve_triangular(La, gt.F, lower=True)
    C = linalg.solve_triangular(Lb, C.T, lower=True).T
    return np.clip(linalg.svd(C, compute_uv=False), 0.0, 1.0)


def directed_distance_from_gram(gt: GramTriple) -> float:
    """delta(a, b) = max over unit v in a of the distance to b; 1 when dim a > dim b."""
    m, m_prime = gt.F.shape
    if m > m_prime:
        return 1.0
    sigma_min = principal_cosines(gt)[m - 1]
    return float(np.sqrt(min(max(1.0 - sigma_min ** 2, 0.0), 1.0)))


def directed_distance_exact(a: SubspaceBasis, b: SubspaceBasis, op) -> float:
    return directed_distance_from_gram(gram_triple(a, b, op))


def pair_distance_from_delta(norm_u: float, norm_uhat: float, delta: float) -> float:
    """Distance between u and its best aligned partner uhat, assuming (u, uhat) >= 0."""
    if not 0.0 <= delta <= 1.0:
        raise InvalidArgumentError(f'directed distance must lie in [0, 1], got {delta}')
    value = norm_u ** 2 + norm_uhat ** 2 - 2 * norm_u * norm_uhat * np.sqrt(1 - delta ** 2)
    return float(np.sqrt(max(value, 0.0)))
