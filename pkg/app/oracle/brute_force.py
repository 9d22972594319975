import logging
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from app.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def _orthonormal(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    L = linalg.cholesky(A.T @ W @ A, lower=True)
    return linalg.solve_triangular(L, A.T, lower=True).T


def _unit_grid(dim: int, resolution: int) -> np.ndarray:
    """Unit coefficient vectors covering the sphere in R^dim up to sign."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        angles = np.linspace(0.0, np.pi, resolution, endpoint=False)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    side = max(int(np.sqrt(resolution)), 2)
    polar, azimuth = np.meshgrid(np.linspace(0.0, np.pi / 2, side), np.linspace(0.0, 2 * np.pi, 2 * side, endpoint=False))
    polar, azimuth = polar.ravel(), azimuth.ravel()
    return np.column_stack([np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)])


def brute_force_subspace_distance(A: np.ndarray, B: np.ndarray, resolution: int = 10_000,
                                  op: Optional[np.ndarray] = None) -> float:
    """
    Directed distance max_{v in span A, |v| = 1} min_{w in span B} |v - w| by exhaustive search.

    The inner minimum is the orthogonal projection onto span B; the outer maximum is
    taken over a grid of unit vectors of span A and, for three dimensions, polished
    with a local optimizer from the best grid point.
    """
    A = np.atleast_2d(A.T).T
    B = np.atleast_2d(B.T).T
    if A.shape[1] > 3 or B.shape[1] > 3:
        raise InvalidArgumentError('brute force search supports spans of dimension <= 3')
    W = np.eye(A.shape[0]) if op is None else np.asarray(op)
    Qa = _orthonormal(A, W)
    Qb = _orthonormal(B, W)
    cross = Qb.T @ W @ Qa

    def distance_sq(c: np.ndarray) -> float:
        c = c / np.linalg.norm(c)
        return 1.0 - float(np.sum((cross @ c) ** 2))

    grid = _unit_grid(A.shape[1], resolution)
    values = 1.0 - np.sum((grid @ cross.T) ** 2, axis=1)
    best = int(np.argmax(values))
    value = float(values[best])
    if A.shape[1] == 3:
        result = optimize.minimize(lambda c: -distance_sq(c), grid[best], method='Nelder-Mead',
                                   options={'xatol': 1e-10, 'fatol': 1e-14})
        value = max(value, -float(result.fun))
    return float(np.sqrt(min(max(value, 0.0), 1.0)))
