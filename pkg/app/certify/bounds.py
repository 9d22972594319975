"""
Guaranteed upper bounds on directed distances between an exact cluster eigenspace
E and its approximation E_hat.

Exact eigenvalues enter only through verified enclosures [lo, hi]. Every rational
expression below is monotone in lambda_n on the enclosure, so evaluating at both
endpoints and keeping the larger value gives the worst case.
"""
import dataclasses
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

import settings
from app.errors import ClusterGapViolatedError, MissingConstantError, SeparationViolatedError, TauWindowError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class PriorCluster:
    """Contribution of an already certified cluster k < K."""
    lambda_n_lo: float  # lower bound of the first eigenvalue of cluster k
    overlap: float  # zeta_hat (energy) or eps_hat (L2) between E_hat_k and E_hat_K
    bound: float  # certified Delta_k (energy) or delta_k (L2)


def finish_bound(value_sq: float) -> float:
    """Clamps a squared bound to [0, 1], takes the root and applies the safety inflation."""
    value = np.sqrt(min(max(value_sq, 0.0), 1.0))
    return float(min(value * (1.0 + settings.SAFETY_INFLATION), 1.0))


def _check_gap(lambda_n_hi: float, rho: float):
    if rho <= lambda_n_hi:
        raise ClusterGapViolatedError(f'rho={rho!r} does not exceed the upper bound {lambda_n_hi!r} of lambda_n')


def bound_energy_cluster(lambda_n: Tuple[float, float], lambda_hat: float, rho: float,
                         prior: Sequence[PriorCluster] = ()) -> float:
    """
    Energy directed distance bound for cluster K:

        Delta^2 <= [rho (lambda_hat - lambda_n) + lambda_n lambda_hat vartheta] / [lambda_hat (rho - lambda_n)]
        vartheta = sum_k (rho / lambda_{n_k} - 1) (zeta_hat_k + Delta_k)^2

    :param lambda_n: enclosure (lo, hi) of the first exact eigenvalue of the cluster
    :param lambda_hat: largest Rayleigh quotient over the approximate cluster space
    :param rho: verified lower bound of the eigenvalue after the cluster
    :param prior: certified clusters 1..K-1 with their energy overlaps and Delta bounds
    """
    lo, hi = lambda_n
    _check_gap(hi, rho)
    # weights grow as lambda_{n_k} shrinks, so the lower enclosure end is used
    vartheta = sum((rho / p.lambda_n_lo - 1.0) * (p.overlap + p.bound) ** 2 for p in prior)
    value_sq = max(
        (rho * (lambda_hat - ln) + ln * lambda_hat * vartheta) / (lambda_hat * (rho - ln))
        for ln in (lo, hi)
    )
    return finish_bound(value_sq)


def bound_l2_cluster(lambda_n: Tuple[float, float], lambda_hat: float, rho: float,
                     prior: Sequence[PriorCluster] = ()) -> float:
    """
    L2 directed distance bound for cluster K:

        delta^2 <= (lambda_hat - lambda_n + theta) / (rho - lambda_n)
        theta = sum_k (rho - lambda_{n_k}) (eps_hat_k + delta_k)^2
    """
    lo, hi = lambda_n
    _check_gap(hi, rho)
    theta = sum((rho - p.lambda_n_lo) * (p.overlap + p.bound) ** 2 for p in prior)
    value_sq = max((lambda_hat - ln + theta) / (rho - ln) for ln in (lo, hi))
    return finish_bound(value_sq)


@dataclasses.dataclass(frozen=True)
class TauResult:
    tau: float
    argmax_index: int  # 1-based discrete index attaining the maximum


def compute_tau_k(enclosures: Sequence[Tuple[float, float]], discrete_eigenvalues: np.ndarray,
                  cluster: Tuple[int, int], strict_window: bool = True) -> TauResult:
    """
    Separation factor max_{j in cluster} max_{i outside} lambda_j / |lambda_{h,i} - lambda_j|.

    :param enclosures: (lo, hi) for j = n..N of the cluster
    :param discrete_eigenvalues: all computed discrete eigenvalues, ascending
    :param cluster: (n, N), 1-based inclusive
    :param strict_window: raise TauWindowError when the maximizing i is not adjacent to the cluster
    """
    n, N = cluster
    outside = np.array([i for i in range(1, len(discrete_eigenvalues) + 1) if not n <= i <= N])
    if outside.size == 0:
        raise SeparationViolatedError(f'no discrete eigenvalues outside cluster {n}..{N} were computed')
    values = np.asarray(discrete_eigenvalues)[outside - 1]

    tau = -np.inf
    argmax = int(outside[0])
    for j, (lo, hi) in zip(range(n, N + 1), enclosures):
        # distance from lambda_{h,i} to the enclosure [lo, hi] of lambda_j
        distance = np.maximum(np.maximum(lo - values, values - hi), 0.0)
        if (distance <= 0).any():
            i = int(outside[np.argmax(distance <= 0)])
            raise SeparationViolatedError(f'discrete eigenvalue {i} lies inside the enclosure of lambda_{j}')
        ratios = hi / distance
        best = int(np.argmax(ratios))
        if ratios[best] > tau:
            tau = float(ratios[best])
            argmax = int(outside[best])

    if argmax < n - settings.TAU_ADJACENCY_LIMIT or argmax > N + settings.TAU_ADJACENCY_LIMIT:
        message = f'tau_k maximized at index {argmax}, far from cluster {n}..{N}'
        if strict_window:
            raise TauWindowError(message, argmax)
        logger.warning(message)
    return TauResult(tau, argmax)


def bound_l2_optimal(lambda_N_hi: float, Ch: Optional[float], tau: float, cluster_size: int, Delta: float) -> float:
    """delta <= sqrt(lambda_N) C_h (1 + tau sqrt(|C(k)|)) Delta, from the a priori constant and a duality argument."""
    if Ch is None:
        raise MissingConstantError('C_h is required for the optimal L2 bound')
    value = np.sqrt(lambda_N_hi) * Ch * (1.0 + tau * np.sqrt(cluster_size)) * Delta
    return finish_bound(min(value, 1.0) ** 2)


def bound_energy_from_l2(lambda_n_lo: float, lambda_N_hi: float, lambda_hat: float, delta: float,
                         incumbent: float = 1.0) -> float:
    """
    Delta^2 <= 2 - 2 lambda_n sqrt((1 - delta^2) / (lambda_N lambda_hat)), combined with the incumbent by min.

    The expression decreases in lambda_n and increases in lambda_N, hence lo(n) and hi(N).
    """
    if delta >= 1.0:
        return min(1.0, incumbent)
    value_sq = 2.0 - 2.0 * lambda_n_lo * np.sqrt((1.0 - delta ** 2) / (lambda_N_hi * lambda_hat))
    return min(finish_bound(value_sq), incumbent)


def bound_energy_tilde(lambda_n_lo: float, lambda_N_hi: float, lambda_hat: float, delta: float) -> float:
    """lambda_N + lambda_hat - 2 lambda_n sqrt(1 - delta^2); an energy-scaled quantity, not a directed distance."""
    delta = min(max(delta, 0.0), 1.0)
    return float(max(lambda_N_hi + lambda_hat - 2.0 * lambda_n_lo * np.sqrt(1.0 - delta ** 2), 0.0))
