import dataclasses
import logging
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

import settings
from app.certify.bounds import (PriorCluster, bound_energy_cluster, bound_energy_from_l2, bound_energy_tilde,
                                bound_l2_cluster, bound_l2_optimal, compute_tau_k)
from app.errors import ClusterGapViolatedError, EigenCertError, OrderingError, SeparationViolatedError
from app.fem.assembly import AssembledSystem
from app.spectra.clusters import ClusterSpec, EigenEnclosure
from app.spectra.eigensolver import Spectrum, cluster_rayleigh_max
from app.subspace.gram import (InnerProduct, SubspaceBasis, epsilon_hat_sq, epsilon_hat_sq_upper, gershgorin_etas,
                               gram_triple, normalized)

logger = logging.getLogger(__name__)


class EpsilonMode(Enum):
    EXACT = 'exact_epsilon'
    GERSHGORIN = 'gershgorin'


@dataclasses.dataclass
class ClusterBoundState:
    k: int
    n: int
    N: int
    lambda_n: Tuple[float, float]  # enclosure of lambda_{n_k}
    lambda_N_hi: float
    lambda_hat_N: float
    rho: float
    Ch: Optional[float]
    zeta_hat_to_K: List[float] = dataclasses.field(default_factory=list)  # against clusters 1..k-1
    eps_hat_to_K: List[float] = dataclasses.field(default_factory=list)
    tau_k: Optional[float] = None
    Delta_thm1: Optional[float] = None
    delta_thm2: Optional[float] = None
    delta_eq27: Optional[float] = None
    Delta_bound: Optional[float] = None
    delta_bound: Optional[float] = None
    Delta_tilde: Optional[float] = None
    gap_violated: bool = False
    separation_violated: bool = False
    history: List[Tuple[str, float]] = dataclasses.field(default_factory=list)

    @property
    def size(self) -> int:
        return self.N - self.n + 1

    @property
    def certified(self) -> bool:
        return not self.gap_violated and self.Delta_bound is not None

    def record(self, name: str, value: float):
        self.history.append((name, value))

    def usable_bounds(self) -> Tuple[float, float]:
        """(Delta_k, delta_k) to feed later clusters; the trivial bound 1 when this cluster has none."""
        if self.gap_violated:
            return 1.0, 1.0
        if self.Delta_bound is None or self.delta_bound is None:
            raise OrderingError(f'cluster {self.k} has not been certified yet')
        return self.Delta_bound, self.delta_bound


def _optimal_l2(state: ClusterBoundState, Delta: float) -> float:
    return bound_l2_optimal(state.lambda_N_hi, state.Ch, state.tau_k, state.size, Delta)


def _energy_from_l2(state: ClusterBoundState, delta: float, incumbent: float) -> float:
    return bound_energy_from_l2(state.lambda_n[0], state.lambda_N_hi, state.lambda_hat_N, delta, incumbent)


def iterate_improvement(state: ClusterBoundState, n_iter: int = settings.DEFAULT_ITERATIONS) -> ClusterBoundState:
    """Alternates the optimal L2 bound and the energy-from-L2 bound, keeping the best value of each."""
    if state.gap_violated:
        return state
    if state.Delta_bound is None or state.delta_bound is None:
        raise OrderingError(f'cluster {state.k} needs initial bounds before iterating')

    if state.tau_k is not None and not state.separation_violated:
        for _ in range(n_iter):
            state.delta_bound = min(state.delta_bound, _optimal_l2(state, state.Delta_bound))
            state.record('delta_eq27', state.delta_bound)
            state.Delta_bound = _energy_from_l2(state, state.delta_bound, state.Delta_bound)
            state.record('Delta_from_l2', state.Delta_bound)

    state.Delta_tilde = bound_energy_tilde(state.lambda_n[0], state.lambda_N_hi, state.lambda_hat_N, state.delta_bound)
    return state


def _overlap(a: SubspaceBasis, b: SubspaceBasis, op, mode: EpsilonMode) -> float:
    """sqrt of the non-orthogonality measure between two approximate cluster spaces."""
    if mode == EpsilonMode.GERSHGORIN:
        a, b = normalized(a, op), normalized(b, op)
        return float(np.sqrt(epsilon_hat_sq_upper(*gershgorin_etas(gram_triple(a, b, op)))))
    return float(np.sqrt(epsilon_hat_sq(gram_triple(a, b, op))))


def certify_cluster(k: int, spectrum: Spectrum, system: AssembledSystem, clusters: ClusterSpec,
                    enclosure: EigenEnclosure, Ch: Optional[float], previous: List[ClusterBoundState],
                    mode: EpsilonMode = EpsilonMode.EXACT, n_iter: int = settings.DEFAULT_ITERATIONS,
                    strict_tau_window: bool = True) -> ClusterBoundState:
    if len(previous) != k - 1:
        raise OrderingError(f'cluster {k} needs bounds for clusters 1..{k - 1}, got {len(previous)}')
    n, N = clusters.boundaries[k - 1]
    state = ClusterBoundState(
        k=k, n=n, N=N,
        lambda_n=(enclosure.lo(n), enclosure.hi(n)),
        lambda_N_hi=enclosure.hi(N),
        lambda_hat_N=cluster_rayleigh_max(spectrum, system, (n, N)),
        rho=enclosure.rho_for(N),
        Ch=Ch,
    )

    target_vectors = spectrum.cluster_vectors(n, N)
    energy_prior, l2_prior = [], []
    for p in previous:
        vectors = spectrum.cluster_vectors(p.n, p.N)
        zeta = _overlap(SubspaceBasis(vectors, InnerProduct.ENERGY), SubspaceBasis(target_vectors, InnerProduct.ENERGY),
                        system.K, mode)
        eps = _overlap(SubspaceBasis(vectors, InnerProduct.L2), SubspaceBasis(target_vectors, InnerProduct.L2),
                       system.M, mode)
        state.zeta_hat_to_K.append(zeta)
        state.eps_hat_to_K.append(eps)
        Delta_k, delta_k = p.usable_bounds()
        energy_prior.append(PriorCluster(p.lambda_n[0], zeta, Delta_k))
        l2_prior.append(PriorCluster(p.lambda_n[0], eps, delta_k))

    try:
        state.Delta_thm1 = bound_energy_cluster(state.lambda_n, state.lambda_hat_N, state.rho, energy_prior)
        state.delta_thm2 = bound_l2_cluster(state.lambda_n, state.lambda_hat_N, state.rho, l2_prior)
    except ClusterGapViolatedError as e:
        logger.warning(f'Cluster {k} ({n}..{N}) is gap-violated: {e}')
        state.gap_violated = True
        return state
    state.record('Delta_thm1', state.Delta_thm1)
    state.record('delta_thm2', state.delta_thm2)
    state.Delta_bound = state.Delta_thm1
    state.delta_bound = state.delta_thm2

    try:
        enclosures = [(enclosure.lo(j), enclosure.hi(j)) for j in clusters.indices(k)]
        state.tau_k = compute_tau_k(enclosures, spectrum.eigenvalues, (n, N), strict_tau_window).tau
    except SeparationViolatedError as e:
        logger.warning(f'Cluster {k} ({n}..{N}) skips the optimal L2 bound: {e}')
        state.separation_violated = True
    else:
        state.delta_eq27 = _optimal_l2(state, state.Delta_bound)
        state.delta_bound = min(state.delta_thm2, state.delta_eq27)
        state.record('delta_eq27', state.delta_bound)

    iterate_improvement(state, n_iter)
    logger.info(f'Cluster {k} ({n}..{N}): Delta {state.Delta_thm1:.4e} -> {state.Delta_bound:.4e}, '
                f'delta {state.delta_thm2:.4e} -> {state.delta_bound:.4e}')
    return state


def certify_all_clusters(spectrum: Spectrum, system: AssembledSystem, clusters: ClusterSpec,
                         enclosure: EigenEnclosure, Ch: Optional[float],
                         mode: EpsilonMode = EpsilonMode.EXACT, n_iter: int = settings.DEFAULT_ITERATIONS,
                         strict_tau_window: bool = True) -> List[ClusterBoundState]:
    """Certifies clusters 1..K in order, each using the final bounds of the clusters before it."""
    states = []
    for k in range(1, clusters.K + 1):
        try:
            states.append(certify_cluster(k, spectrum, system, clusters, enclosure, Ch, states, mode, n_iter,
                                          strict_tau_window))
        except EigenCertError as e:
            e.cluster = k
            raise
    return states
