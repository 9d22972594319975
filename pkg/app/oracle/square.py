import dataclasses
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

import settings
from app.errors import InvalidArgumentError, NumericalError
from app.fem.assembly import AssembledSystem
from app.mesh.triangulation import Triangulation
from app.oracle.quadrature import gradient_load_vector, integrate, load_vector
from app.spectra.eigensolver import Spectrum
from app.subspace.distance import directed_distance_from_gram
from app.subspace.gram import GramTriple

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ExactEigenpair:
    """Dirichlet eigenpair of the unit square: u = sin(i pi x) sin(j pi y), lambda = (i^2 + j^2) pi^2."""
    i: int
    j: int

    @property
    def eigenvalue(self) -> float:
        return (self.i ** 2 + self.j ** 2) * np.pi ** 2

    @property
    def l2_norm_sq(self) -> float:
        return 0.25 if self.i > 0 and self.j > 0 else 0.0

    @property
    def energy_norm_sq(self) -> float:
        return self.eigenvalue * self.l2_norm_sq

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sin(self.i * np.pi * x) * np.sin(self.j * np.pi * y)

    def gradient(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ip, jp = self.i * np.pi, self.j * np.pi
        return ip * np.cos(ip * x) * np.sin(jp * y), jp * np.sin(ip * x) * np.cos(jp * y)


def exact_spectrum_square(count: int) -> List[ExactEigenpair]:
    """First `count` eigenpairs by ascending eigenvalue, ties in (i, j) lexicographic order."""
    if count < 1:
        raise InvalidArgumentError(f'count must be >= 1, got {count}')
    modes = [ExactEigenpair(i, j) for i in range(1, count + 1) for j in range(1, count + 1)]
    modes.sort(key=lambda m: (m.i ** 2 + m.j ** 2, m.i, m.j))
    return modes[:count]


@dataclasses.dataclass(frozen=True, eq=False)
class ProjectedMode:
    """Inner products of an exact mode with every P1 hat function, indexed by vertex."""
    pair: ExactEigenpair
    l2: np.ndarray  # (u, phi_m)
    energy: np.ndarray  # (grad u, grad phi_m)


def project_exact_to_mesh(pair: ExactEigenpair, t: Triangulation, order: int = settings.QUADRATURE_ORDER) -> ProjectedMode:
    return ProjectedMode(pair, load_vector(t, pair, order), gradient_load_vector(t, pair.gradient, order))


def quadrature_discrepancy(projected: ProjectedMode, t: Triangulation, order: int) -> float:
    """Largest change of the projected coefficients when the quadrature order is doubled."""
    finer = project_exact_to_mesh(projected.pair, t, 2 * order)
    return float(max(np.abs(finer.l2 - projected.l2).max(), np.abs(finer.energy - projected.energy).max()))


def exact_cluster_grams(modes: Sequence[ExactEigenpair], t: Triangulation, system: AssembledSystem, V: np.ndarray,
                        order: int = settings.QUADRATURE_ORDER) -> Tuple[GramTriple, GramTriple]:
    """
    Function-space Gram triples (energy, L2) between exact modes and the discrete functions in V.

    Exact-exact entries are analytic, mixed entries come from quadrature, audited
    against a rule of twice the order.
    """
    projected = [project_exact_to_mesh(m, t, order) for m in modes]
    for p in projected:
        discrepancy = quadrature_discrepancy(p, t, order)
        if discrepancy > settings.QUADRATURE_AUDIT_TOL:
            raise NumericalError(f'quadrature of order {order} is off by {discrepancy:.3g} '
                                 f'for mode ({p.pair.i}, {p.pair.j})')
    free = system.dof_map
    F_l2 = np.stack([p.l2[free] for p in projected]) @ V
    F_energy = np.stack([p.energy[free] for p in projected]) @ V
    G_l2 = np.diag([m.l2_norm_sq for m in modes])
    G_energy = np.diag([m.energy_norm_sq for m in modes])
    H_l2 = V.T @ (system.M @ V)
    H_energy = V.T @ (system.K @ V)
    return (GramTriple(F_energy, G_energy, (H_energy + H_energy.T) / 2),
            GramTriple(F_l2, G_l2, (H_l2 + H_l2.T) / 2))


def exact_directed_distance_square(cluster: Tuple[int, int], spectrum: Spectrum, t: Triangulation,
                                   system: AssembledSystem, order: int = settings.QUADRATURE_ORDER) -> Tuple[float, float]:
    """(Delta_exact, delta_exact): directed distances from the exact eigenspace to the discrete cluster space."""
    n, N = cluster
    modes = exact_spectrum_square(N)[n - 1:N]
    energy, l2 = exact_cluster_grams(modes, t, system, spectrum.cluster_vectors(n, N), order)
    return directed_distance_from_gram(energy), directed_distance_from_gram(l2)


def parseval_check(v: Callable[[np.ndarray, np.ndarray], np.ndarray], modes: Sequence[ExactEigenpair],
                   t: Triangulation,
                   grad: Optional[Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
                   order: int = settings.QUADRATURE_ORDER) -> np.ndarray:
    """
    Bessel residuals |v|^2 - sum_{i <= m} (v, u_i)^2 / |u_i|^2 for m = 1..len(modes).

    With `grad` the energy analogue is evaluated instead. Integrals use quadrature on t.
    """
    if grad is None:
        norm_sq = integrate(t, lambda x, y: v(x, y) ** 2, order)
        coefficients = [integrate(t, lambda x, y, m=m: v(x, y) * m(x, y), order) ** 2 / m.l2_norm_sq for m in modes]
    else:
        def energy_density(x, y):
            gx, gy = grad(x, y)
            return gx ** 2 + gy ** 2

        def cross(x, y, m):
            gx, gy = grad(x, y)
            mx, my = m.gradient(x, y)
            return gx * mx + gy * my

        norm_sq = integrate(t, energy_density, order)
        coefficients = [integrate(t, lambda x, y, m=m: cross(x, y, m), order) ** 2 / m.energy_norm_sq for m in modes]
    return norm_sq - np.cumsum(coefficients)
