import dataclasses
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import ConfigurationError, InvalidArgumentError
from app.spectra.eigensolver import Spectrum

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ClusterSpec:
    boundaries: Tuple[Tuple[int, int], ...]  # (n_k, N_k), 1-based, inclusive

    def __post_init__(self):
        if not self.boundaries:
            raise InvalidArgumentError('at least one cluster is required')
        expected_start = 1
        for n, N in self.boundaries:
            if n != expected_start or N < n:
                raise InvalidArgumentError(f'clusters must be contiguous from 1, got {self.describe()}')
            expected_start = N + 1

    @classmethod
    def parse(cls, text: str) -> 'ClusterSpec':
        """Parses `1-1, 2-3, 4-4` (single indices like `4` are allowed)."""
        boundaries = []
        for item in text.replace(';', ',').split(','):
            item = item.strip()
            if not item:
                continue
            try:
                if '-' in item:
                    n, N = (int(v) for v in item.split('-', 1))
                else:
                    n = N = int(item)
            except ValueError:
                raise InvalidArgumentError(f'bad cluster range {item!r}')
            boundaries.append((n, N))
        return cls(tuple(boundaries))

    @property
    def K(self) -> int:
        return len(self.boundaries)

    @property
    def last_index(self) -> int:
        return self.boundaries[-1][1]

    def indices(self, k: int) -> List[int]:
        n, N = self.boundaries[k - 1]
        return list(range(n, N + 1))

    def describe(self) -> str:
        return ', '.join(f'{n}-{N}' for n, N in self.boundaries)


@dataclasses.dataclass(frozen=True)
class EigenEnclosure:
    bounds: Dict[int, Tuple[float, float]]  # index -> (lambda_lo, lambda_hi)
    rho_lo: Optional[float] = None  # verified lower bound of the eigenvalue after the last cluster
    source: str = 'file'

    def __post_init__(self):
        previous_lo = -np.inf
        for i in sorted(self.bounds):
            lo, hi = self.bounds[i]
            if not lo <= hi:
                raise InvalidArgumentError(f'enclosure {i}: lower bound {lo} exceeds upper bound {hi}')
            if lo < previous_lo:
                raise InvalidArgumentError(f'enclosure lower bounds decrease at index {i}')
            previous_lo = lo

    def _get(self, i: int) -> Tuple[float, float]:
        if i not in self.bounds:
            raise ConfigurationError(f'no eigenvalue enclosure for index {i}')
        return self.bounds[i]

    def lo(self, i: int) -> float:
        return self._get(i)[0]

    def hi(self, i: int) -> float:
        return self._get(i)[1]

    def covers(self, last_index: int) -> bool:
        return all(i in self.bounds for i in range(1, last_index + 1))

    def rho_for(self, N: int) -> float:
        """Lower bound of lambda_{N+1}: the table entry when present, the rho line otherwise."""
        if N + 1 in self.bounds:
            return self.bounds[N + 1][0]
        if self.rho_lo is None:
            raise ConfigurationError(f'no verified lower bound for eigenvalue {N + 1} (rho)')
        return self.rho_lo


def exact_enclosure(eigenvalues: Sequence[float], source: str = 'exact_square') -> EigenEnclosure:
    """Degenerate enclosures [lambda, lambda] for analytically known eigenvalues."""
    return EigenEnclosure({i + 1: (float(v), float(v)) for i, v in enumerate(eigenvalues)}, source=source)


def read_enclosure_file(path: str) -> EigenEnclosure:
    """Reads lines `i lambda_lo lambda_hi` and an optional final `rho rho_lo`."""
    bounds = {}
    rho_lo = None
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigurationError(f'cannot read enclosure file {path}: {e}')

    for line_number, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == 'rho' and len(fields) == 2:
                rho_lo = float(fields[1])
            elif len(fields) == 3:
                bounds[int(fields[0])] = (float(fields[1]), float(fields[2]))
            else:
                raise ValueError(line)
        except ValueError:
            raise ConfigurationError(f'{path}:{line_number}: expected `i lambda_lo lambda_hi` or `rho value`')
    if not bounds:
        raise ConfigurationError(f'{path}: no enclosures')
    return EigenEnclosure(bounds, rho_lo, source=path)


def crude_lower_bounds_cr(cr_spectrum: Spectrum, Ch: float) -> np.ndarray:
    """Lower eigenvalue bounds lambda / (1 + C_h^2 lambda) from Crouzeix-Raviart eigenvalues."""
    values = np.asarray(cr_spectrum.eigenvalues, dtype=float)
    return values / (1.0 + Ch ** 2 * values)


def check_min_max_dominance(spectrum: Spectrum, enclosure: EigenEnclosure) -> List[int]:
    """Indices i where a conforming eigenvalue falls below the verified lower bound (should be empty)."""
    return [i for i in range(1, spectrum.count + 1)
            if i in enclosure.bounds and spectrum.eigenvalues[i - 1] < enclosure.lo(i)]
