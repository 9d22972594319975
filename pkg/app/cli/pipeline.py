import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import ArpackError

import settings
from app.certify.cluster_certifier import ClusterBoundState, certify_all_clusters
from app.cli.config import EXACT_SQUARE_SOURCE, FORMULA_CH_SOURCE, RunConfig
from app.cli.report import CertifiedReport, ReportRow
from app.errors import ConfigurationError, EigenCertError, PipelineError, TauWindowError
from app.fem.assembly import AssembledSystem, ElementKind, assemble
from app.fem.constants import compute_Ch, read_ch_table
from app.mesh.refinement import refine_times
from app.mesh.triangulation import DomainKind, Triangulation, generate_mesh
from app.oracle.square import exact_directed_distance_square, exact_spectrum_square
from app.spectra.clusters import EigenEnclosure, exact_enclosure, read_enclosure_file
from app.spectra.eigensolver import Spectrum, solve_generalized

logger = logging.getLogger(__name__)

# solver failures raised by numpy and scipy themselves
LIBRARY_ERRORS = (np.linalg.LinAlgError, ArpackError)


@dataclasses.dataclass
class LevelResult:
    level: int
    mesh: Triangulation
    system: AssembledSystem
    spectrum: Spectrum
    states: List[ClusterBoundState]
    exact: Dict[int, Tuple[float, float]]
    wall_time: float


def build_mesh(config: RunConfig, level: int) -> Triangulation:
    """Square levels are subdivisions per side; other domains refine their initial mesh `level` times."""
    if config.domain == DomainKind.UNIT_SQUARE:
        return generate_mesh(config.domain_spec, level)
    return refine_times(generate_mesh(config.domain_spec), level)


def build_system(config: RunConfig, mesh: Triangulation, ch_table: Optional[Dict[int, float]]) -> AssembledSystem:
    system = assemble(mesh, config.element)
    return system.with_Ch(compute_Ch(mesh, config.domain_spec, ch_table))


def eigenpair_count(config: RunConfig, system: AssembledSystem, extra: int = settings.TAU_WINDOW_EXTRA) -> int:
    return min(config.cluster_spec.last_index + extra, system.size)


class Pipeline:
    def __init__(self, config: RunConfig, threads: Optional[int] = None):
        self.config = config
        self.threads = max(1, threads or settings.EIGENCERT_THREADS)
        self.ch_table = None if config.ch_source in (None, FORMULA_CH_SOURCE) else read_ch_table(config.ch_source)
        self.enclosure = self._load_enclosure()

    def _load_enclosure(self) -> EigenEnclosure:
        needed = self.config.cluster_spec.last_index
        if self.config.enclosure_source == EXACT_SQUARE_SOURCE:
            modes = exact_spectrum_square(needed + 2 * settings.TAU_WINDOW_EXTRA + 1)
            return exact_enclosure([m.eigenvalue for m in modes])
        enclosure = read_enclosure_file(self.config.enclosure_source)
        if not enclosure.covers(needed):
            raise ConfigurationError(f'{self.config.enclosure_source} does not cover eigenvalues 1..{needed}')
        return enclosure

    def _certify(self, system: AssembledSystem, spectrum: Spectrum, strict: bool) -> List[ClusterBoundState]:
        return certify_all_clusters(spectrum, system, self.config.cluster_spec, self.enclosure, system.Ch,
                                    self.config.mode, self.config.iterations, strict)

    def run_level(self, level: int) -> LevelResult:
        start = time.monotonic()
        mesh = build_mesh(self.config, level)
        system = build_system(self.config, mesh, self.ch_table)
        spectrum = solve_generalized(system, eigenpair_count(self.config, system))
        try:
            states = self._certify(system, spectrum, strict=True)
        except TauWindowError as e:
            logger.warning(f'Level {level}: {e}; widening the eigenpair window')
            spectrum = solve_generalized(system, eigenpair_count(self.config, system, 3 * settings.TAU_WINDOW_EXTRA))
            states = self._certify(system, spectrum, strict=False)

        exact = {}
        if self.config.has_oracle:
            for state in states:
                exact[state.k] = exact_directed_distance_square((state.n, state.N), spectrum, mesh, system)
        wall_time = time.monotonic() - start
        logger.info(f'Level {level} done in {wall_time:.2f}s ({system.size} DOFs, solver {spectrum.solver})')
        return LevelResult(level, mesh, system, spectrum, states, exact, wall_time)

    def _guarded_level(self, level: int) -> LevelResult:
        try:
            return self.run_level(level)
        except (EigenCertError, *LIBRARY_ERRORS) as e:
            logger.exception(f'Level {level} failed')
            raise PipelineError(e, level, getattr(e, 'cluster', None)) from e

    def run(self) -> CertifiedReport:
        if self.config.element != ElementKind.P1:
            raise ConfigurationError('certification needs conforming p1 elements')
        levels = self.config.refinement_levels
        with ThreadPoolExecutor(max_workers=min(self.threads, len(levels))) as executor:
            results = list(executor.map(self._guarded_level, levels))

        rows = []
        for result in results:
            for state in result.states:
                rows.append(ReportRow.from_state(result.level, result.mesh.h, state, result.exact.get(state.k),
                                                 result.wall_time))
        return CertifiedReport(rows=rows)


def run(config: RunConfig, threads: Optional[int] = None) -> CertifiedReport:
    return Pipeline(config, threads).run()
