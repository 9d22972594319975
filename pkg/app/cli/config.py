import configparser
import logging
import os
from typing import List, Optional, Tuple

from pydantic import BaseModel, ValidationError, validator

import settings
from app.certify.cluster_certifier import EpsilonMode
from app.errors import ConfigurationError, InvalidArgumentError
from app.fem.assembly import ElementKind
from app.mesh.triangulation import DomainKind, DomainSpec
from app.spectra.clusters import ClusterSpec

logger = logging.getLogger(__name__)

EXACT_SQUARE_SOURCE = 'exact_square'
FORMULA_CH_SOURCE = 'formula_0493h'


class RunConfig(BaseModel):
    domain: DomainKind
    polygon: Optional[List[Tuple[float, float]]] = None
    element: ElementKind = ElementKind.P1
    refinement_levels: List[int]
    clusters: List[Tuple[int, int]]
    enclosure_source: Optional[str] = None
    ch_source: Optional[str] = None
    iterations: int = settings.DEFAULT_ITERATIONS
    mode: EpsilonMode = EpsilonMode.EXACT

    @validator('refinement_levels')
    def levels_ascending(cls, levels):
        if not levels:
            raise ValueError('at least one refinement level is required')
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f'levels must be strictly ascending, got {levels}')
        if levels[0] < 0:
            raise ValueError('levels must be non-negative')
        return levels

    @validator('clusters')
    def clusters_contiguous(cls, clusters):
        try:
            ClusterSpec(tuple(clusters))
        except InvalidArgumentError as e:
            raise ValueError(str(e))
        return clusters

    @validator('iterations')
    def iterations_non_negative(cls, iterations):
        if iterations < 0:
            raise ValueError('iterations must be >= 0')
        return iterations

    @validator('polygon', always=True)
    def polygon_for_polygon_domain(cls, polygon, values):
        if values.get('domain') == DomainKind.POLYGON and not polygon:
            raise ValueError('a polygon domain needs `polygon` vertices')
        return polygon

    @validator('enclosure_source', always=True)
    def enclosure_required(cls, source, values):
        if source is None and values.get('domain') == DomainKind.UNIT_SQUARE:
            return EXACT_SQUARE_SOURCE
        if source is None:
            raise ValueError('missing field `enclosure` in [sources]')
        if source == EXACT_SQUARE_SOURCE and values.get('domain') != DomainKind.UNIT_SQUARE:
            raise ValueError('exact enclosures exist only for the unit square')
        return source

    @validator('ch_source', always=True)
    def ch_required(cls, source, values):
        if source is None and values.get('domain') == DomainKind.UNIT_SQUARE:
            return FORMULA_CH_SOURCE
        if source is None:
            raise ValueError('missing field `ch` in [sources]')
        if source == FORMULA_CH_SOURCE and values.get('domain') != DomainKind.UNIT_SQUARE:
            raise ValueError('the 0.493h formula holds only for the unit square')
        if source != FORMULA_CH_SOURCE and values.get('domain') == DomainKind.UNIT_SQUARE:
            raise ValueError('unit square runs use `ch = formula_0493h`, level tables do not follow n')
        return source

    @property
    def domain_spec(self) -> DomainSpec:
        return DomainSpec(self.domain, tuple(self.polygon) if self.polygon else None)

    @property
    def cluster_spec(self) -> ClusterSpec:
        return ClusterSpec(tuple(self.clusters))

    @property
    def has_oracle(self) -> bool:
        return self.domain == DomainKind.UNIT_SQUARE

    def with_overrides(self, iterations: Optional[int] = None, gershgorin: bool = False) -> 'RunConfig':
        update = {}
        if iterations is not None:
            if iterations < 0:
                raise ConfigurationError('iterations must be >= 0')
            update['iterations'] = iterations
        if gershgorin:
            update['mode'] = EpsilonMode.GERSHGORIN
        return self.copy(update=update)


def _parse_list(text: str) -> List[str]:
    return [item.strip() for item in text.replace(';', ',').split(',') if item.strip()]


def _resolve(path: Optional[str], base_dir: str) -> Optional[str]:
    if path is None or path in (EXACT_SQUARE_SOURCE, FORMULA_CH_SOURCE) or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def parse_config(text: str, base_dir: str = '.') -> RunConfig:
    """
    Parses the INI run configuration:

        [run]       domain, element, levels, iterations, mode, polygon
        [clusters]  ranges = 1-1, 2-3, ...
        [sources]   enclosure = exact_square | path, ch = formula_0493h | path
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f'malformed configuration: {e}')

    for section in ('run', 'clusters'):
        if not parser.has_section(section):
            raise ConfigurationError(f'missing section [{section}]')
    run = parser['run']
    sources = parser['sources'] if parser.has_section('sources') else {}

    raw = {
        'domain': run.get('domain'),
        'element': run.get('element', ElementKind.P1.value),
        'refinement_levels': _parse_list(run.get('levels', '')),
        'clusters': [],
        'enclosure_source': _resolve(sources.get('enclosure'), base_dir),
        'ch_source': _resolve(sources.get('ch'), base_dir),
        'iterations': run.get('iterations', settings.DEFAULT_ITERATIONS),
        'mode': run.get('mode', EpsilonMode.EXACT.value),
    }
    if 'polygon' in run:
        raw['polygon'] = [tuple(float(v) for v in point.split()) for point in _parse_list(run['polygon'])]
    try:
        raw['clusters'] = list(ClusterSpec.parse(parser['clusters'].get('ranges', '')).boundaries)
    except InvalidArgumentError as e:
        raise ConfigurationError(f'[clusters] {e}')

    try:
        config = RunConfig.parse_obj(raw)
    except ValidationError as e:
        raise ConfigurationError(f'invalid configuration: {e}')

    for source in (config.enclosure_source, config.ch_source):
        if source not in (EXACT_SQUARE_SOURCE, FORMULA_CH_SOURCE) and not os.path.exists(source):
            raise ConfigurationError(f'referenced file does not exist: {source}')
    return config


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f'cannot read configuration {path}: {e}')
    logger.info(f'Loaded configuration {path}')
    return parse_config(text, os.path.dirname(os.path.abspath(path)))
