import logging
from typing import Dict, Optional

import settings
from app.errors import ConfigurationError, MissingConstantError
from app.mesh.triangulation import DomainKind, DomainSpec, Triangulation

logger = logging.getLogger(__name__)


def read_ch_table(path: str) -> Dict[int, float]:
    """Reads `level value` lines; blank lines and `#` comments are skipped."""
    table = {}
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigurationError(f'cannot read C_h table {path}: {e}')

    for line_number, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            level, value = int(fields[0]), float(fields[1])
        except (IndexError, ValueError):
            raise ConfigurationError(f'{path}:{line_number}: expected `level value`')
        if len(fields) != 2 or value <= 0:
            raise ConfigurationError(f'{path}:{line_number}: expected `level value` with a positive value')
        table[level] = value
    return table


def compute_Ch(t: Triangulation, domain: DomainSpec, table: Optional[Dict[int, float]] = None) -> float:
    """
    A priori constant C_h with |grad(u - P_h u)| <= C_h |f| for the Dirichlet Poisson problem.

    On uniform right-triangle meshes of the unit square it is 0.493 h (h = leg length);
    square meshes are built per n rather than refined, so a level table cannot apply there.
    Elsewhere it is looked up by refinement level and a missing level is an error.
    """
    if domain.kind == DomainKind.UNIT_SQUARE:
        if table is not None:
            raise ConfigurationError('unit square meshes use C_h = 0.493 h, a refinement level table does not apply')
        return settings.SQUARE_CH_FACTOR * t.h
    if table is not None:
        if t.level not in table:
            raise MissingConstantError(f'no C_h value for refinement level {t.level} (table has {sorted(table)})')
        return table[t.level]
    raise MissingConstantError(f'C_h for a {domain.kind.value} domain needs a lookup table')
