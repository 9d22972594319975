import json
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

import settings
from app.certify.cluster_certifier import ClusterBoundState
from app.errors import ConfigurationError, InsufficientDataError, InvalidArgumentError

logger = logging.getLogger(__name__)

COLUMNS = ['level', 'h', 'cluster', 'Ch', 'rho', 'lambda_hat', 'Delta_thm1', 'delta_thm2', 'delta_eq27',
           'Delta_final', 'delta_final', 'Delta_tilde', 'Delta_exact', 'delta_exact']
BOUND_COLUMNS = ['Delta_thm1', 'delta_thm2', 'delta_eq27', 'Delta_final', 'delta_final', 'Delta_tilde']
SLOPE_COLUMNS = ['Delta_thm1', 'delta_thm2', 'delta_eq27', 'Delta_final', 'delta_final', 'Delta_exact', 'delta_exact']


class ReportRow(BaseModel):
    level: int
    h: float
    cluster: int
    Ch: Optional[float] = None
    rho: Optional[float] = None
    lambda_hat: Optional[float] = None
    Delta_thm1: Optional[float] = None
    delta_thm2: Optional[float] = None
    delta_eq27: Optional[float] = None
    Delta_final: Optional[float] = None
    delta_final: Optional[float] = None
    Delta_tilde: Optional[float] = None
    Delta_exact: Optional[float] = None
    delta_exact: Optional[float] = None
    gap_violated: bool = False
    separation_violated: bool = False
    wall_time: Optional[float] = None
    history: List[tuple] = []

    @classmethod
    def from_state(cls, level: int, h: float, state: ClusterBoundState,
                   exact: Optional[tuple] = None, wall_time: Optional[float] = None) -> 'ReportRow':
        Delta_exact, delta_exact = exact if exact is not None else (None, None)
        return cls(
            level=level, h=h, cluster=state.k, Ch=state.Ch, rho=state.rho, lambda_hat=state.lambda_hat_N,
            Delta_thm1=state.Delta_thm1, delta_thm2=state.delta_thm2, delta_eq27=state.delta_eq27,
            Delta_final=state.Delta_bound, delta_final=state.delta_bound, Delta_tilde=state.Delta_tilde,
            Delta_exact=Delta_exact, delta_exact=delta_exact,
            gap_violated=state.gap_violated, separation_violated=state.separation_violated,
            wall_time=wall_time, history=list(state.history),
        )

    def marker_for(self, column: str) -> Optional[str]:
        if self.gap_violated and column in BOUND_COLUMNS:
            return settings.GAP_VIOLATED_MARKER
        if self.separation_violated and column == 'delta_eq27':
            return settings.GAP_VIOLATED_MARKER
        return None

    def value(self, column: str) -> Optional[float]:
        """Numeric value of a column, None when it is empty or carries the marker."""
        if self.marker_for(column):
            return None
        return getattr(self, column)


class CertifiedReport(BaseModel):
    rows: List[ReportRow] = []

    def clusters(self) -> List[int]:
        return sorted({row.cluster for row in self.rows})


def _format_number(value, digits: int = settings.REPORT_SIGNIFICANT_DIGITS) -> str:
    if value is None:
        return ''
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(value)
    return f'{float(value):.{digits}g}'


def _cell(row: ReportRow, column: str) -> str:
    return row.marker_for(column) or _format_number(getattr(row, column))


def to_frame(report: CertifiedReport) -> pd.DataFrame:
    return pd.DataFrame([[_cell(row, c) for c in COLUMNS] for row in report.rows], columns=COLUMNS)


def emit_csv(report: CertifiedReport, path: str):
    try:
        to_frame(report).to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise ConfigurationError(f'cannot write report {path}: {e}')
    logger.info(f'Wrote {len(report.rows)} report rows to {path}')


def _json_value(row: ReportRow, column: str):
    marker = row.marker_for(column)
    if marker:
        return marker
    value = getattr(row, column)
    if value is None or isinstance(value, int):
        return value
    return float(_format_number(value))


def emit_json(report: CertifiedReport, path: str):
    document = {
        'columns': COLUMNS,
        'rows': [{c: _json_value(row, c) for c in COLUMNS} for row in report.rows],
    }
    try:
        with open(path, 'w') as f:
            json.dump(document, f, indent=2)
            f.write('\n')
    except OSError as e:
        raise ConfigurationError(f'cannot write report {path}: {e}')


def _parse_cell(text: str, column: str) -> Dict[str, object]:
    if text == '':
        return {}
    if text == settings.GAP_VIOLATED_MARKER:
        return {'gap_violated': True} if column != 'delta_eq27' else {'separation_violated': True}
    return {column: int(text) if column in ('level', 'cluster') else float(text)}


def read_csv(path: str) -> CertifiedReport:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError) as e:
        raise ConfigurationError(f'cannot read report {path}: {e}')
    if list(frame.columns) != COLUMNS:
        raise ConfigurationError(f'{path} does not have the report columns')

    rows = []
    for record in frame.to_dict('records'):
        fields = {}
        for column in COLUMNS:
            fields.update(_parse_cell(record[column], column))
        rows.append(ReportRow(**fields))
    return CertifiedReport(rows=rows)


def slope(report: CertifiedReport, column: str, cluster: int) -> float:
    """Least-squares slope of log(value) against log(h); marker, empty and non-positive values are skipped."""
    if column not in COLUMNS:
        raise InvalidArgumentError(f'unknown report column {column!r}')
    points = [(row.h, row.value(column)) for row in report.rows if row.cluster == cluster]
    points = [(h, v) for h, v in points if v is not None and v > 0]
    if len(points) < 3:
        raise InsufficientDataError(f'{column} for cluster {cluster} has {len(points)} usable rows, need 3')
    h, values = np.array(points).T
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])


def slope_table(report: CertifiedReport, columns: Sequence[str] = SLOPE_COLUMNS) -> pd.DataFrame:
    """Fitted rates per cluster and column; NaN where there is not enough data."""
    table = {}
    for column in columns:
        rates = []
        for cluster in report.clusters():
            try:
                rates.append(slope(report, column, cluster))
            except InsufficientDataError:
                rates.append(np.nan)
        table[column] = rates
    return pd.DataFrame(table, index=pd.Index(report.clusters(), name='cluster'))
