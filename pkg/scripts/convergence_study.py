import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.cli.config import load_config  # noqa: E402
from app.cli.pipeline import run  # noqa: E402
from app.cli.report import SLOPE_COLUMNS, emit_csv, slope_table  # noqa: E402

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


def pairwise_rates(report, column: str) -> pd.DataFrame:
    """Rates between consecutive levels, log(e_i / e_{i-1}) / log(h_i / h_{i-1})."""
    frame = pd.DataFrame([{'cluster': r.cluster, 'h': r.h, column: r.value(column)} for r in report.rows])
    tables = {}
    for cluster, group in frame.groupby('cluster'):
        group = group.sort_values('h', ascending=False)
        values = group[column].astype(float).to_numpy()
        h = group['h'].to_numpy()
        rates = [np.nan] + [np.log(values[i] / values[i - 1]) / np.log(h[i] / h[i - 1]) for i in range(1, len(h))]
        tables[cluster] = pd.Series(rates, index=1 / h)
    result = pd.DataFrame(tables)
    result.index.name = '1/h'
    return result


def main():
    parser = argparse.ArgumentParser(description='Run a configuration and print convergence rates of every bound')
    parser.add_argument('config', type=str, help='Path to the run configuration')
    parser.add_argument('--out', type=str, default=None, help='Optional report CSV')
    args = parser.parse_args()

    report = run(load_config(args.config))
    if args.out:
        emit_csv(report, args.out)

    print('Least-squares rates per cluster:')
    print(slope_table(report).to_string(float_format=lambda v: f'{v:.3f}'))
    for column in SLOPE_COLUMNS:
        print(f'\nPairwise rates of {column}:')
        print(pairwise_rates(report, column).to_string(float_format=lambda v: f'{v:.3f}'))


if __name__ == '__main__':
    main()
