import logging
import os
from typing import List, Optional

import pandas as pd

from app.cli.command_storage import CommandStorage
from app.cli.config import load_config
from app.cli.pipeline import LIBRARY_ERRORS, Pipeline, build_mesh, build_system, eigenpair_count
from app.cli.report import SLOPE_COLUMNS, emit_csv, emit_json, read_csv, slope_table, to_frame
from app.errors import EigenCertError
from app.fem.assembly import ElementKind
from app.mesh.mesh_io import write_mesh
from app.spectra.clusters import crude_lower_bounds_cr
from app.spectra.eigensolver import solve_generalized

logger = logging.getLogger(__name__)

commands = CommandStorage()


def _write_frame(frame: pd.DataFrame, out: Optional[str]):
    if out:
        frame.to_csv(out, index=False, lineterminator='\n')
        logger.info(f'Wrote {out}')
    else:
        print(frame.to_string(index=False))


@commands.register
def mesh(config: str, out: str = 'meshes') -> int:
    """
    Write the mesh of every configured level in the text mesh format.

    :param config: run configuration file
    :param out: output directory
    """
    run_config = load_config(config)
    os.makedirs(out, exist_ok=True)
    for level in run_config.refinement_levels:
        t = build_mesh(run_config, level)
        path = os.path.join(out, f'{run_config.domain.value}_{level}.msh')
        write_mesh(t, path)
        logger.info(f'Level {level}: {t.num_vertices} vertices, {t.num_triangles} triangles -> {path}')
    return 0


@commands.register
def solve(config: str, out: Optional[str] = None, count: Optional[int] = None) -> int:
    """
    Compute discrete eigenvalues per level; Crouzeix-Raviart runs add crude lower bounds.

    :param config: run configuration file
    :param out: CSV file, printed when omitted
    :param count: number of eigenpairs, defaults to the clusters plus the separation window
    """
    run_config = load_config(config)
    pipeline = Pipeline(run_config)
    records = []
    for level in run_config.refinement_levels:
        t = build_mesh(run_config, level)
        system = build_system(run_config, t, pipeline.ch_table)
        spectrum = solve_generalized(system, min(count, system.size) if count else eigenpair_count(run_config, system))
        lower = crude_lower_bounds_cr(spectrum, system.Ch) if run_config.element == ElementKind.CR else None
        for i, value in enumerate(spectrum.eigenvalues):
            record = {'level': level, 'h': t.h, 'index': i + 1, 'eigenvalue': value}
            if lower is not None:
                record['crude_lower'] = lower[i]
            records.append(record)
    _write_frame(pd.DataFrame(records), out)
    return 0


@commands.register
def certify(config: str, out: str = 'report.csv', gershgorin: bool = False, iterations: Optional[int] = None) -> int:
    """
    Certify directed distance bounds for every level and cluster.

    :param config: run configuration file
    :param out: report path, JSON when it ends in .json and CSV otherwise
    :param gershgorin: use the Gershgorin estimate for the non-orthogonality measures
    :param iterations: number of improvement iterations, overrides the configuration
    """
    run_config = load_config(config).with_overrides(iterations, gershgorin)
    report = Pipeline(run_config).run()
    os.makedirs(os.path.dirname(out) or '.', exist_ok=True)
    if out.endswith('.json'):
        emit_json(report, out)
    else:
        emit_csv(report, out)
    print(to_frame(report).to_string(index=False))
    return 0


@commands.register
def report(csv: str, out: Optional[str] = None) -> int:
    """
    Print a certification report or convert it to JSON or CSV.

    :param csv: report CSV written by certify
    :param out: output path, JSON when it ends in .json
    """
    certified = read_csv(csv)
    if out and out.endswith('.json'):
        emit_json(certified, out)
    elif out:
        emit_csv(certified, out)
    else:
        print(to_frame(certified).to_string(index=False))
    return 0


@commands.register
def slopes(csv: str, columns: Optional[str] = None) -> int:
    """
    Print log-log convergence rates against h per cluster.

    :param csv: report CSV written by certify
    :param columns: comma separated report columns
    """
    names = [c.strip() for c in columns.split(',')] if columns else SLOPE_COLUMNS
    print(slope_table(read_csv(csv), names).to_string(float_format=lambda v: f'{v:.3f}'))
    return 0


class EigenCertCli:
    def __init__(self, storage: CommandStorage = commands):
        self.storage = storage
        self.parser = storage.build_parser(prog='eigencert', description='Guaranteed eigenspace error bounds')

    def run(self, argv: List[str]) -> int:
        arguments = self.parser.parse_args(argv)
        try:
            return self.storage.run_command(arguments.command, arguments)
        except (EigenCertError, *LIBRARY_ERRORS) as e:
            logger.error(f'{arguments.command} failed: {e}')
            return 1
