import json
import os

import numpy as np
import pytest
from scipy.sparse.linalg import ArpackNoConvergence

import settings
from app.cli.config import EXACT_SQUARE_SOURCE, FORMULA_CH_SOURCE, load_config, parse_config
from app.cli.eigencert_cli import EigenCertCli, commands
from app.cli.pipeline import run
from app.cli.report import (COLUMNS, CertifiedReport, ReportRow, emit_csv, emit_json, read_csv, slope,
                            slope_table)
from app.certify.cluster_certifier import EpsilonMode
from app.errors import ConfigurationError, InsufficientDataError, PipelineError
from app.fem.assembly import assemble_p1
from app.mesh.triangulation import DomainKind, generate_uniform_square_mesh
from app.oracle.square import exact_spectrum_square
from app.spectra.eigensolver import solve_generalized

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')
GOLDEN_HEADER = ('level,h,cluster,Ch,rho,lambda_hat,Delta_thm1,delta_thm2,delta_eq27,'
                 'Delta_final,delta_final,Delta_tilde,Delta_exact,delta_exact')


def synthetic_report(values, cluster=1, column='Delta_thm1'):
    return CertifiedReport(rows=[ReportRow(level=n, h=1 / n, cluster=cluster, **{column: value})
                                 for n, value in values])


def test_parse_square_config(make_square_config):
    config = make_square_config('8, 16', 3)
    assert config.domain == DomainKind.UNIT_SQUARE
    assert config.refinement_levels == [8, 16]
    assert config.clusters == [(1, 1), (2, 3), (4, 4), (5, 6)]
    assert config.iterations == 3
    assert config.enclosure_source == EXACT_SQUARE_SOURCE
    assert config.ch_source == FORMULA_CH_SOURCE
    assert config.mode == EpsilonMode.EXACT
    assert config.has_oracle


def test_shipped_dumbbell_config_resolves_paths():
    config = load_config(os.path.join(CONFIG_DIR, 'dumbbell.cfg'))
    assert config.domain == DomainKind.DUMBBELL
    assert os.path.samefile(config.enclosure_source, settings.DUMBBELL_ENCLOSURES_PATH)
    assert os.path.samefile(config.ch_source, settings.DUMBBELL_CH_PATH)
    assert config.cluster_spec.last_index == 12


def test_dumbbell_without_enclosure_is_rejected():
    text = '[run]\ndomain = dumbbell\nlevels = 2\n\n[clusters]\nranges = 1-2\n'
    with pytest.raises(ConfigurationError, match='enclosure'):
        parse_config(text)


@pytest.mark.parametrize('text, match', [
    ('[clusters]\nranges = 1-1\n', r'\[run\]'),
    ('[run]\ndomain = unit_square\nlevels = 16, 8\n[clusters]\nranges = 1-1\n', 'ascending'),
    ('[run]\ndomain = unit_square\nlevels = 8\n[clusters]\nranges = 1-1, 3-4\n', 'clusters'),
    ('[run]\ndomain = unit_square\nlevels = 8\niterations = -1\n[clusters]\nranges = 1-1\n', 'iterations'),
    ('[run]\ndomain = dumbbell\nlevels = 2\n[clusters]\nranges = 1-2\n[sources]\nenclosure = nowhere.txt\n'
     'ch = nowhere.txt\n', 'does not exist'),
])
def test_invalid_configs(text, match):
    with pytest.raises(ConfigurationError, match=match):
        parse_config(text)


def test_square_config_rejects_a_level_table(tmp_path, square_config_text):
    table = tmp_path / 'ch.txt'
    table.write_text('0 0.0419\n1 0.0233\n')
    text = square_config_text(levels='8, 16', iterations=1).replace('ch = formula_0493h', f'ch = {table}')
    with pytest.raises(ConfigurationError, match='formula_0493h'):
        parse_config(text)


def test_overrides(make_square_config):
    config = make_square_config().with_overrides(iterations=0, gershgorin=True)
    assert config.iterations == 0
    assert config.mode == EpsilonMode.GERSHGORIN
    with pytest.raises(ConfigurationError):
        make_square_config().with_overrides(iterations=-2)


def test_zero_iterations_report_initial_bounds(make_square_config):
    report = run(make_square_config('8', 0))
    assert len(report.rows) == 4
    for row in report.rows:
        assert row.Delta_final == row.Delta_thm1
        assert row.delta_final == min(row.delta_thm2, row.delta_eq27)


def test_golden_header(tmp_path, make_square_config):
    path = tmp_path / 'report.csv'
    emit_csv(run(make_square_config('8')), str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == GOLDEN_HEADER
    assert len(lines) == 5


def test_empty_report_is_header_only(tmp_path):
    path = tmp_path / 'empty.csv'
    emit_csv(CertifiedReport(), str(path))
    assert path.read_text() == GOLDEN_HEADER + '\n'
    assert read_csv(str(path)).rows == []


def test_reruns_are_byte_identical(tmp_path, make_square_config):
    first, second = tmp_path / 'first.csv', tmp_path / 'second.csv'
    emit_csv(run(make_square_config('8, 16')), str(first))
    emit_csv(run(make_square_config('8, 16'), threads=2), str(second))
    assert first.read_bytes() == second.read_bytes()


def test_gap_violated_rows_carry_the_marker(tmp_path):
    row = ReportRow(level=2, h=0.1, cluster=2, Ch=0.3, rho=10.0, lambda_hat=12.0, gap_violated=True)
    path = tmp_path / 'gap.csv'
    emit_csv(CertifiedReport(rows=[row]), str(path))
    cells = dict(zip(COLUMNS, path.read_text().splitlines()[1].split(',')))
    for column in ('Delta_thm1', 'delta_thm2', 'delta_eq27', 'Delta_final', 'delta_final', 'Delta_tilde'):
        assert cells[column] == settings.GAP_VIOLATED_MARKER
    assert cells['rho'] == '10'
    assert cells['Delta_exact'] == ''
    reread = read_csv(str(path)).rows[0]
    assert reread.gap_violated
    assert reread.value('Delta_final') is None


def test_separation_violation_marks_only_the_optimal_bound():
    row = ReportRow(level=2, h=0.1, cluster=1, Delta_thm1=0.5, delta_thm2=0.4, separation_violated=True)
    assert row.marker_for('delta_eq27') == settings.GAP_VIOLATED_MARKER
    assert row.marker_for('delta_thm2') is None
    assert row.value('delta_thm2') == 0.4


def test_json_report(tmp_path):
    path = tmp_path / 'report.json'
    report = synthetic_report([(8, 0.25), (16, 0.125)])
    report.rows[1].gap_violated = True
    emit_json(report, str(path))
    document = json.loads(path.read_text())
    assert document['columns'] == COLUMNS
    assert document['rows'][0]['Delta_thm1'] == 0.25
    assert document['rows'][0]['level'] == 8
    assert document['rows'][0]['Delta_exact'] is None
    assert document['rows'][1]['Delta_thm1'] == settings.GAP_VIOLATED_MARKER


def test_slope_of_linear_data():
    report = synthetic_report([(n, 3.7 / n) for n in (8, 16, 32, 64)])
    assert slope(report, 'Delta_thm1', 1) == pytest.approx(1.0, abs=1e-12)


def test_slope_skips_markers_and_needs_three_rows():
    report = synthetic_report([(8, 0.5), (16, 0.25), (32, 0.125)])
    report.rows[0].gap_violated = True
    with pytest.raises(InsufficientDataError):
        slope(report, 'Delta_thm1', 1)
    table = slope_table(report, ['Delta_thm1'])
    assert np.isnan(table.loc[1, 'Delta_thm1'])


def test_command_storage_describes_verbs():
    assert commands.names() == ['mesh', 'solve', 'certify', 'report', 'slopes']
    info = commands.commands['certify']['info']
    assert info['description'] == 'Certify directed distance bounds for every level and cluster.'
    parameters = {p.name: p for p in info['parameters']}
    assert parameters['config'].required
    assert parameters['config'].help == 'run configuration file'
    assert parameters['gershgorin'].type_ is bool
    assert parameters['iterations'].type_ is int
    assert parameters['out'].default == 'report.csv'
    assert parameters['out'].flag == '--out'


def test_cli_certify_and_slopes(tmp_path, capsys, square_config_text):
    config = tmp_path / 'square.cfg'
    config.write_text(square_config_text(levels='8, 16, 32', iterations=2))
    out = tmp_path / 'out' / 'report.csv'
    cli = EigenCertCli()
    assert cli.run(['certify', '--config', str(config), '--out', str(out), '--iterations', '1']) == 0
    assert out.read_text().splitlines()[0] == GOLDEN_HEADER
    assert cli.run(['slopes', '--csv', str(out), '--columns', 'Delta_thm1, Delta_exact']) == 0
    printed = capsys.readouterr().out
    assert 'Delta_thm1' in printed and 'Delta_exact' in printed


def test_cli_reports_failures_with_exit_code(tmp_path):
    missing = tmp_path / 'missing.cfg'
    assert EigenCertCli().run(['certify', '--config', str(missing)]) == 1


def test_solver_failures_carry_the_level(monkeypatch, tmp_path, make_square_config, square_config_text):
    def singular(system, count):
        raise np.linalg.LinAlgError('leading minor not positive definite')

    monkeypatch.setattr('app.cli.pipeline.solve_generalized', singular)
    with pytest.raises(PipelineError, match='level 8: LinAlgError') as error:
        run(make_square_config('8', 0))
    assert error.value.level == 8
    assert isinstance(error.value.cause, np.linalg.LinAlgError)

    config = tmp_path / 'square.cfg'
    config.write_text(square_config_text(levels='8', iterations=0))
    assert EigenCertCli().run(['certify', '--config', str(config), '--out', str(tmp_path / 'r.csv')]) == 1


def test_solve_verb_reports_solver_failures(monkeypatch, tmp_path, square_config_text):
    def singular(system, count):
        raise np.linalg.LinAlgError('Matrix is singular')

    monkeypatch.setattr('app.cli.eigencert_cli.solve_generalized', singular)
    config = tmp_path / 'square.cfg'
    config.write_text(square_config_text(levels='8', iterations=0))
    assert EigenCertCli().run(['solve', '--config', str(config)]) == 1


def test_arpack_failures_carry_the_level(monkeypatch, make_square_config):
    def stalled(system, count):
        raise ArpackNoConvergence('ARPACK error -1: No convergence', np.empty(0), np.empty((0, 0)))

    monkeypatch.setattr('app.cli.pipeline.solve_generalized', stalled)
    with pytest.raises(PipelineError) as error:
        run(make_square_config('8, 16', 0), threads=2)
    assert error.value.level in (8, 16)
    assert error.value.cluster is None


def test_cli_mesh_and_solve(tmp_path, square_config_text):
    config = tmp_path / 'square.cfg'
    config.write_text(square_config_text(levels='8', iterations=0))
    cli = EigenCertCli()
    assert cli.run(['mesh', '--config', str(config), '--out', str(tmp_path / 'meshes')]) == 0
    assert (tmp_path / 'meshes' / 'unit_square_8.msh').exists()
    eigenvalues = tmp_path / 'eigenvalues.csv'
    assert cli.run(['solve', '--config', str(config), '--out', str(eigenvalues), '--count', '3']) == 0
    lines = eigenvalues.read_text().splitlines()
    assert lines[0] == 'level,h,index,eigenvalue'
    assert len(lines) == 4


@pytest.mark.slow
def test_square_study_bounds_dominate_oracle(square_study_report):
    rows = square_study_report.rows
    assert len(rows) == 16
    for row in rows:
        assert not row.gap_violated and not row.separation_violated
        for column in ('Delta_thm1', 'Delta_final'):
            assert row.value(column) >= row.Delta_exact
        for column in ('delta_thm2', 'delta_eq27', 'delta_final'):
            assert row.value(column) >= row.delta_exact


@pytest.mark.slow
def test_square_study_rates(square_study_report):
    assert 0.8 <= slope(square_study_report, 'Delta_thm1', 1) <= 1.2
    assert 0.8 <= slope(square_study_report, 'delta_thm2', 1) <= 1.2
    assert 1.7 <= slope(square_study_report, 'delta_eq27', 1) <= 2.3
    finest = [row for row in square_study_report.rows if row.cluster == 1 and row.level == 64][0]
    assert finest.Delta_final <= 5 * finest.Delta_exact


@pytest.mark.slow
def test_square_eigenvalues_dominate_and_converge():
    exact = [m.eigenvalue for m in exact_spectrum_square(6)]
    hs, errors = [], []
    for n in (8, 16, 32, 64):
        spectrum = solve_generalized(assemble_p1(generate_uniform_square_mesh(n)), 6)
        assert np.all(spectrum.eigenvalues > exact)
        hs.append(1 / n)
        errors.append(spectrum.eigenvalues[0] - exact[0])
    assert np.polyfit(np.log(hs), np.log(errors), 1)[0] == pytest.approx(2.0, abs=0.2)


@pytest.mark.slow
def test_dumbbell_study():
    report = run(load_config(os.path.join(CONFIG_DIR, 'dumbbell.cfg')))
    assert len(report.rows) == 12
    for row in report.rows:
        assert not row.gap_violated
        assert np.isfinite(row.Delta_final) and np.isfinite(row.delta_final)
        assert row.Delta_final <= row.Delta_thm1
        assert row.delta_final <= row.delta_thm2
        if row.cluster in (1, 3) and row.level >= 3:
            assert row.Delta_final < 1.0 and row.delta_final < 1.0
    assert 0.7 <= slope(report, 'Delta_final', 1) <= 1.3
