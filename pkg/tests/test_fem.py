import numpy as np
import pytest
from scipy import linalg

import settings
from app.errors import ConfigurationError, EmptySystemError, MissingConstantError
from app.fem.assembly import (ElementKind, assemble_cr, assemble_cr_global, assemble_p1, assemble_p1_global,
                              prolongate_p1, solve_poisson_p1)
from app.fem.constants import compute_Ch, read_ch_table
from app.mesh.refinement import refine_times, refine_uniform
from app.mesh.triangulation import DUMBBELL, UNIT_SQUARE, Triangulation, generate_uniform_square_mesh
from app.spectra.eigensolver import solve_generalized


def test_hand_assembly_of_the_center_vertex():
    system = assemble_p1(generate_uniform_square_mesh(2))
    assert system.size == 1
    assert system.K.toarray() == pytest.approx(np.array([[4.0]]), abs=1e-14)
    # consistent mass: six triangles of area 1/8 contribute area/6 each
    assert system.M.toarray() == pytest.approx(np.array([[1 / 8]]), abs=1e-15)
    _, M_full = assemble_p1_global(generate_uniform_square_mesh(2))
    center = int(system.dof_map[0])
    assert M_full[center].sum() == pytest.approx(1 / 4, abs=1e-15)


@pytest.mark.parametrize('n', [1, 3, 8])
def test_stiffness_annihilates_constants(n):
    K, M = assemble_p1_global(generate_uniform_square_mesh(n))
    np.testing.assert_allclose(np.asarray(K.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    assert M.sum() == pytest.approx(1.0, abs=1e-12)


def test_dumbbell_mass_sums_to_area(dumbbell_mesh):
    K, M = assemble_p1_global(dumbbell_mesh)
    assert M.sum() == pytest.approx(2.002, abs=1e-12)
    np.testing.assert_allclose(np.asarray(K.sum(axis=1)).ravel(), 0.0, atol=1e-12)


def test_matrices_symmetric_positive_definite(square16_system):
    K = square16_system.K.toarray()
    M = square16_system.M.toarray()
    np.testing.assert_allclose(K, K.T, atol=1e-14)
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    linalg.cholesky(K)
    linalg.cholesky(M)
    assert linalg.eigh(K, M, eigvals_only=True)[0] > 0


def test_no_interior_vertices_is_an_empty_system():
    with pytest.raises(EmptySystemError):
        assemble_p1(generate_uniform_square_mesh(1))


def test_cr_mass_on_a_single_triangle():
    vertices = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
    t = Triangulation(vertices, np.array([(0, 1, 2)]), np.ones(3, dtype=bool), h=np.sqrt(2))
    K, M, counts = assemble_cr_global(t)
    np.testing.assert_allclose(M.toarray(), np.eye(3) * 0.5 / 3, atol=1e-15)
    assert list(counts) == [1, 1, 1]
    np.testing.assert_allclose(np.asarray(K.sum(axis=1)).ravel(), 0.0, atol=1e-14)


def test_cr_stiffness_symmetric_semidefinite():
    K, M, _ = assemble_cr_global(generate_uniform_square_mesh(4))
    K = K.toarray()
    np.testing.assert_allclose(K, K.T, atol=1e-14)
    assert linalg.eigvalsh(K)[0] > -1e-12
    assert M.sum() == pytest.approx(1.0, abs=1e-12)


def test_cr_first_eigenvalue_below_exact():
    system = assemble_cr(generate_uniform_square_mesh(16))
    assert system.element == ElementKind.CR
    spectrum = solve_generalized(system, 1)
    assert spectrum.eigenvalues[0] <= 2 * np.pi ** 2


def test_galerkin_orthogonality_of_poisson_solve():
    t = generate_uniform_square_mesh(8)
    system, u = solve_poisson_p1(t)
    _, M = assemble_p1_global(t)
    load = np.asarray(M.sum(axis=1)).ravel()[system.dof_map]
    assert np.abs(system.K @ u - load).max() <= 1e-10


def test_a_priori_constant_dominates_energy_error():
    coarse = generate_uniform_square_mesh(8)
    fine = refine_uniform(coarse)
    coarse_system, u_h = solve_poisson_p1(coarse)
    fine_system, u_ref = solve_poisson_p1(fine)
    prolongated = prolongate_p1(coarse, coarse_system.expand(u_h))
    error = fine_system.expand(u_ref) - prolongated
    assert np.abs(error[fine.boundary_flags]).max() == 0.0
    free_error = error[fine_system.dof_map]
    energy_error = np.sqrt(free_error @ (fine_system.K @ free_error))
    assert 0 < energy_error <= compute_Ch(coarse, UNIT_SQUARE) * 1.0


def test_square_constant():
    assert compute_Ch(generate_uniform_square_mesh(64), UNIT_SQUARE) == pytest.approx(0.493 / 64)
    assert 0.493 / 64 == pytest.approx(0.00770, abs=1e-5)


def test_level_table_is_rejected_on_the_square():
    table = {0: 0.0419, 1: 0.0233}
    for n in (8, 16):
        with pytest.raises(ConfigurationError, match='0.493 h'):
            compute_Ch(generate_uniform_square_mesh(n), UNIT_SQUARE, table)


def test_dumbbell_constants_from_table(tmp_path, dumbbell_mesh):
    path = tmp_path / 'ch.txt'
    path.write_text('# level value\n0 0.0419\n5 0.00155\n')
    table = read_ch_table(str(path))
    assert compute_Ch(dumbbell_mesh, DUMBBELL, table) == 0.0419
    assert compute_Ch(refine_times(dumbbell_mesh, 1), DUMBBELL, {5: 0.00155, 1: 0.0233}) == 0.0233


def test_missing_dumbbell_level_fails_closed(dumbbell_mesh):
    with pytest.raises(MissingConstantError):
        compute_Ch(refine_uniform(dumbbell_mesh), DUMBBELL, {0: 0.0419})
    with pytest.raises(MissingConstantError):
        compute_Ch(dumbbell_mesh, DUMBBELL)


def test_shipped_table_has_all_levels():
    table = read_ch_table(settings.DUMBBELL_CH_PATH)
    assert table[0] == 0.0419
    assert table[5] == 0.00155
    assert sorted(table) == [0, 1, 2, 3, 4, 5]
