import numpy as np
import pytest

from app.errors import MeshParseError, MeshValidationError
from app.mesh.mesh_io import read_mesh, write_mesh
from app.mesh.refinement import refine_uniform
from app.mesh.triangulation import DUMBBELL, UNIT_SQUARE, Triangulation, generate_uniform_square_mesh, validate


def test_round_trip_is_bitwise(tmp_path):
    t = generate_uniform_square_mesh(4)
    path = tmp_path / 'square4.msh'
    write_mesh(t, str(path))
    loaded = read_mesh(str(path), h=t.h)
    assert np.array_equal(loaded.vertices, t.vertices)
    assert np.array_equal(loaded.triangles, t.triangles)
    assert np.array_equal(loaded.boundary_flags, t.boundary_flags)
    assert loaded.h == t.h


def test_round_trip_of_irrational_coordinates(tmp_path, dumbbell_mesh):
    t = refine_uniform(dumbbell_mesh)
    path = tmp_path / 'dumbbell.msh'
    write_mesh(t, str(path))
    loaded = read_mesh(str(path))
    assert np.array_equal(loaded.vertices, t.vertices)
    assert loaded.h == pytest.approx(t.longest_edge())


def test_header_format(tmp_path):
    path = tmp_path / 'square1.msh'
    write_mesh(generate_uniform_square_mesh(1), str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == '4 2'
    assert lines[1] == '0 0 1'
    assert len(lines) == 7


def test_index_out_of_range_reports_line(tmp_path):
    path = tmp_path / 'bad.msh'
    path.write_text('3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 3\n')
    with pytest.raises(MeshParseError) as error:
        read_mesh(str(path))
    assert error.value.line_number == 5


def test_malformed_vertex_line(tmp_path):
    path = tmp_path / 'bad.msh'
    path.write_text('3 1\n0 0 1\n1 zero 1\n0 1 1\n0 1 2\n')
    with pytest.raises(MeshParseError) as error:
        read_mesh(str(path))
    assert error.value.line_number == 3


def test_truncated_file(tmp_path):
    path = tmp_path / 'bad.msh'
    path.write_text('4 2\n0 0 1\n1 0 1\n')
    with pytest.raises(MeshParseError):
        read_mesh(str(path))


def test_duplicated_triangle_fails_validation(tmp_path):
    t = generate_uniform_square_mesh(4)
    path = tmp_path / 'dup.msh'
    write_mesh(t, str(path))
    lines = path.read_text().splitlines()
    lines[0] = f'{t.num_vertices} {t.num_triangles + 1}'
    lines.append(lines[-1])
    path.write_text('\n'.join(lines) + '\n')
    with pytest.raises(MeshValidationError):
        read_mesh(str(path))


def test_nan_coordinate_fails_validation(tmp_path):
    path = tmp_path / 'nan.msh'
    path.write_text('3 1\nnan 1 1\n1 0 1\n0 1 1\n0 1 2\n')
    with pytest.raises(MeshValidationError, match='finite'):
        read_mesh(str(path))
    with pytest.raises(MeshValidationError, match='finite'):
        read_mesh(str(path), h=0.5)


def test_infinite_mesh_size_fails_validation(tmp_path):
    path = tmp_path / 'square1.msh'
    write_mesh(generate_uniform_square_mesh(1), str(path))
    with pytest.raises(MeshValidationError, match='mesh size'):
        read_mesh(str(path), h=float('inf'))


def test_hanging_node_fails_validation(tmp_path):
    # the centre vertex sits on the diagonal of the lower triangle
    path = tmp_path / 'hanging.msh'
    path.write_text('5 3\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0.5 0.5 1\n0 1 2\n0 4 3\n4 2 3\n')
    with pytest.raises(MeshValidationError, match='vertex 4 lies inside edge \\(0, 2\\); the mesh is not conforming'):
        read_mesh(str(path))


def test_outer_edge_off_the_domain_boundary_fails_validation():
    vertices = np.array([(0.25, 0.25), (0.5, 0.25), (0.5, 0.5)])
    triangles = np.array([(0, 1, 2)])
    flags = np.ones(3, dtype=bool)
    validate(Triangulation(vertices.copy(), triangles.copy(), flags.copy(), h=0.25))
    with pytest.raises(MeshValidationError, match='not on the unit_square boundary'):
        validate(Triangulation(vertices, triangles, flags, h=0.25, domain=UNIT_SQUARE))


def test_generated_meshes_lie_on_their_domains(tmp_path, dumbbell_mesh):
    path = tmp_path / 'square8.msh'
    write_mesh(generate_uniform_square_mesh(8), str(path))
    assert read_mesh(str(path), domain=UNIT_SQUARE).domain == UNIT_SQUARE
    validate(refine_uniform(dumbbell_mesh))
    assert dumbbell_mesh.domain == DUMBBELL
