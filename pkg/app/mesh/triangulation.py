import dataclasses
import logging
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import triangle

import settings
from app.errors import InvalidArgumentError, MeshValidationError

logger = logging.getLogger(__name__)


class DomainKind(Enum):
    UNIT_SQUARE = 'unit_square'
    DUMBBELL = 'dumbbell'
    POLYGON = 'polygon'


@dataclasses.dataclass(frozen=True)
class DomainSpec:
    kind: DomainKind
    polygon_vertices: Optional[Tuple[Tuple[float, float], ...]] = None

    def boundary_polygon(self) -> np.ndarray:
        if self.kind == DomainKind.UNIT_SQUARE:
            return np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
        if self.kind == DomainKind.DUMBBELL:
            return dumbbell_polygon()
        if not self.polygon_vertices or len(self.polygon_vertices) < 3:
            raise InvalidArgumentError('polygon domain needs at least 3 vertices')
        return np.asarray(self.polygon_vertices, dtype=float)

    def area(self) -> float:
        x, y = self.boundary_polygon().T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


UNIT_SQUARE = DomainSpec(DomainKind.UNIT_SQUARE)
DUMBBELL = DomainSpec(DomainKind.DUMBBELL)


@dataclasses.dataclass(frozen=True, eq=False)
class Triangulation:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    boundary_flags: np.ndarray  # (nv,) bool, Dirichlet vertices
    h: float
    level: int = 0
    domain: Optional[DomainSpec] = None

    def __post_init__(self):
        for array in (self.vertices, self.triangles, self.boundary_flags):
            array.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    def total_area(self) -> float:
        return float(self.areas().sum())

    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return edge_audit(self.triangles)

    def boundary_edges(self) -> np.ndarray:
        unique_edges, counts, _ = self.edges()
        return unique_edges[counts == 1]

    def longest_edge(self) -> float:
        unique_edges, _, _ = self.edges()
        return float(np.linalg.norm(self.vertices[unique_edges[:, 0]] - self.vertices[unique_edges[:, 1]], axis=1).max())

    def min_angle_degrees(self) -> float:
        p = self.vertices[self.triangles]
        angles = []
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            u = p[:, b] - p[:, a]
            v = p[:, c] - p[:, a]
            cos = np.einsum('ij,ij->i', u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
        return float(np.min(angles))

    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_flags)


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (vertices[triangles[:, k]] for k in range(3))
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def edge_audit(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Collects the undirected edges of a triangle list.

    Returns the sorted unique edges, how many triangles use each of them, and for
    every local edge (triangle t, edge opposite vertex k) the index into the unique
    edges, shaped (nt, 3).
    """
    local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    flat = np.sort(local.reshape(-1, 2), axis=1)
    unique_edges, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    return unique_edges, counts, inverse.reshape(-1, 3)


def boundary_flags_from_edges(num_vertices: int, triangles: np.ndarray) -> np.ndarray:
    unique_edges, counts, _ = edge_audit(triangles)
    flags = np.zeros(num_vertices, dtype=bool)
    flags[unique_edges[counts == 1].ravel()] = True
    return flags


def _vertices_inside_edges(vertices: np.ndarray, edges: np.ndarray, chunk: int = 256) -> Optional[Tuple[int, int]]:
    """First (vertex, edge row) with the vertex strictly inside the edge segment, None for a conforming edge set."""
    if edges.size == 0:
        return None
    candidates = np.unique(edges)
    scale = float(np.ptp(vertices, axis=0).max()) or 1.0
    points = vertices[candidates]
    for start in range(0, len(edges), chunk):
        block = edges[start:start + chunk]
        a = vertices[block[:, 0]]
        d = vertices[block[:, 1]] - a
        length_sq = np.einsum('ij,ij->i', d, d)
        rel = points[None, :, :] - a[:, None, :]
        cross = d[:, None, 0] * rel[..., 1] - d[:, None, 1] * rel[..., 0]
        along = np.einsum('ed,epd->ep', d, rel)
        margin = settings.MESH_GEOMETRY_RTOL * length_sq[:, None]
        inside = ((np.abs(cross) <= settings.MESH_GEOMETRY_RTOL * scale * np.sqrt(length_sq)[:, None])
                  & (along > margin) & (along < length_sq[:, None] - margin))
        hits = np.argwhere(inside)
        if hits.size:
            row, point = hits[0]
            return int(candidates[point]), start + int(row)
    return None


def _distance_to_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    a = polygon
    d = np.roll(polygon, -1, axis=0) - a
    rel = points[:, None, :] - a[None, :, :]
    s = np.clip(np.einsum('psd,sd->ps', rel, d) / np.einsum('sd,sd->s', d, d), 0.0, 1.0)
    gap = rel - s[..., None] * d[None, :, :]
    return np.sqrt(np.einsum('psd,psd->ps', gap, gap)).min(axis=1)


def _check_conformity(t: Triangulation, outer: np.ndarray):
    hanging = _vertices_inside_edges(t.vertices, outer)
    if hanging is not None:
        vertex, row = hanging
        i, j = outer[row]
        raise MeshValidationError(f'vertex {vertex} lies inside edge ({i}, {j}); the mesh is not conforming')
    if t.domain is None or outer.size == 0:
        return

    polygon = t.domain.boundary_polygon()
    tol = settings.MESH_GEOMETRY_RTOL * float(np.ptp(polygon, axis=0).max())
    a, b = t.vertices[outer[:, 0]], t.vertices[outer[:, 1]]
    # an edge whose endpoints and midpoint touch the polygon lies on it
    off = np.flatnonzero((_distance_to_polygon(a, polygon) > tol) | (_distance_to_polygon(b, polygon) > tol)
                         | (_distance_to_polygon((a + b) / 2, polygon) > tol))
    if off.size:
        i, j = outer[off[0]]
        raise MeshValidationError(f'edge ({i}, {j}) belongs to one triangle but is not on the {t.domain.kind.value} boundary')


def validate(t: Triangulation) -> Triangulation:
    if t.num_triangles == 0:
        raise MeshValidationError('mesh has no triangles')
    if not np.isfinite(t.vertices).all():
        raise MeshValidationError('vertex coordinates must be finite')
    if not (np.isfinite(t.h) and t.h > 0):
        raise MeshValidationError(f'mesh size must be positive and finite, got {t.h}')
    if t.triangles.min() < 0 or t.triangles.max() >= t.num_vertices:
        raise MeshValidationError('triangle references a vertex out of range')

    areas = t.areas()
    bad = np.flatnonzero(~(areas > 0))
    if bad.size:
        raise MeshValidationError(f'{bad.size} triangles with non-positive area, first is #{bad[0]}')

    _, duplicate_counts = np.unique(np.sort(t.triangles, axis=1), axis=0, return_counts=True)
    if (duplicate_counts > 1).any():
        raise MeshValidationError('duplicated triangle')

    unique_edges, counts, _ = edge_audit(t.triangles)
    overused = np.flatnonzero(counts > 2)
    if overused.size:
        i, j = unique_edges[overused[0]]
        raise MeshValidationError(f'edge ({i}, {j}) is shared by {counts[overused[0]]} triangles')
    _check_conformity(t, unique_edges[counts == 1])

    expected = boundary_flags_from_edges(t.num_vertices, t.triangles)
    if not np.array_equal(expected, t.boundary_flags.astype(bool)):
        mismatch = np.flatnonzero(expected != t.boundary_flags)
        raise MeshValidationError(f'boundary flags disagree with the edge audit at vertex {mismatch[0]}')
    return t


def generate_uniform_square_mesh(n: int) -> Triangulation:
    if n < 1:
        raise InvalidArgumentError(f'subdivisions per side must be >= 1, got {n}')

    ticks = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    triangles = np.concatenate([
        np.column_stack([v00, v10, v11]),
        np.column_stack([v00, v11, v01]),
    ])

    flags = (np.isclose(vertices[:, 0], 0.0) | np.isclose(vertices[:, 0], 1.0)
             | np.isclose(vertices[:, 1], 0.0) | np.isclose(vertices[:, 1], 1.0))
    return validate(Triangulation(vertices, triangles, flags, h=1.0 / n, level=0, domain=UNIT_SQUARE))


def dumbbell_polygon() -> np.ndarray:
    half = settings.DUMBBELL_BAR_WIDTH / 2
    lo = settings.DUMBBELL_BAR_CENTER - half
    hi = settings.DUMBBELL_BAR_CENTER + half
    right = 1.0 + settings.DUMBBELL_BAR_LENGTH
    return np.array([
        (0.0, 0.0), (1.0, 0.0), (1.0, lo), (right, lo), (right, 0.0), (right + 1.0, 0.0),
        (right + 1.0, 1.0), (right, 1.0), (right, hi), (1.0, hi), (1.0, 1.0), (0.0, 1.0),
    ])


def generate_polygon_mesh(polygon: Sequence[Tuple[float, float]], opts: str = settings.DUMBBELL_TRIANGLE_OPTS,
                          domain: Optional[DomainSpec] = None) -> Triangulation:
    """
    Constrained quality Delaunay triangulation of a simple polygon.

    :param polygon: boundary vertices in counterclockwise order
    :param opts: switches passed to Triangle
    :param domain: domain tag stored on the mesh
    """
    points = np.asarray(polygon, dtype=float)
    segments = np.column_stack([np.arange(len(points)), np.roll(np.arange(len(points)), -1)])
    result = triangle.triangulate({'vertices': points, 'segments': segments}, opts)

    vertices = np.asarray(result['vertices'], dtype=float)
    triangles = np.asarray(result['triangles'], dtype=np.int64)
    flipped = signed_areas(vertices, triangles) < 0
    triangles[flipped] = triangles[flipped][:, [0, 2, 1]]

    # drop vertices Triangle left unused so every vertex carries a DOF or a boundary flag
    used = np.unique(triangles)
    if used.size != len(vertices):
        remap = -np.ones(len(vertices), dtype=np.int64)
        remap[used] = np.arange(used.size)
        vertices = vertices[used]
        triangles = remap[triangles]

    flags = boundary_flags_from_edges(len(vertices), triangles)
    mesh = Triangulation(vertices, triangles, flags, h=1.0, domain=domain or DomainSpec(DomainKind.POLYGON, tuple(map(tuple, points))))
    mesh = dataclasses.replace(mesh, h=mesh.longest_edge())
    validate(mesh)

    min_angle = mesh.min_angle_degrees()
    if min_angle < settings.MIN_ANGLE_DEGREES:
        raise MeshValidationError(f'mesh quality too low, min angle {min_angle:.2f} degrees')
    logger.info(f'Polygon mesh: {mesh.num_vertices} vertices, {mesh.num_triangles} triangles, '
                f'h={mesh.h:.4g}, min angle {min_angle:.1f}')
    return mesh


def generate_dumbbell_mesh() -> Triangulation:
    return generate_polygon_mesh(dumbbell_polygon(), settings.DUMBBELL_TRIANGLE_OPTS, domain=DUMBBELL)


def generate_mesh(domain: DomainSpec, n: int = 1) -> Triangulation:
    if domain.kind == DomainKind.UNIT_SQUARE:
        return generate_uniform_square_mesh(n)
    if domain.kind == DomainKind.DUMBBELL:
        return generate_dumbbell_mesh()
    return generate_polygon_mesh(domain.boundary_polygon(), domain=domain)
