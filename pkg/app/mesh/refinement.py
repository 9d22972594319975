import logging

import numpy as np

from app.mesh.triangulation import Triangulation, boundary_flags_from_edges, edge_audit, validate

logger = logging.getLogger(__name__)


def refine_uniform(t: Triangulation) -> Triangulation:
    """Red refinement: every triangle is split into 4 congruent children through its edge midpoints."""
    unique_edges, _, local_edges = edge_audit(t.triangles)
    midpoints = 0.5 * (t.vertices[unique_edges[:, 0]] + t.vertices[unique_edges[:, 1]])
    vertices = np.concatenate([t.vertices, midpoints])

    # local edge k is opposite vertex k
    m12, m20, m01 = (t.num_vertices + local_edges[:, k] for k in range(3))
    v0, v1, v2 = t.triangles.T
    triangles = np.concatenate([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ])

    flags = boundary_flags_from_edges(len(vertices), triangles)
    refined = Triangulation(vertices, triangles, flags, h=t.h / 2, level=t.level + 1, domain=t.domain)
    return validate(refined)


def refine_times(t: Triangulation, times: int) -> Triangulation:
    for _ in range(times):
        t = refine_uniform(t)
    logger.info(f'Refined mesh to level {t.level}: {t.num_vertices} vertices, {t.num_triangles} triangles')
    return t
