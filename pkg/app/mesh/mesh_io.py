import logging
from typing import List, Optional

import numpy as np

from app.errors import MeshParseError
from app.mesh.triangulation import DomainSpec, Triangulation, validate

logger = logging.getLogger(__name__)


def write_mesh(t: Triangulation, path: str):
    lines = [f'{t.num_vertices} {t.num_triangles}']
    for (x, y), flag in zip(t.vertices, t.boundary_flags):
        lines.append(f'{x:.17g} {y:.17g} {int(flag)}')
    for i, j, k in t.triangles:
        lines.append(f'{i} {j} {k}')
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')


def _fields(line: str, line_number: int, count: int) -> List[str]:
    fields = line.split()
    if len(fields) != count:
        raise MeshParseError(f'expected {count} fields, got {len(fields)}', line_number)
    return fields


def read_mesh(path: str, h: Optional[float] = None, level: int = 0, domain: Optional[DomainSpec] = None) -> Triangulation:
    """
    Reads the text mesh format: `NV NT`, NV lines `x y flag`, NT lines `i j k` (0-based).

    :param h: mesh size to attach; the longest edge is used when omitted
    """
    with open(path) as f:
        lines = f.read().splitlines()

    if not lines:
        raise MeshParseError('empty file', 1)
    try:
        nv, nt = (int(v) for v in _fields(lines[0], 1, 2))
    except ValueError:
        raise MeshParseError('header must be two integers', 1)
    if nv < 3 or nt < 1:
        raise MeshParseError(f'invalid sizes NV={nv} NT={nt}', 1)
    if len(lines) < 1 + nv + nt:
        raise MeshParseError(f'expected {1 + nv + nt} lines, file has {len(lines)}', len(lines))

    vertices = np.empty((nv, 2))
    flags = np.empty(nv, dtype=bool)
    for row in range(nv):
        line_number = row + 2
        x, y, flag = _fields(lines[row + 1], line_number, 3)
        try:
            vertices[row] = float(x), float(y)
            flag = int(flag)
        except ValueError:
            raise MeshParseError('vertex line must be `x y flag`', line_number)
        if flag not in (0, 1):
            raise MeshParseError(f'boundary flag must be 0 or 1, got {flag}', line_number)
        flags[row] = flag == 1

    triangles = np.empty((nt, 3), dtype=np.int64)
    for row in range(nt):
        line_number = row + nv + 2
        fields = _fields(lines[row + nv + 1], line_number, 3)
        try:
            triangles[row] = [int(v) for v in fields]
        except ValueError:
            raise MeshParseError('triangle line must be three integers', line_number)
        if triangles[row].min() < 0 or triangles[row].max() >= nv:
            raise MeshParseError(f'vertex index out of range 0..{nv - 1}', line_number)

    for offset, extra in enumerate(lines[1 + nv + nt:]):
        if extra.strip():
            raise MeshParseError('unexpected trailing content', offset + nv + nt + 2)

    mesh = Triangulation(vertices, triangles, flags, h=h if h is not None else 1.0, level=level, domain=domain)
    if h is None:
        mesh = Triangulation(vertices, triangles, flags, h=mesh.longest_edge(), level=level, domain=domain)
    return validate(mesh)
