import functools
import logging
from typing import Callable, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

import settings
from app.fem.assembly import barycentric_gradients
from app.mesh.triangulation import Triangulation

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=16)
def triangle_rule(order: int = settings.QUADRATURE_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """
    Collapsed Gauss rule on the reference triangle with order^2 points, exact for
    polynomials of total degree 2*order - 1.

    Returns barycentric coordinates (q, 3) and weights (q,) summing to 1.
    """
    # Gauss-Jacobi absorbs the (1 - u) Jacobian of the collapse (u, v) -> (u, v (1 - u))
    x_u, w_u = roots_jacobi(order, 1.0, 0.0)
    x_v, w_v = roots_legendre(order)
    u = (1 + x_u) / 2
    v = (1 + x_v) / 2
    uu, vv = np.meshgrid(u, v, indexing='ij')
    weights = np.outer(w_u / 4, w_v / 2).ravel() * 2  # reference area 1/2 -> weights sum to 1
    xi = uu.ravel()
    eta = (vv * (1 - uu)).ravel()
    bary = np.column_stack([1 - xi - eta, xi, eta])
    bary.setflags(write=False)
    weights.setflags(write=False)
    return bary, weights


def quadrature_points(t: Triangulation, order: int = settings.QUADRATURE_ORDER) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Physical points (nt, q, 2), weights times area (nt, q), and barycentric coordinates (q, 3)."""
    bary, weights = triangle_rule(order)
    p = t.vertices[t.triangles]
    points = np.einsum('qk,tkd->tqd', bary, p)
    return points, t.areas()[:, None] * weights[None, :], bary


def integrate(t: Triangulation, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
              order: int = settings.QUADRATURE_ORDER) -> float:
    points, weights, _ = quadrature_points(t, order)
    return float(np.sum(weights * f(points[..., 0], points[..., 1])))


def load_vector(t: Triangulation, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                order: int = settings.QUADRATURE_ORDER) -> np.ndarray:
    """(f, phi_m) for every P1 hat function phi_m, indexed by vertex."""
    points, weights, bary = quadrature_points(t, order)
    values = f(points[..., 0], points[..., 1]) * weights
    local = np.einsum('tq,qk->tk', values, bary)
    return np.bincount(t.triangles.ravel(), weights=local.ravel(), minlength=t.num_vertices)


def gradient_load_vector(t: Triangulation, grad: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
                         order: int = settings.QUADRATURE_ORDER) -> np.ndarray:
    """(grad f, grad phi_m) for every P1 hat function phi_m, indexed by vertex."""
    points, weights, _ = quadrature_points(t, order)
    gx, gy = grad(points[..., 0], points[..., 1])
    mean_gradient = np.stack([np.sum(gx * weights, axis=1), np.sum(gy * weights, axis=1)], axis=1)
    grads, _ = barycentric_gradients(t)
    local = np.einsum('td,tkd->tk', mean_gradient, grads)
    return np.bincount(t.triangles.ravel(), weights=local.ravel(), minlength=t.num_vertices)
