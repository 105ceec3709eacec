"""Unit-sphere geometry primitives.

Hemisphere containment witnesses, angular neighborhoods (outer parallel
sets), polar sets, and quadrature grids.  Everything is dimension-generic
except grid construction, which is provided for the circle and the
2-sphere.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import linprog

from ._validation import (
    as_direction_set,
    as_unit_vector,
    as_unit_vectors,
    check_same_dimension,
)

GRID_SCHEMES = ("uniform_angles", "fibonacci", "latlong")

# slack on the hemisphere LP optimum below which a set counts as contained
HEMISPHERE_TOL = 1e-9

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def surface_area(dim: int) -> float:
    """Surface measure of the unit sphere S^(dim-1) embedded in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclasses.dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and nonnegative weights discretizing spherical Lebesgue measure.

    Weights are in surface-measure units and must sum to the sphere's
    surface area within ``mass_rel_tol``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    mass_rel_tol: float = 1e-3

    def __post_init__(self):
        nodes = as_unit_vectors(self.nodes, "nodes")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (nodes.shape[0],):
            raise ValueError("weights must be one per node")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        area = surface_area(nodes.shape[1])
        if abs(weights.sum() - area) > self.mass_rel_tol * area:
            raise ValueError(
                f"grid weights sum to {weights.sum():.6g}, expected {area:.6g} "
                f"within rel. tol {self.mass_rel_tol:g}"
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def count(self) -> int:
        return self.nodes.shape[0]


def hemisphere_witness(directions) -> np.ndarray | None:
    """Unit vector u with u.v >= -1e-9 for all v, or None if no closed
    hemisphere contains the given directions.

    Decided by linear programming: maximize the margin t subject to
    v.u >= t over the boundary of the box |u|_inf <= 1 (one coordinate
    pinned to +-1 per subproblem, which excludes the trivial u = 0).
    """
    dirs = as_unit_vectors(directions, "directions")
    m, n = dirs.shape
    # variables (u, t); maximize t  <=>  minimize -t
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-dirs, np.ones((m, 1))])  # t - v.u <= 0
    b_ub = np.zeros(m)
    best_margin = -np.inf
    best_u = None
    for j in range(n):
        for sign in (1.0, -1.0):
            bounds = [(-1.0, 1.0)] * n + [(None, None)]
            bounds[j] = (sign, sign)
            res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status == 0 and -res.fun > best_margin:
                best_margin = -res.fun
                best_u = res.x[:n]
    if best_u is None or best_margin < -HEMISPHERE_TOL:
        return None
    return best_u / np.linalg.norm(best_u)


def outer_parallel_mask(points, omega, angle: float) -> np.ndarray:
    """Boolean mask of points lying in the open angular neighborhood of
    radius ``angle`` around the direction set ``omega``.

    Membership is strict: max_v p.v > cos(angle).
    """
    if not 0.0 < angle < math.pi:
        raise ValueError(f"angle must lie in (0, pi), got {angle}")
    pts = as_unit_vectors(points, "points")
    om = as_unit_vectors(omega, "omega")
    check_same_dimension(pts.shape[1], om, "omega")
    return (pts @ om.T).max(axis=1) > math.cos(angle)


def in_outer_parallel_set(u, omega, angle: float) -> bool:
    u = as_unit_vector(u, "u")
    return bool(outer_parallel_mask(u[None, :], omega, angle)[0])


def polar_set_mask(points, omega, tol: float = 1e-12) -> np.ndarray:
    """Mask of points forming a non-acute angle with every element of omega."""
    pts = as_unit_vectors(points, "points")
    om = as_unit_vectors(omega, "omega")
    check_same_dimension(pts.shape[1], om, "omega")
    return (pts @ om.T).max(axis=1) <= tol


def in_polar_set(u, omega) -> bool:
    u = as_unit_vector(u, "u")
    return bool(polar_set_mask(u[None, :], omega)[0])


def build_grid(dim: int, count: int, scheme: str = "uniform_angles") -> QuadratureGrid:
    """Quadrature grid on S^(dim-1).

    Supported: (2, uniform_angles) equally spaced angles with equal
    weights; (2, fibonacci) golden-ratio low-discrepancy angles;
    (3, fibonacci) offset Fibonacci lattice; (3, latlong) latitude bands
    weighted by sin(polar angle), normalized exactly.
    """
    if count < 4:
        raise ValueError(f"count must be >= 4, got {count}")
    if scheme not in GRID_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {GRID_SCHEMES}")

    if dim == 2 and scheme == "uniform_angles":
        theta = 2.0 * math.pi * np.arange(count) / count
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(count, 2.0 * math.pi / count)
    elif dim == 2 and scheme == "fibonacci":
        theta = 2.0 * math.pi * np.mod(np.arange(count) / _GOLDEN, 1.0)
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(count, 2.0 * math.pi / count)
    elif dim == 3 and scheme == "fibonacci":
        k = np.arange(count, dtype=float) + 0.5
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = 2.0 * math.pi * k / _GOLDEN
        nodes = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.full(count, 4.0 * math.pi / count)
    elif dim == 3 and scheme == "latlong":
        n_lat = max(4, int(round(math.sqrt(count / 2.0))))
        n_long = max(4, int(math.ceil(count / n_lat)))
        polar = (np.arange(n_lat) + 0.5) * math.pi / n_lat
        azim = 2.0 * math.pi * np.arange(n_long) / n_long
        pol, az = np.meshgrid(polar, azim, indexing="ij")
        sin_p = np.sin(pol).ravel()
        nodes = np.column_stack(
            [sin_p * np.cos(az.ravel()), sin_p * np.sin(az.ravel()), np.cos(pol).ravel()]
        )
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.sin(pol).ravel()
        weights *= 4.0 * math.pi / weights.sum()
    else:
        raise ValueError(f"unsupported (dim, scheme) pair: ({dim}, {scheme!r})")

    return QuadratureGrid(nodes=nodes, weights=weights)


def direction_set(vectors) -> np.ndarray:
    """Validated set of pairwise-distinct unit directions."""
    return as_direction_set(vectors)
