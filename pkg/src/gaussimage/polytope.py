"""Polytopes with vertices on prescribed radial directions.

A body P is stored through its polar description: P* is the intersection
of halfspaces {x . v_i <= alpha_i} over the given directions, and
P = (P*)^* is the convex hull of the points v_i / alpha_i.  The
representation is *canonical* when each alpha_i equals the support value
of P* in direction v_i, i.e. is as small as possible without changing
the body.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection, QhullError

from ._validation import as_direction_set, as_index_set, as_positive_weights, as_unit_vectors
from .sphere import build_grid, hemisphere_witness

_FEAS_REL_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class DualPolytope:
    """Body P = (intersection of {x . v_i <= alpha_i})^*.

    The directions must positively span R^n, which makes P* bounded and
    keeps the origin interior to both P and P*.
    """

    directions: np.ndarray
    alphas: np.ndarray
    canonical: bool = False

    def __post_init__(self):
        dirs = as_direction_set(self.directions, "directions")
        alphas = as_positive_weights(self.alphas, dirs.shape[0], "alphas")
        if hemisphere_witness(dirs) is not None:
            raise ValueError("directions are contained in a closed hemisphere")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "alphas", alphas)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def num_facets(self) -> int:
        return self.directions.shape[0]


@dataclasses.dataclass(frozen=True)
class ExtremalStats:
    """Extremal alpha values over an index set and its complement."""

    max_in: float
    min_in: float
    max_out: float
    min_out: float


def _interior_point(directions: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    if alphas.min() > 1e-10 * alphas.max():
        return np.zeros(directions.shape[1])
    # Chebyshev center of {x . v_i <= alpha_i}
    m, n = directions.shape
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([directions, np.ones((m, 1))])
    res = linprog(cost, A_ub=a_ub, b_ub=alphas, bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise ValueError("halfspace intersection has empty interior")
    return res.x[:n]


def polar_polygon(directions: np.ndarray, alphas: np.ndarray):
    """Ordered boundary of the planar polytope {x . v_i <= alpha_i}.

    Returns (vertices, edge_atoms): vertices in counterclockwise order and,
    for each edge (vertices[k], vertices[k+1]), the index of the unique
    constraint the edge lies on.
    """
    m = directions.shape[0]
    scale = float(alphas.max())
    tol = _FEAS_REL_TOL * scale
    pts = []
    for i in range(m):
        for j in range(i + 1, m):
            det = directions[i, 0] * directions[j, 1] - directions[i, 1] * directions[j, 0]
            if abs(det) < 1e-12:
                continue
            x = (
                np.array(
                    [
                        alphas[i] * directions[j, 1] - alphas[j] * directions[i, 1],
                        alphas[j] * directions[i, 0] - alphas[i] * directions[j, 0],
                    ]
                )
                / det
            )
            if np.all(directions @ x <= alphas + tol):
                pts.append(x)
    if not pts:
        raise ValueError("no feasible vertices; polytope is degenerate")
    pts = np.array(pts)
    order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]), kind="stable")
    pts = pts[order]
    keep = [0]
    for k in range(1, len(pts)):
        if np.linalg.norm(pts[k] - pts[keep[-1]]) > tol:
            keep.append(k)
    if len(keep) > 1 and np.linalg.norm(pts[keep[0]] - pts[keep[-1]]) <= tol:
        keep.pop()
    verts = pts[keep]
    k = len(verts)
    edge_atoms = np.empty(k, dtype=int)
    for e in range(k):
        a, b = verts[e], verts[(e + 1) % k]
        resid = np.abs(directions @ a - alphas) + np.abs(directions @ b - alphas)
        edge_atoms[e] = int(np.argmin(resid))
    return verts, edge_atoms


def polar_vertices(directions, alphas=None) -> np.ndarray:
    """Vertices of the polar body P* = {x . v_i <= alpha_i}."""
    if alphas is None:
        p = directions
        directions, alphas = p.directions, p.alphas
    directions = as_unit_vectors(directions, "directions")
    alphas = np.asarray(alphas, dtype=float)
    if directions.shape[1] == 2:
        verts, _ = polar_polygon(directions, alphas)
        return verts
    halfspaces = np.hstack([directions, -alphas[:, None]])
    hsi = HalfspaceIntersection(halfspaces, _interior_point(directions, alphas))
    return hsi.intersections


def support_values(directions, alphas) -> np.ndarray:
    """Support values of {x . v_i <= alpha_i} at each v_i.

    These are the canonical coefficients: the smallest alpha vector
    describing the same body.  Computed from the vertex description; the
    per-index linear program is the fallback for degenerate geometry.
    """
    directions = as_unit_vectors(directions, "directions")
    alphas = np.asarray(alphas, dtype=float)
    try:
        verts = polar_vertices(directions, alphas)
        h = (verts @ directions.T).max(axis=0)
    except (QhullError, ValueError):
        h = np.empty(len(alphas))
        for i in range(len(alphas)):
            res = linprog(-directions[i], A_ub=directions, b_ub=alphas, bounds=[(None, None)] * directions.shape[1], method="highs")
            if res.status != 0:
                raise ValueError("support LP failed; directions may not positively span") from None
            h[i] = -res.fun
    # support of a sub-body never exceeds the offset of a valid constraint
    return np.minimum(h, alphas)


def canonicalize(p: DualPolytope) -> DualPolytope:
    """Replace every alpha by the support value of P* in its direction.

    The body is unchanged; the output is the unique minimal representation
    and is a fixed point of this map.
    """
    if p.canonical:
        return p
    return DualPolytope(p.directions, support_values(p.directions, p.alphas), canonical=True)


def polar_radial_batch(p: DualPolytope, points) -> tuple[np.ndarray, np.ndarray]:
    """Radial function of P* at many points, with the attaining facet index.

    rho_{P*}(u) = min over {i : u . v_i > 0} of alpha_i / (u . v_i); ties
    go to the lowest index.
    """
    pts = as_unit_vectors(points, "points")
    dots = pts @ p.directions.T
    with np.errstate(divide="ignore"):
        ratios = np.where(dots > 0.0, p.alphas[None, :] / dots, np.inf)
    idx = np.argmin(ratios, axis=1)
    vals = ratios[np.arange(len(pts)), idx]
    return vals, idx


def polar_radial(p: DualPolytope, u) -> tuple[float, int]:
    vals, idx = polar_radial_batch(p, np.asarray(u, dtype=float)[None, :])
    return float(vals[0]), int(idx[0])


def atom_radii(p: DualPolytope) -> np.ndarray:
    """Radial values of P at its own directions: beta_i = 1 / alpha_i."""
    if not p.canonical:
        raise ValueError("atom radii require the canonical representation")
    return 1.0 / p.alphas


def scale_body(p: DualPolytope, factor: float) -> DualPolytope:
    """Dilate P by ``factor`` (alphas scale by 1/factor)."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    return DualPolytope(p.directions, p.alphas / factor, canonical=p.canonical)


def normalize_scale(p: DualPolytope) -> DualPolytope:
    """Dilate so that max alpha = 1."""
    return DualPolytope(p.directions, p.alphas / p.alphas.max(), canonical=p.canonical)


def partial_rescale(p: DualPolytope, index_set, factor: float, side: str = "complement") -> DualPolytope:
    """Multiply the alphas of one side of an index split by ``factor`` in
    (0, 1], then canonicalize.

    ``side`` selects which alphas are scaled: the complement of the index
    set, or its members.  The defining intersection is not a canonical
    representation, so canonical coefficients on the *unscaled* side may
    also decrease (by a factor within [factor, 1]) when facets degenerate.
    """
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"factor must lie in (0, 1], got {factor}")
    if side not in ("complement", "members"):
        raise ValueError(f"side must be 'complement' or 'members', got {side!r}")
    idx = as_index_set(index_set, p.num_facets)
    if factor == 1.0:
        return canonicalize(p)
    scaled = p.alphas.copy()
    if side == "members":
        scaled[idx] *= factor
    else:
        mask = np.ones(p.num_facets, dtype=bool)
        mask[idx] = False
        scaled[mask] *= factor
    return canonicalize(DualPolytope(p.directions, scaled))


def extremal_stats(p: DualPolytope, index_set) -> ExtremalStats:
    if not p.canonical:
        raise ValueError("extremal stats require the canonical representation")
    idx = as_index_set(index_set, p.num_facets)
    mask = np.zeros(p.num_facets, dtype=bool)
    mask[idx] = True
    inside = p.alphas[mask]
    outside = p.alphas[~mask]
    return ExtremalStats(
        max_in=float(inside.max()),
        min_in=float(inside.min()),
        max_out=float(outside.max()),
        min_out=float(outside.min()),
    )


def radii(p: DualPolytope) -> tuple[float, float]:
    """Inradius and outradius of P about the origin.

    Uses the polar body: r_{P*} = min alpha exactly (canonical), and
    R_{P*} from vertex enumeration, falling back to a grid maximum of the
    radial function (a one-sided underestimate) if enumeration fails.
    Returns (r_P, R_P) = (1 / R_{P*}, 1 / r_{P*}).
    """
    if not p.canonical:
        raise ValueError("radii require the canonical representation")
    r_polar = float(p.alphas.min())
    try:
        verts = polar_vertices(p.directions, p.alphas)
        big_r_polar = float(np.linalg.norm(verts, axis=1).max())
    except (QhullError, ValueError):
        warnings.warn(
            "vertex enumeration failed; outradius estimated from a grid "
            "(one-sided: may underestimate R_P*)",
            RuntimeWarning,
        )
        probe = build_grid(p.dim, 8192, "uniform_angles" if p.dim == 2 else "fibonacci")
        vals, _ = polar_radial_batch(p, probe.nodes)
        big_r_polar = float(vals.max())
    return 1.0 / big_r_polar, 1.0 / r_polar


def degeneracy_clusters(p: DualPolytope, gap_ratio: float = 10.0) -> list[np.ndarray]:
    """Group facet indices by alpha scale.

    Alphas are sorted in decreasing order and cut wherever the ratio of
    consecutive values exceeds ``gap_ratio``.  Clusters are returned in
    decreasing-scale order; a single cluster means no scale separation.
    """
    if not p.canonical:
        raise ValueError("degeneracy clusters require the canonical representation")
    if gap_ratio <= 1.0:
        raise ValueError("gap_ratio must exceed 1")
    order = np.argsort(-p.alphas, kind="stable")
    sorted_a = p.alphas[order]
    clusters = []
    start = 0
    for k in range(len(sorted_a) - 1):
        if sorted_a[k] / sorted_a[k + 1] > gap_ratio:
            clusters.append(np.sort(order[start : k + 1]))
            start = k + 1
    clusters.append(np.sort(order[start:]))
    return clusters
