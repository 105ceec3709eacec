"""Independent brute-force computations for desk-scale verification.

These deliberately avoid the main pipeline's code paths: cell arcs come
from exact polygon geometry, masses from adaptive 1-d quadrature, and the
surrogate maximizer from exhaustive lattice search.  They ship in the
library (not only the tests) so the command line can replay them.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import warnings

import numpy as np
from scipy.integrate import quad

from .gauss_image import neg_log_dots
from .measures import DiscreteMeasure, QuadratureMeasure, total_mass
from .polytope import DualPolytope, polar_polygon

__all__ = [
    "ArcCells",
    "arc_cells",
    "arc_cell_masses",
    "brute_force_maximize",
    "dense_parallel_set_mass",
]


@dataclasses.dataclass(frozen=True)
class ArcCells:
    """Exact planar Gauss cells as angular intervals.

    ``intervals[i]`` lists (start, end) pairs with start in [0, 2*pi) and
    end > start (end may exceed 2*pi for wrapping arcs).  The intervals
    are disjoint up to endpoints and cover the full circle.
    """

    intervals: list[list[tuple[float, float]]]

    def lengths(self) -> np.ndarray:
        return np.array([sum(b - a for a, b in iv) for iv in self.intervals])


def arc_cells(p: DualPolytope) -> ArcCells:
    """Exact Gauss cells of a planar polytope.

    Each edge of the polygon P* subtends, as seen from the origin, the arc
    of directions whose rays exit through it; the cell of atom i is the
    union of arcs of the edges lying on constraint i.  Empty lists mark
    degenerate facets.
    """
    if p.dim != 2:
        raise ValueError("arc cells are defined for planar polytopes only")
    if not p.canonical:
        raise ValueError("arc cells require the canonical representation")
    verts, edge_atoms = polar_polygon(p.directions, p.alphas)
    angles = np.mod(np.arctan2(verts[:, 1], verts[:, 0]), 2 * math.pi)
    k = len(verts)
    intervals: list[list[tuple[float, float]]] = [[] for _ in range(p.num_facets)]
    for e in range(k):
        a = angles[e]
        b = angles[(e + 1) % k]
        if b <= a:
            b += 2 * math.pi
        if b - a < 1e-15:
            continue
        intervals[int(edge_atoms[e])].append((float(a), float(b)))
    return ArcCells(intervals=intervals)


def arc_cell_masses(p: DualPolytope, density=None) -> np.ndarray:
    """Exact cell masses under an angular density via adaptive quadrature.

    ``density`` maps an angle in radians to a density value and must be
    2*pi-periodic (wrapping cells are integrated past 2*pi); None means
    the uniform density 1.
    """
    cells = arc_cells(p)
    if density is None:
        return cells.lengths()
    masses = np.zeros(p.num_facets)
    for i, iv in enumerate(cells.intervals):
        for a, b in iv:
            val, _ = quad(density, a, b, limit=200, epsabs=1e-10, epsrel=1e-10)
            masses[i] += val
    return masses


def _merged_arcs(centers: np.ndarray, halfwidth: float) -> list[tuple[float, float]]:
    """Union of circular intervals [c - h, c + h] as disjoint sorted arcs."""
    arcs = sorted((float(c - halfwidth), float(c + halfwidth)) for c in centers)
    if not arcs:
        return []
    if halfwidth * 2 >= 2 * math.pi:
        return [(0.0, 2 * math.pi)]
    # normalize starts into [0, 2*pi)
    arcs = sorted(((a % (2 * math.pi)), (a % (2 * math.pi)) + (b - a)) for a, b in arcs)
    merged = [list(arcs[0])]
    for a, b in arcs[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    # wrap-around: last arc may reach past 2*pi into the first
    if len(merged) > 1 and merged[-1][1] >= merged[0][0] + 2 * math.pi:
        merged[0][0] = merged[-1][0] - 2 * math.pi
        merged[0][1] = max(merged[0][1], merged[-1][1] - 2 * math.pi)
        merged.pop()
    total = sum(b - a for a, b in merged)
    if total >= 2 * math.pi:
        return [(0.0, 2 * math.pi)]
    return [(a, b) for a, b in merged]


def dense_parallel_set_mass(density, omega, angle: float) -> float:
    """High-resolution mass of the parallel set of a planar direction set.

    ``density`` is a 2*pi-periodic angular density function; the parallel
    set is the union of open arcs of half-width ``angle`` around the
    directions.  Adaptive quadrature to 1e-9 absolute.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or omega.shape[1] != 2:
        raise ValueError("omega must be a set of planar unit vectors")
    if not 0.0 < angle < math.pi:
        raise ValueError("angle must lie in (0, pi)")
    centers = np.arctan2(omega[:, 1], omega[:, 0])
    arcs = _merged_arcs(centers, angle)
    total = 0.0
    for a, b in arcs:
        val, _ = quad(density, a, b, limit=400, epsabs=1e-10, epsrel=1e-10)
        total += val
    return total


def brute_force_maximize(
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    box_halfwidth: float = 1.0,
    points_per_dim: int = 9,
) -> tuple[np.ndarray, float]:
    """Exhaustive lattice maximization of the surrogate objective.

    Searches t over a lattice in [-w, w]^m with t[0] pinned to 0 (the
    dilation gauge, valid for balanced masses), then refines once on a
    10x finer lattice around the best point.  Ties resolve to the
    lexicographically smallest t.  Returns (t_star, F_star).
    """
    m = mu.num_atoms
    if m > 6:
        raise ValueError("brute-force search is limited to 6 atoms")
    if points_per_dim**m > 10**7:
        raise ValueError("lattice budget exceeded (points_per_dim ** m > 1e7)")
    if abs(total_mass(mu) - total_mass(lam)) > 1e-6 * total_mass(lam):
        warnings.warn("masses are not balanced; the pinned-gauge search is biased", RuntimeWarning)

    offsets = neg_log_dots(lam.grid.nodes, mu.atoms)
    node_masses = lam.node_masses
    weights = mu.weights
    buf = np.empty(offsets.shape[0])

    def objective(t: np.ndarray) -> float:
        buf.fill(np.inf)
        for i in range(m):
            np.minimum(buf, t[i] + offsets[:, i], out=buf)
        return float(-(weights @ t) + node_masses @ buf)

    def sweep(center: np.ndarray, halfwidth: float) -> tuple[np.ndarray, float]:
        steps = np.linspace(-halfwidth, halfwidth, points_per_dim)
        best_t, best_f = None, -np.inf
        t = np.zeros(m)
        for combo in itertools.product(steps, repeat=m - 1):
            t[0] = 0.0
            t[1:] = center[1:] + np.asarray(combo)
            f = objective(t)
            if f > best_f or (f == best_f and tuple(t) < tuple(best_t)):
                best_t, best_f = t.copy(), f
        return best_t, best_f

    t1, f1 = sweep(np.zeros(m), box_halfwidth)
    spacing = 2.0 * box_halfwidth / max(1, points_per_dim - 1)
    fine_halfwidth = (spacing / 10.0) * (points_per_dim - 1) / 2.0
    t2, f2 = sweep(t1, fine_halfwidth)
    if f2 > f1 or (f2 == f1 and tuple(t2) < tuple(t1)):
        return t2, f2
    return t1, f1
