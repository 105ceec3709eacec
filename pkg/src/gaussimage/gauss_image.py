"""The radial Gauss image partition and the associated functional.

For a polytope P with vertices on the atom directions, the Gauss image
measure of the continuous measure is purely atomic: every grid node u is
assigned to the facet of P* its ray exits through, i.e. the index
attaining min_i alpha_i / (u . v_i).  The cell masses g_i are the grid
masses of these assignment cells.

The functional

    Phi(P) = integral(log rho_P) d mu + integral(log rho_{P*}) d lambda

is concave in t = log(alpha) through the surrogate F(t) below, whose
supergradient is exactly g - mu; its maximizers solve the prescribed
cell-mass problem.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .measures import DiscreteMeasure, QuadratureMeasure
from .polytope import DualPolytope, polar_radial_batch

__all__ = [
    "GaussPartition",
    "FunctionalValue",
    "compute_partition",
    "log_functional",
    "surrogate_objective",
    "supergradient",
    "pushforward_integral",
]


@dataclasses.dataclass(frozen=True)
class GaussPartition:
    """Per-node facet assignment and the resulting per-atom cell masses."""

    assignment: np.ndarray
    cell_masses: np.ndarray


@dataclasses.dataclass(frozen=True)
class FunctionalValue:
    total: float
    mu_part: float
    lambda_part: float


def _require_canonical(p: DualPolytope) -> None:
    if not p.canonical:
        raise ValueError("operation requires a canonical polytope; call canonicalize() first")


def _require_matching_atoms(p: DualPolytope, mu: DiscreteMeasure) -> None:
    if p.directions.shape != mu.atoms.shape or not np.allclose(
        p.directions, mu.atoms, rtol=0.0, atol=1e-12
    ):
        raise ValueError("polytope directions must coincide with the atoms of mu")


def cell_masses_from_assignment(assignment: np.ndarray, node_masses: np.ndarray, m: int) -> np.ndarray:
    """Per-cell grid masses; summed cell by cell for accuracy."""
    masses = np.empty(m)
    for i in range(m):
        masses[i] = float(np.sum(node_masses[assignment == i]))
    return masses


def compute_partition(p: DualPolytope, lam: QuadratureMeasure) -> GaussPartition:
    """Assign every grid node to its Gauss image cell and total the masses.

    The directions positively span, so every node has at least one facet
    with positive dot product and no node is left unassigned; the cell
    masses therefore sum to the total mass of lambda.
    """
    _require_canonical(p)
    _, assignment = polar_radial_batch(p, lam.grid.nodes)
    masses = cell_masses_from_assignment(assignment, lam.node_masses, p.num_facets)
    return GaussPartition(assignment=assignment, cell_masses=masses)


def log_functional(p: DualPolytope, mu: DiscreteMeasure, lam: QuadratureMeasure) -> FunctionalValue:
    """Value of Phi at a canonical polytope, split into its two integrals.

    In the canonical representation rho_P(v_i) = 1/alpha_i, so the
    discrete part is -sum mu_i log alpha_i; the continuous part is the
    grid sum of log rho_{P*}.
    """
    _require_canonical(p)
    _require_matching_atoms(p, mu)
    mu_part = -float(mu.weights @ np.log(p.alphas))
    vals, _ = polar_radial_batch(p, lam.grid.nodes)
    lambda_part = float(lam.node_masses @ np.log(vals))
    return FunctionalValue(total=mu_part + lambda_part, mu_part=mu_part, lambda_part=lambda_part)


def neg_log_dots(nodes: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """-log(u . v_i) where positive, +inf elsewhere; the per-node affine
    offsets of the surrogate objective."""
    dots = nodes @ directions.T
    out = np.full(dots.shape, np.inf)
    np.negative(np.log(dots, out=out, where=dots > 0.0), out=out, where=dots > 0.0)
    return out


def surrogate_objective(log_alphas, mu: DiscreteMeasure, lam: QuadratureMeasure, directions=None) -> float:
    """Concave surrogate F(t) for Phi over unconstrained t = log(alpha).

    F(t) = -sum_i mu_i t_i + sum_k w_k rho_k min_{i: u_k.v_i>0} (t_i - log(u_k.v_i)).

    F(t) <= Phi(canonicalize(exp t)) with equality exactly at canonical t,
    since the min formula gives rho_{P*} for any valid representation
    while the linear term understates the discrete integral when some
    alpha is not minimal.
    """
    t = np.asarray(log_alphas, dtype=float)
    dirs = mu.atoms if directions is None else np.asarray(directions, dtype=float)
    if t.shape != (dirs.shape[0],):
        raise ValueError("log_alphas must have one entry per direction")
    offsets = neg_log_dots(lam.grid.nodes, dirs)
    vals = (t[None, :] + offsets).min(axis=1)
    return float(-(mu.weights @ t) + lam.node_masses @ vals)


def supergradient(p: DualPolytope, mu: DiscreteMeasure, lam: QuadratureMeasure) -> np.ndarray:
    """Ascent direction g - mu of the surrogate at t = log(alpha).

    Component i is the mass surplus of cell i; at a solution every
    component vanishes up to quadrature error.
    """
    _require_matching_atoms(p, mu)
    part = compute_partition(p, lam)
    return part.cell_masses - mu.weights


def pushforward_integral(p: DualPolytope, lam: QuadratureMeasure, f) -> float:
    """Integral of f against the Gauss image measure of lambda.

    The measure is atomic on the polytope directions, so the integral is
    sum_i f(v_i) g_i; this equals the node-side sum of f composed with
    the cell assignment (the same finite sum regrouped), which is checked.
    """
    part = compute_partition(p, lam)
    f_atoms = np.array([float(f(v)) for v in p.directions])
    by_atom = float(f_atoms @ part.cell_masses)
    by_node = float(np.sum(lam.node_masses * f_atoms[part.assignment]))
    scale = max(1.0, float(np.abs(lam.node_masses).sum() * np.abs(f_atoms).max()))
    if abs(by_atom - by_node) > 1e-12 * scale:
        raise AssertionError(
            f"pushforward computation paths disagree: {by_atom!r} vs {by_node!r}"
        )
    return by_atom
