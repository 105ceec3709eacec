"""Measures on the unit sphere.

Two representations are used throughout: a discrete measure given by
atoms and positive weights, and an absolutely continuous measure given by
a density sampled on a fixed quadrature grid.  All masses of the
continuous measure are grid sums, so every comparison in the package
shares a single quadrature tolerance (see :func:`mass_tolerance`).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ._validation import as_direction_set, as_float_array, as_positive_weights
from .sphere import QuadratureGrid, hemisphere_witness, outer_parallel_mask


@dataclasses.dataclass(frozen=True)
class DiscreteMeasure:
    """Finite sum of point masses mu_i at pairwise-distinct directions v_i.

    The atoms must positively span: no closed hemisphere contains all of
    them.  This guarantees bodies built on these directions are bounded
    with the origin interior.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = as_direction_set(self.atoms, "atoms")
        weights = as_positive_weights(self.weights, atoms.shape[0], "weights")
        if atoms.shape[0] < atoms.shape[1] + 1:
            raise ValueError(
                f"need at least dim+1 = {atoms.shape[1] + 1} atoms, got {atoms.shape[0]}"
            )
        if hemisphere_witness(atoms) is not None:
            raise ValueError("atoms are contained in a closed hemisphere")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[0]


@dataclasses.dataclass(frozen=True)
class QuadratureMeasure:
    """Absolutely continuous measure as a nonnegative density on a grid."""

    grid: QuadratureGrid
    density: np.ndarray

    def __post_init__(self):
        density = as_float_array(self.density, "density", ndim=1)
        if density.shape[0] != self.grid.count:
            raise ValueError("density must have one value per grid node")
        if np.any(density < 0):
            raise ValueError("density must be nonnegative")
        if float(self.grid.weights @ density) <= 0.0:
            raise ValueError("measure has zero total mass")
        object.__setattr__(self, "density", density)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def node_masses(self) -> np.ndarray:
        return self.grid.weights * self.density


def uniform_measure(grid: QuadratureGrid) -> QuadratureMeasure:
    return QuadratureMeasure(grid, np.ones(grid.count))


def caps_measure(grid: QuadratureGrid, centers, halfwidths, values, background: float = 0.0) -> QuadratureMeasure:
    """Density equal to a constant on each spherical cap, sampled on the grid.

    Overlapping caps add.  ``background`` is the density outside all caps.
    """
    centers = as_direction_set(centers, "centers")
    halfwidths = as_float_array(halfwidths, "halfwidths", ndim=1)
    values = as_float_array(values, "values", ndim=1)
    if not (len(centers) == len(halfwidths) == len(values)):
        raise ValueError("centers, halfwidths and values must have equal length")
    density = np.full(grid.count, float(background))
    dots = grid.nodes @ centers.T
    for j in range(len(centers)):
        density[dots[:, j] > np.cos(halfwidths[j])] += values[j]
    return QuadratureMeasure(grid, density)


def total_mass(measure) -> float:
    if isinstance(measure, DiscreteMeasure):
        return float(np.sum(measure.weights))
    if isinstance(measure, QuadratureMeasure):
        return float(measure.grid.weights @ measure.density)
    raise TypeError(f"expected DiscreteMeasure or QuadratureMeasure, got {type(measure)!r}")


def normalize_to(lam: QuadratureMeasure, target_mass: float) -> QuadratureMeasure:
    """Rescale the density so the total mass equals ``target_mass``."""
    if target_mass <= 0:
        raise ValueError("target_mass must be positive")
    current = total_mass(lam)
    return QuadratureMeasure(lam.grid, lam.density * (target_mass / current))


def parallel_set_mass(lam: QuadratureMeasure, omega, angle: float) -> float:
    """Mass of the open angular neighborhood of radius ``angle`` around omega."""
    mask = outer_parallel_mask(lam.grid.nodes, omega, angle)
    return float(np.sum(lam.node_masses[mask]))


def mass_tolerance(lam: QuadratureMeasure, rel: float = 1e-3) -> float:
    """Default tolerance for mass comparisons against grid sums.

    A fraction of the total mass; ``rel`` = 1e-3 is calibrated for 1e5
    nodes on the circle and 2e5 nodes on the 2-sphere, where the
    dominant error is cell-boundary quantization (a handful of node
    masses per boundary).
    """
    return rel * total_mass(lam)
