"""Shared generators for randomized geometry tests."""

import numpy as np

from gaussimage import (
    DiscreteMeasure,
    DualPolytope,
    canonicalize,
    caps_measure,
    compute_partition,
    hemisphere_witness,
    normalize_scale,
    normalize_to,
)

# value of the symmetric four-cell instance's functional, frozen from the
# 1-d quadrature oracle in test_gauss_image.py::test_functional_square_oracle
SQUARE_PHI = 0.6913098038983282


def random_directions(rng, m, dim=2):
    """m unit vectors not contained in any closed hemisphere."""
    while True:
        v = rng.normal(size=(m, dim))
        v /= np.linalg.norm(v, axis=1)[:, None]
        if hemisphere_witness(v) is None:
            return v


def random_canonical_polytope(rng, m, dim=2, low=0.6, high=1.0):
    dirs = random_directions(rng, m, dim)
    p = canonicalize(DualPolytope(dirs, rng.uniform(low, high, m)))
    return normalize_scale(p)


def measure_from_polytope(p, lam, min_cell=1e-4):
    """Discrete measure equal to the polytope's own cell masses.

    By construction it is the Gauss image measure of lam, so the pair
    satisfies the weak relation and the solver should reproduce p up to
    the problem's dilation/translation-free symmetries.  Returns None if
    some cell is too light to give a valid strictly-positive measure.
    """
    g = compute_partition(p, lam).cell_masses
    if g.min() <= min_cell:
        return None
    return DiscreteMeasure(p.directions, g)


def solvable_instance(rng, lam, m_range=(4, 9), dim=2):
    """Random (mu, generating polytope) pair satisfying the weak relation."""
    while True:
        m = int(rng.integers(*m_range))
        p = random_canonical_polytope(rng, m, dim=dim, low=0.7, high=1.0)
        mu = measure_from_polytope(p, lam)
        if mu is not None:
            return mu, p


def caps_instance(grid, *, atom_offset=0.075, cap_halfwidth=0.3, weight=1.0):
    """Cap-concentrated pair: fails the classical relation, passes the weak one.

    Atoms sit just off the two poles of the x-axis; lambda is uniform on
    the two caps around the poles and zero elsewhere, normalized to the
    discrete total mass.
    """
    d = atom_offset
    angles = (d, -d, np.pi - d, np.pi + d)
    atoms = np.array([[np.cos(a), np.sin(a)] for a in angles])
    mu = DiscreteMeasure(atoms, np.full(4, weight))
    lam = caps_measure(grid, [[1.0, 0.0], [-1.0, 0.0]], [cap_halfwidth] * 2, [1.0, 1.0])
    return mu, normalize_to(lam, 4.0 * weight)


def two_scale_polytope(atoms, small_scale, ratio):
    """Canonical two-scale body on caps-style atoms: unit alphas on the
    first two directions, (ratio * small, small) on the last two."""
    alphas = np.array([1.0, 1.0, ratio * small_scale, small_scale])
    p = canonicalize(DualPolytope(atoms, alphas))
    assert np.allclose(p.alphas, alphas, rtol=0, atol=1e-12), "construction must be canonical"
    return p
