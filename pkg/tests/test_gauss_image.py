import math

import numpy as np
import pytest
from scipy.integrate import quad

from gaussimage import (
    DiscreteMeasure,
    DualPolytope,
    arc_cell_masses,
    canonicalize,
    compute_partition,
    log_functional,
    partial_rescale,
    pushforward_integral,
    scale_body,
    supergradient,
    surrogate_objective,
    total_mass,
)
from helpers import SQUARE_PHI, random_canonical_polytope, measure_from_polytope


def test_functional_square_oracle():
    # independent 1-d quadrature oracle for the frozen constant: four
    # symmetric cells contribute 8 * int_0^{pi/4} -log(cos) each
    val, err = quad(lambda x: -math.log(math.cos(x)), 0, math.pi / 4, epsabs=1e-13)
    assert err < 1e-12
    assert 8 * val == pytest.approx(SQUARE_PHI, abs=1e-12)


class TestComputePartition:
    def test_square_quarters(self, square_polytope, circle_uniform):
        part = compute_partition(square_polytope, circle_uniform)
        assert np.allclose(part.cell_masses, math.pi / 2, atol=1e-9)

    def test_mass_conservation(self, circle_uniform):
        rng = np.random.default_rng(1)
        for _ in range(5):
            p = random_canonical_polytope(rng, int(rng.integers(4, 9)))
            part = compute_partition(p, circle_uniform)
            assert np.all(part.cell_masses >= 0)
            assert part.cell_masses.sum() == pytest.approx(total_mass(circle_uniform), abs=1e-12)

    def test_rescaled_cell_matches_arc_oracle(self, square_polytope, circle_uniform):
        p = partial_rescale(square_polytope, [0], 0.5, side="members")
        part = compute_partition(p, circle_uniform)
        oracle = arc_cell_masses(p)
        assert oracle[0] == pytest.approx(2 * math.atan(2), abs=1e-12)
        assert np.abs(part.cell_masses - oracle).max() < 1e-3 * total_mass(circle_uniform)

    def test_zero_density_cell(self, square_polytope, circle_grid):
        from gaussimage import QuadratureMeasure

        # density vanishing on the cell of the first atom
        angles = np.arctan2(circle_grid.nodes[:, 1], circle_grid.nodes[:, 0])
        density = np.where(np.abs(angles) <= math.pi / 4 + 0.01, 0.0, 1.0)
        lam = QuadratureMeasure(circle_grid, density)
        part = compute_partition(square_polytope, lam)
        assert part.cell_masses[0] == 0.0

    def test_requires_canonical(self, square_dirs, circle_uniform):
        with pytest.raises(ValueError, match="canonical"):
            compute_partition(DualPolytope(square_dirs, np.ones(4)), circle_uniform)

    def test_assignment_invariant_under_scaling(self, circle_uniform):
        rng = np.random.default_rng(4)
        for _ in range(5):
            p = random_canonical_polytope(rng, 6)
            base = compute_partition(p, circle_uniform).assignment
            for a in (0.1, 2.0, 10.0):
                scaled = compute_partition(scale_body(p, a), circle_uniform).assignment
                assert np.array_equal(base, scaled)


class TestLogFunctional:
    def test_square_value(self, square_polytope, square_measure, circle_uniform):
        fv = log_functional(square_polytope, square_measure, circle_uniform)
        assert fv.mu_part == pytest.approx(0.0, abs=1e-12)
        assert fv.lambda_part == pytest.approx(SQUARE_PHI, abs=1e-6)
        assert fv.total == fv.mu_part + fv.lambda_part

    def test_dilation_identity(self, circle_uniform):
        rng = np.random.default_rng(9)
        for _ in range(5):
            p = random_canonical_polytope(rng, 5)
            weights = rng.uniform(0.5, 2.0, 5)
            mu = DiscreteMeasure(p.directions, weights)
            gap = total_mass(mu) - total_mass(circle_uniform)
            base = log_functional(p, mu, circle_uniform).total
            for a in (0.1, 2.0, 10.0):
                scaled = log_functional(scale_body(p, a), mu, circle_uniform).total
                assert abs(scaled - base - math.log(a) * gap) <= 1e-9

    def test_rotation_invariance(self, circle_uniform, square_measure, square_polytope):
        phi = 0.37
        rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        dirs = square_measure.atoms @ rot.T
        mu_r = DiscreteMeasure(dirs, square_measure.weights)
        p_r = canonicalize(DualPolytope(dirs, np.ones(4)))
        base = log_functional(square_polytope, square_measure, circle_uniform).total
        rotated = log_functional(p_r, mu_r, circle_uniform).total
        assert rotated == pytest.approx(base, abs=1e-6)

    def test_atoms_must_match(self, square_polytope, circle_uniform):
        other = DiscreteMeasure(
            np.array([[0.0, 1.0], [1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]]), np.ones(4)
        )
        with pytest.raises(ValueError, match="coincide"):
            log_functional(square_polytope, other, circle_uniform)


class TestSurrogate:
    def test_equals_functional_at_canonical(self, square_measure, circle_uniform, square_polytope):
        f = surrogate_objective(np.zeros(4), square_measure, circle_uniform)
        phi = log_functional(square_polytope, square_measure, circle_uniform).total
        assert f == pytest.approx(phi, abs=1e-12)

    def test_shift_invariance_with_balanced_masses(self, square_measure, circle_uniform):
        rng = np.random.default_rng(3)
        t = rng.uniform(-1, 0, 4)
        f0 = surrogate_objective(t, square_measure, circle_uniform)
        f1 = surrogate_objective(t + 0.7, square_measure, circle_uniform)
        assert f1 == pytest.approx(f0, abs=1e-9)

    def test_below_functional_when_not_canonical(self, circle_uniform):
        rt2 = math.sqrt(0.5)
        dirs = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [rt2, rt2]], dtype=float)
        mu = DiscreteMeasure(dirs, np.full(5, 2 * math.pi / 5))
        t = np.log(np.array([1.0, 1.0, 1.0, 1.0, 2.0]))
        f = surrogate_objective(t, mu, circle_uniform)
        p = canonicalize(DualPolytope(dirs, np.exp(t)))
        phi = log_functional(p, mu, circle_uniform).total
        assert f < phi - 1e-6

    def test_concavity_certificate(self, circle_uniform):
        rng = np.random.default_rng(21)
        dirs = random_canonical_polytope(rng, 6).directions
        mu = DiscreteMeasure(dirs, np.full(6, total_mass(circle_uniform) / 6))
        for _ in range(20):
            t1 = rng.uniform(-1.5, 0.5, 6)
            t2 = rng.uniform(-1.5, 0.5, 6)
            theta = float(rng.uniform(0.05, 0.95))
            lhs = surrogate_objective(theta * t1 + (1 - theta) * t2, mu, circle_uniform)
            rhs = theta * surrogate_objective(t1, mu, circle_uniform) + (1 - theta) * surrogate_objective(t2, mu, circle_uniform)
            assert lhs >= rhs - 1e-12


def test_mass_surplus_makes_rescaling_profitable(circle_uniform):
    # if the complement cells carry less mass than mu prescribes there,
    # shrinking the complement alphas slightly strictly increases phi
    rng = np.random.default_rng(52)
    from gaussimage import mass_tolerance

    eps = mass_tolerance(circle_uniform)
    mass = total_mass(circle_uniform)
    built = 0
    while built < 5:
        m = int(rng.integers(5, 8))
        p = random_canonical_polytope(rng, m, low=0.7, high=1.0)
        members = np.sort(rng.choice(m, size=int(rng.integers(1, m - 1)), replace=False))
        comp = np.setdiff1d(np.arange(m), members)
        g = compute_partition(p, circle_uniform).cell_masses
        surplus = g[comp].sum() + 3 * eps
        if surplus > 0.85 * mass or g.min() < 1e-3:
            continue
        weights = np.empty(m)
        weights[comp] = g[comp] / g[comp].sum() * surplus
        weights[members] = g[members] / g[members].sum() * (mass - surplus)
        mu = DiscreteMeasure(p.directions, weights)
        p_shrunk = partial_rescale(p, members, 1.0 - 1e-3, side="complement")
        phi_0 = log_functional(p, mu, circle_uniform).total
        phi_1 = log_functional(p_shrunk, mu, circle_uniform).total
        assert phi_1 > phi_0
        built += 1


class TestSupergradient:
    def test_zero_at_symmetric_point(self, square_polytope, square_measure, circle_uniform):
        sg = supergradient(square_polytope, square_measure, circle_uniform)
        assert np.abs(sg).max() <= 1e-3 * total_mass(circle_uniform)

    def test_enlarged_cell_pushes_back(self, square_dirs, square_measure, circle_uniform):
        p = canonicalize(DualPolytope(square_dirs, np.array([0.5, 1, 1, 1.0])))
        sg = supergradient(p, square_measure, circle_uniform)
        expected = 2 * math.atan(2) - math.pi / 2  # exact enlarged-cell mass surplus
        assert sg[0] == pytest.approx(expected, abs=1e-3)
        assert sg[0] > 0

    def test_matches_finite_differences(self, circle_uniform):
        rng = np.random.default_rng(12)
        p = random_canonical_polytope(rng, 5)
        mu = measure_from_polytope(p, circle_uniform)
        if mu is None:
            pytest.skip("degenerate random draw")
        h = 1e-4
        for _ in range(5):
            t = np.log(p.alphas) + rng.uniform(-0.3, 0.0, 5)
            pt = canonicalize(DualPolytope(p.directions, np.exp(t)))
            sg = supergradient(pt, mu, circle_uniform)
            for i in range(5):
                e = np.zeros(5)
                e[i] = h
                fd = (
                    surrogate_objective(np.log(pt.alphas) + e, mu, circle_uniform)
                    - surrogate_objective(np.log(pt.alphas) - e, mu, circle_uniform)
                ) / (2 * h)
                assert abs(fd - sg[i]) <= 1e-3 * total_mass(mu)


class TestPushforward:
    def test_constant(self, square_polytope, circle_uniform):
        v = pushforward_integral(square_polytope, circle_uniform, lambda u: 1.0)
        assert v == pytest.approx(total_mass(circle_uniform), abs=1e-12)

    def test_indicator_of_atom(self, square_polytope, circle_uniform, square_dirs):
        v = pushforward_integral(
            square_polytope, circle_uniform, lambda u: float(np.allclose(u, square_dirs[0]))
        )
        g = compute_partition(square_polytope, circle_uniform).cell_masses
        assert v == pytest.approx(g[0], abs=1e-12)

    def test_odd_function_vanishes(self, square_polytope, circle_uniform):
        v = pushforward_integral(square_polytope, circle_uniform, lambda u: u[0])
        assert v == pytest.approx(0.0, abs=1e-9)
