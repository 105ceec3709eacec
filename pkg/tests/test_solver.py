import math

import numpy as np
import pytest
from sklearn.base import clone

from gaussimage import (
    DiscreteMeasure,
    GaussImageSolver,
    SolverConfig,
    canonicalize,
    compute_partition,
    degeneracy_clusters,
    find_uniform_alpha,
    log_functional,
    mass_tolerance,
    normalize_to,
    radii,
    radius_ratio_lower_bound,
    ratio_improvement_loop,
    rescale_recovery_step,
    solve,
    total_mass,
)
from helpers import SQUARE_PHI, caps_instance, solvable_instance, two_scale_polytope


class TestSolve:
    def test_square_from_uneven_start(self, square_measure, circle_uniform):
        cfg = SolverConfig(init_alphas=(1.0, 0.3, 0.7, 0.5))
        rep = solve(square_measure, circle_uniform, cfg)
        assert rep.converged
        assert rep.residual_inf <= 1e-3 * 2 * math.pi
        alphas = rep.final_polytope.alphas
        assert (alphas.max() - alphas.min()) / alphas.max() <= 2e-2
        assert rep.phi_trace[-1] == pytest.approx(SQUARE_PHI, abs=2e-3)

    def test_mass_mismatch_points_to_normalize(self, square_dirs, circle_uniform):
        mu = DiscreteMeasure(square_dirs, np.full(4, 1.0))
        with pytest.raises(ValueError, match="normalize_to"):
            solve(mu, circle_uniform)

    def test_final_polytope_is_normalized_canonical(self, square_measure, circle_uniform):
        rep = solve(square_measure, circle_uniform, SolverConfig(seed=5, init="random"))
        p = rep.final_polytope
        assert p.canonical
        assert p.alphas.max() == pytest.approx(1.0, abs=0)

    def test_stationarity_is_cell_mass_match(self, square_measure, circle_uniform):
        rep = solve(square_measure, circle_uniform)
        g = compute_partition(rep.final_polytope, circle_uniform).cell_masses
        assert np.abs(g - square_measure.weights).max() == pytest.approx(rep.residual_inf, abs=1e-15)

    def test_determinism(self, circle_uniform):
        mu, _ = solvable_instance(np.random.default_rng(3), circle_uniform, (5, 8))
        cfg = SolverConfig(seed=11, init="random")
        r1 = solve(mu, circle_uniform, cfg)
        r2 = solve(mu, circle_uniform, cfg)
        assert np.array_equal(r1.final_polytope.alphas, r2.final_polytope.alphas)
        assert np.array_equal(r1.phi_trace, r2.phi_trace)
        assert np.array_equal(r1.residual_trace, r2.residual_trace)
        assert r1.rescale_events == r2.rescale_events

    def test_ascent_over_windows(self, circle_uniform):
        mu, _ = solvable_instance(np.random.default_rng(29), circle_uniform, (6, 9))
        rep = solve(mu, circle_uniform, SolverConfig(seed=2, init="random"))
        eps = mass_tolerance(circle_uniform)
        f = rep.phi_trace
        window = 100
        for i in range(len(f) - window):
            assert f[i + window] >= f[i] - eps

    def test_normalization_step_neutral(self, square_measure, circle_uniform):
        from gaussimage import surrogate_objective

        rng = np.random.default_rng(13)
        t = rng.uniform(-1, 0, 4)
        f0 = surrogate_objective(t, square_measure, circle_uniform)
        f1 = surrogate_objective(t - t.max(), square_measure, circle_uniform)
        assert abs(f1 - f0) <= 1e-9

    @pytest.mark.parametrize("rule,step", [("diminishing", None), ("fixed", 0.01)])
    def test_fallback_step_rules(self, square_measure, circle_uniform, rule, step):
        # a fixed step length stalls at its own scale, so it needs a small one
        cfg = SolverConfig(step_rule=rule, step_size=step, init_alphas=(1.0, 0.6, 0.8, 0.7), max_iters=3000)
        rep = solve(square_measure, circle_uniform, cfg)
        assert rep.converged

    def test_warns_without_weak_relation(self, square_dirs, circle_uniform):
        mu = DiscreteMeasure(square_dirs, [4.0, 0.7610575, 0.7610575, 0.76106153])
        with pytest.warns(RuntimeWarning, match="weak"):
            solve(mu, circle_uniform, SolverConfig(max_iters=50))

    def test_matches_brute_force_maximizer(self, circle_uniform):
        from gaussimage import brute_force_maximize

        mu, _ = solvable_instance(np.random.default_rng(61), circle_uniform, (3, 4))
        rep = solve(mu, circle_uniform, SolverConfig(seed=1, init="random", tol=3e-4))
        # 21-point lattice refined 10x resolves log-alpha to ~3e-3
        t_star, _ = brute_force_maximize(mu, circle_uniform, 0.6, 21)
        brute_alphas = np.exp(t_star - t_star.max())
        assert np.allclose(rep.final_polytope.alphas, brute_alphas, rtol=1e-2)


def test_solve_3d_random_instance(sphere_uniform):
    from helpers import solvable_instance

    mu, _ = solvable_instance(np.random.default_rng(8), sphere_uniform, (5, 8), dim=3)
    rep = solve(mu, sphere_uniform, SolverConfig(seed=1, init="random"))
    assert rep.converged
    assert rep.residual_inf <= 1e-3 * total_mass(mu)
    assert rep.final_polytope.dim == 3


def test_in_loop_recovery_trigger(circle_uniform):
    # caps atoms against a uniform lambda: the injected two-scale start is
    # far from solving, and negligible fixed steps freeze the ascent, so
    # the stall detector must fire and repair the scale split itself
    mu, _ = caps_instance(circle_uniform.grid)
    lam = normalize_to(circle_uniform, total_mass(mu))
    cfg = SolverConfig(
        step_rule="fixed",
        step_size=1e-9,
        init_alphas=(1.0, 1.0, 1e-6, 1e-6),
        max_iters=30,
        recovery_interval=5,
    )
    rep = solve(mu, lam, cfg)
    assert len(rep.rescale_events) >= 1
    event = rep.rescale_events[0]
    assert event.index_set == (0, 1)
    # the lifted scale lands at sin(uniform_alpha) by the recovery formula
    assert rep.min_alpha_trace[-1] >= 0.9 * math.sin(rep.uniform_alpha_used)


class TestCapsNonUniqueness:
    def test_multiple_optima_share_value(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        eps = mass_tolerance(lam)
        finals, phis = [], []
        for seed in (0, 1, 2):
            rep = solve(mu, lam, SolverConfig(seed=seed, init="random"))
            assert rep.converged
            finals.append(rep.final_polytope.alphas)
            phis.append(rep.phi_trace[-1])
        assert max(phis) - min(phis) <= eps
        spread = max(np.abs(a - finals[0]).max() for a in finals[1:])
        assert spread > 0.01  # genuinely different bodies


class TestRecovery:
    def test_two_scale_lift_matches_formula(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        alpha_u = find_uniform_alpha(mu, lam)
        p = two_scale_polytope(mu.atoms, 1e-3, 1.5)
        out = rescale_recovery_step(p, mu, lam, alpha_u)
        assert out.applied
        s = math.sin(alpha_u)
        claimed = (1e-3 / 1.5e-3) * 1.0 * s
        assert out.polytope.alphas.min() == pytest.approx(claimed, rel=1e-9)
        assert out.polytope.alphas.max() == pytest.approx(1.0, abs=1e-12)
        assert out.factor == pytest.approx(1.5e-3 / s, rel=1e-12)

    def test_phi_does_not_decrease(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        alpha_u = find_uniform_alpha(mu, lam)
        eps = mass_tolerance(lam)
        p = two_scale_polytope(mu.atoms, 1e-3, 1.5)
        out = rescale_recovery_step(p, mu, lam, alpha_u)
        before = log_functional(p, mu, lam).total
        after = log_functional(out.polytope, mu, lam).total
        assert after >= before - eps

    def test_single_cluster_unchanged(self, square_measure, circle_uniform, square_polytope):
        out = rescale_recovery_step(square_polytope, square_measure, circle_uniform, math.pi / 4)
        assert not out.applied
        assert out.polytope is square_polytope

    def test_multi_scale_reduces_cluster_count(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        alpha_u = find_uniform_alpha(mu, lam)
        p = canonicalize(
            two_scale_polytope(mu.atoms, 1e-3, 1.5).__class__(
                mu.atoms, np.array([1.0, 0.8, 1.5e-4, 1e-4])
            )
        )
        n0 = len(degeneracy_clusters(p))
        assert n0 >= 2
        out = rescale_recovery_step(p, mu, lam, alpha_u)
        assert out.applied
        assert len(degeneracy_clusters(out.polytope)) <= n0 - 1

    def test_requires_normalized_canonical(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        p = two_scale_polytope(mu.atoms, 1e-3, 1.5)
        from gaussimage import scale_body

        with pytest.raises(ValueError, match="max-alpha"):
            rescale_recovery_step(scale_body(p, 2.0), mu, lam, 1.0)


class TestRatioImprovement:
    def test_square_is_noop(self, square_measure, circle_uniform):
        rep = solve(square_measure, circle_uniform)
        p = ratio_improvement_loop(
            rep.final_polytope, square_measure, circle_uniform, uniform_alpha=rep.uniform_alpha_used
        )
        assert np.allclose(p.alphas, rep.final_polytope.alphas, atol=1e-12)

    def test_enforces_prefix_ratios_and_keeps_residual(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        alpha_u = find_uniform_alpha(mu, lam)
        rep = solve(mu, lam, SolverConfig(seed=0, init="random"))
        p = ratio_improvement_loop(rep.final_polytope, mu, lam, uniform_alpha=alpha_u)
        c = math.sin(alpha_u)
        order = np.argsort(p.alphas)
        sorted_a = p.alphas[order]
        from gaussimage import hemisphere_witness

        k = 0
        for l in range(len(order) - 1, 0, -1):
            if hemisphere_witness(p.directions[order[:l]]) is not None:
                k = l
                break
        for l in range(1, k + 1):
            assert sorted_a[l - 1] / sorted_a[l] >= c * (1 - 1e-9)
        resid = np.abs(compute_partition(p, lam).cell_masses - mu.weights).max()
        assert resid <= 1e-3 * total_mass(mu)
        k2, gamma, bound = radius_ratio_lower_bound(p, alpha_u, lam.grid.nodes)
        r, big_r = radii(p)
        assert r / big_r >= bound - 1e-12

    def test_already_satisfying_unchanged(self, circle_grid):
        mu, lam = caps_instance(circle_grid)
        alpha_u = find_uniform_alpha(mu, lam)
        rep = solve(mu, lam)  # symmetric start: both scales equal
        p1 = ratio_improvement_loop(rep.final_polytope, mu, lam, uniform_alpha=alpha_u)
        p2 = ratio_improvement_loop(p1, mu, lam, uniform_alpha=alpha_u)
        assert np.allclose(p1.alphas, p2.alphas, atol=1e-12)

    def test_requires_uniform_constant(self, square_dirs, circle_uniform, square_polytope):
        # balanced but over-concentrated: no uniform constant exists
        mu = DiscreteMeasure(square_dirs, [4.0, 0.7610575, 0.7610575, 0.76106153])
        with pytest.raises(ValueError, match="uniform"):
            ratio_improvement_loop(square_polytope, mu, circle_uniform)


class TestEstimator:
    def test_fit_predict(self, square_measure, circle_uniform):
        est = GaussImageSolver().fit(square_measure, circle_uniform)
        assert est.residual_ <= 1e-3 * 2 * math.pi
        labels = est.predict(np.array([[1.0, 0.0], [0.0, -1.0]]))
        assert labels.tolist() == [0, 3]

    def test_sklearn_protocol(self, square_measure, circle_uniform):
        est = GaussImageSolver(tol=5e-4, seed=7)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        est.set_params(max_iters=500)
        assert est.max_iters == 500
        with pytest.raises(ValueError, match="not fitted"):
            est.predict(np.array([[1.0, 0.0]]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(tol=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(step_rule="newton")
        with pytest.raises(ValueError):
            SolverConfig(init="zeros")
        with pytest.raises(ValueError):
            SolverConfig(init_alphas=(1.0, -2.0))
