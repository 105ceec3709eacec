"""Concave maximization of the surrogate objective.

The solver runs subgradient ascent on t = log(alpha): the supergradient
of the surrogate is the cell-mass surplus g - mu, so stationarity is
exactly the prescribed-mass equation.  Every iterate is renormalized to
max alpha = 1 (a dilation, neutral for balanced masses) and
canonicalized (which never decreases the objective).

Two scale-repair operations implement the degeneracy machinery: a
recovery step that lifts the smallest alpha scale toward the dominant
one without losing objective value, and an improvement loop that applies
it until sorted alphas have no ratio gap below sin(uniform_alpha),
yielding an inradius/outradius guarantee.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from .aleksandrov import find_uniform_alpha
from .gauss_image import compute_partition, log_functional, neg_log_dots
from .measures import DiscreteMeasure, QuadratureMeasure, mass_tolerance, total_mass
from .polytope import (
    DualPolytope,
    canonicalize,
    degeneracy_clusters,
    extremal_stats,
    normalize_scale,
    partial_rescale,
    radii,
    support_values,
)
from .sphere import hemisphere_witness

__all__ = [
    "SolverConfig",
    "SolverReport",
    "RescaleEvent",
    "RecoveryOutcome",
    "solve",
    "rescale_recovery_step",
    "ratio_improvement_loop",
    "radius_ratio_lower_bound",
    "GaussImageSolver",
]

STEP_RULES = ("polyak", "diminishing", "fixed")


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Knobs of the subgradient ascent.

    ``tol`` is the residual threshold as a fraction of total mass.  The
    Polyak rule scales steps from an adaptive objective target; the
    fallbacks use a normalized direction with step ``step_size`` (default
    0.5 diminishing as 1/sqrt(iter), or 0.05 fixed).
    """

    tol: float = 1e-3
    max_iters: int = 10_000
    step_rule: str = "polyak"
    gap_ratio: float = 10.0
    seed: int = 0
    rescale_recovery: bool = True
    init: str = "ones"
    init_alphas: tuple | None = None
    step_size: float | None = None
    recovery_interval: int = 200

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.gap_ratio <= 1:
            raise ValueError("gap_ratio must exceed 1")
        if self.init not in ("ones", "random"):
            raise ValueError("init must be 'ones' or 'random'")
        if self.init_alphas is not None:
            object.__setattr__(self, "init_alphas", tuple(float(a) for a in self.init_alphas))
            if any(a <= 0 for a in self.init_alphas):
                raise ValueError("init_alphas must be positive")


class RescaleEvent(NamedTuple):
    iteration: int
    index_set: tuple[int, ...]
    factor: float


class RecoveryOutcome(NamedTuple):
    polytope: DualPolytope
    applied: bool
    index_set: tuple[int, ...] | None
    factor: float | None


@dataclasses.dataclass(frozen=True)
class SolverReport:
    """Result of a solve: final body, trajectory, and diagnostics."""

    final_polytope: DualPolytope
    residual_inf: float
    converged: bool
    n_iters: int
    phi_trace: np.ndarray
    residual_trace: np.ndarray
    min_alpha_trace: np.ndarray
    max_alpha_trace: np.ndarray
    cluster_count_trace: np.ndarray
    rescale_events: list[RescaleEvent]
    clusters: list[np.ndarray]
    radii_ratio: float
    uniform_alpha_used: float | None
    eps_quad: float
    message: str
    config: SolverConfig


def _cluster_count(alphas: np.ndarray, gap_ratio: float) -> int:
    s = np.sort(alphas)[::-1]
    return 1 + int(np.sum(s[:-1] / s[1:] > gap_ratio))


def solve(mu: DiscreteMeasure, lam: QuadratureMeasure, config: SolverConfig | None = None) -> SolverReport:
    """Find a polytope whose Gauss image cell masses match mu.

    Requires balanced total masses (use measures.normalize_to first).  If
    the weak compatibility relation fails, a warning is issued and the
    run proceeds; nonexistence then typically shows up as diverging alpha
    scales rather than convergence.
    """
    cfg = config or SolverConfig()
    eps_quad = mass_tolerance(lam)
    mass_mu = total_mass(mu)
    mass_lam = total_mass(lam)
    if abs(mass_mu - mass_lam) > eps_quad:
        raise ValueError(
            f"total masses differ ({mass_mu:.6g} vs {mass_lam:.6g}); "
            "rescale lambda with measures.normalize_to(lam, total_mass(mu))"
        )

    alpha_unif = find_uniform_alpha(mu, lam)
    if alpha_unif is None:
        warnings.warn(
            "no uniform weak-Aleksandrov constant found at grid resolution; "
            "a solution may not exist",
            RuntimeWarning,
        )

    directions = mu.atoms
    m = mu.num_atoms
    offsets = neg_log_dots(lam.grid.nodes, directions)
    node_masses = lam.node_masses
    target = mu.weights
    tol_abs = cfg.tol * mass_mu

    if cfg.init_alphas is not None:
        if len(cfg.init_alphas) != m:
            raise ValueError("init_alphas must have one entry per atom")
        t = np.log(np.asarray(cfg.init_alphas, dtype=float))
        t -= t.max()
    elif cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        t = rng.uniform(-1.0, 0.0, size=m)
        t -= t.max()
    else:
        t = np.zeros(m)
    t = np.log(support_values(directions, np.exp(t)))
    t -= t.max()

    phi_tr, res_tr, mina_tr, maxa_tr, clus_tr = [], [], [], [], []
    events: list[RescaleEvent] = []
    best_t = t.copy()
    best_resid = np.inf
    f_best = -np.inf
    t_at_f_best = t.copy()
    f_window_anchor = -np.inf
    delta = 0.02 * mass_mu
    delta_floor = 1e-7 * mass_mu
    stall = 0
    converged = False
    n_iters = 0
    scores = np.empty_like(offsets)

    for it in range(cfg.max_iters):
        n_iters = it + 1
        np.add(t[None, :], offsets, out=scores)
        assign = np.argmin(scores, axis=1)
        vals = np.take_along_axis(scores, assign[:, None], axis=1)[:, 0]
        g = np.bincount(assign, weights=node_masses, minlength=m)
        d = g - target
        resid = float(np.abs(d).max())
        f = float(-(target @ t) + node_masses @ vals)

        alphas = np.exp(t)
        phi_tr.append(f)
        res_tr.append(resid)
        mina_tr.append(float(alphas.min()))
        maxa_tr.append(float(alphas.max()))
        clus_tr.append(_cluster_count(alphas, cfg.gap_ratio))

        if resid < best_resid:
            best_resid = resid
            best_t = t.copy()
        if resid <= tol_abs:
            converged = True
            break
        if cfg.step_rule == "polyak" and f < f_best - max(eps_quad, delta):
            # overshot: restart from the best point with a smaller target
            t = t_at_f_best.copy()
            delta = max(delta / 2.0, delta_floor)
            stall = 0
            continue
        if f > f_best + 1e-15:
            f_best = f
            t_at_f_best = t.copy()
            stall = 0
        else:
            stall += 1

        # scale repair when the objective stalls with separated alpha scales
        if (
            cfg.rescale_recovery
            and alpha_unif is not None
            and it > 0
            and it % cfg.recovery_interval == 0
        ):
            if f_best - f_window_anchor < eps_quad and _cluster_count(alphas, cfg.gap_ratio) >= 2:
                p_cur = DualPolytope(directions, alphas / alphas.max(), canonical=True)
                outcome = rescale_recovery_step(p_cur, mu, lam, alpha_unif, gap_ratio=cfg.gap_ratio)
                if outcome.applied:
                    t = np.log(outcome.polytope.alphas)
                    events.append(RescaleEvent(it, outcome.index_set, outcome.factor))
            f_window_anchor = f_best

        if cfg.step_rule == "polyak":
            if stall >= 10:
                delta = max(delta / 2.0, delta_floor)
                stall = 0
            sq = float(d @ d)
            eta = (f_best + delta - f) / max(sq, 1e-30)
            eta = min(eta, 1.0 / max(resid, 1e-30))  # cap per-iteration log step at 1
            t = t + eta * d
        elif cfg.step_rule == "diminishing":
            base = 0.5 if cfg.step_size is None else cfg.step_size
            t = t + (base / math.sqrt(it + 1.0)) * (d / max(resid, 1e-30))
        else:
            base = 0.05 if cfg.step_size is None else cfg.step_size
            t = t + base * (d / max(resid, 1e-30))

        t -= t.max()
        t = np.log(support_values(directions, np.exp(t)))
        t -= t.max()

    final = canonicalize(DualPolytope(directions, np.exp(best_t)))
    final = normalize_scale(final)
    part = compute_partition(final, lam)
    resid_final = float(np.abs(part.cell_masses - target).max())
    converged = resid_final <= tol_abs
    phi_final = log_functional(final, mu, lam).total
    phi_tr.append(phi_final)
    res_tr.append(resid_final)
    mina_tr.append(float(final.alphas.min()))
    maxa_tr.append(float(final.alphas.max()))
    clus_tr.append(_cluster_count(final.alphas, cfg.gap_ratio))
    r, big_r = radii(final)

    message = (
        f"converged in {n_iters} iterations"
        if converged
        else f"stopped after {n_iters} iterations with residual {resid_final:.3e} (target {tol_abs:.3e})"
    )
    return SolverReport(
        final_polytope=final,
        residual_inf=resid_final,
        converged=converged,
        n_iters=n_iters,
        phi_trace=np.array(phi_tr),
        residual_trace=np.array(res_tr),
        min_alpha_trace=np.array(mina_tr),
        max_alpha_trace=np.array(maxa_tr),
        cluster_count_trace=np.array(clus_tr, dtype=int),
        rescale_events=events,
        clusters=degeneracy_clusters(final, cfg.gap_ratio),
        radii_ratio=r / big_r,
        uniform_alpha_used=alpha_unif,
        eps_quad=eps_quad,
        message=message,
        config=cfg,
    )


def rescale_recovery_step(
    p: DualPolytope,
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    uniform_alpha: float,
    *,
    index_set=None,
    gap_ratio: float = 10.0,
    eps: float | None = None,
) -> RecoveryOutcome:
    """Lift the smallest alpha scale without decreasing the objective.

    Given a split I / complement with min alpha over I strictly dominating
    max alpha over the complement (ratio below sin(uniform_alpha)) and a
    hemisphere-contained complement, shrinking the I-side by
    a = max_out / (min_in * sin(uniform_alpha)) and re-normalizing to
    max alpha = 1 multiplies the smallest scale by 1/a while keeping the
    I-side values and the objective (up to quadrature error).

    Splits are taken from ``degeneracy_clusters`` (deepest first) unless
    ``index_set`` is given.  Returns the input unchanged with
    ``applied=False`` when no split qualifies.
    """
    if not p.canonical:
        raise ValueError("recovery requires a canonical polytope")
    if abs(float(p.alphas.max()) - 1.0) > 1e-9:
        raise ValueError("recovery requires the max-alpha = 1 normalization")
    if not 0.0 < uniform_alpha < math.pi / 2.0:
        raise ValueError("uniform_alpha must lie in (0, pi/2)")
    eps = mass_tolerance(lam) if eps is None else eps
    ratio_cap = math.sin(uniform_alpha)  # = cos(pi/2 - uniform_alpha)

    if index_set is not None:
        candidates = [np.asarray(sorted(index_set), dtype=int)]
    else:
        clusters = degeneracy_clusters(p, gap_ratio)
        candidates = [
            np.sort(np.concatenate(clusters[:j])) for j in range(len(clusters) - 1, 0, -1)
        ]

    phi_before = None
    for members in candidates:
        if members.size == 0 or members.size >= p.num_facets:
            continue
        stats = extremal_stats(p, members)
        if not stats.max_out / stats.min_in < ratio_cap:
            continue
        comp_mask = np.ones(p.num_facets, dtype=bool)
        comp_mask[members] = False
        if hemisphere_witness(p.directions[comp_mask]) is None:
            continue
        factor = stats.max_out / (stats.min_in * ratio_cap)
        rescaled = partial_rescale(p, members, factor, side="members")
        lifted = normalize_scale(rescaled)

        if phi_before is None:
            phi_before = log_functional(p, mu, lam).total
        phi_after = log_functional(lifted, mu, lam).total
        new_stats = extremal_stats(lifted, members)
        claimed_min_out = (stats.min_out / stats.max_out) * stats.min_in * ratio_cap
        ok = (
            phi_after >= phi_before - eps
            and abs(new_stats.min_in - stats.min_in) <= 1e-9 * max(1.0, stats.min_in)
            and new_stats.min_out >= claimed_min_out - 1e-9
        )
        if not ok:
            warnings.warn(
                "recovery split failed its postconditions; skipping", RuntimeWarning
            )
            continue
        return RecoveryOutcome(lifted, True, tuple(int(i) for i in members), factor)
    return RecoveryOutcome(p, False, None, None)


def _largest_contained_prefix(directions: np.ndarray, order: np.ndarray) -> int:
    """Largest k with directions[order[:k]] inside a closed hemisphere."""
    for k in range(len(order) - 1, 0, -1):
        if hemisphere_witness(directions[order[:k]]) is not None:
            return k
    return 0


def ratio_improvement_loop(
    p: DualPolytope,
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    *,
    uniform_alpha: float | None = None,
    tol: float = 1e-3,
    eps: float | None = None,
    max_passes: int | None = None,
) -> DualPolytope:
    """Repair scale gaps of a solution until the radius-ratio bound holds.

    Sorts alphas ascending and, while some position l within the largest
    hemisphere-contained prefix has alpha_(l) / alpha_(l+1) below
    sin(uniform_alpha), applies the recovery rescaling for the split at l
    and re-verifies the residual.  The result still solves at tolerance
    and satisfies r_P / R_P >= radius_ratio_lower_bound(...).
    """
    eps = mass_tolerance(lam) if eps is None else eps
    if uniform_alpha is None:
        uniform_alpha = find_uniform_alpha(mu, lam)
        if uniform_alpha is None:
            raise ValueError("no uniform weak-Aleksandrov constant; cannot rescale safely")
    c = math.sin(uniform_alpha)
    tol_abs = tol * total_mass(mu)

    p = normalize_scale(canonicalize(p))
    resid = float(np.abs(compute_partition(p, lam).cell_masses - mu.weights).max())
    if resid > tol_abs:
        warnings.warn("input does not solve at the stated tolerance", RuntimeWarning)

    passes = max_passes if max_passes is not None else 4 * p.num_facets
    for _ in range(passes):
        order = np.argsort(p.alphas, kind="stable")
        k = _largest_contained_prefix(p.directions, order)
        sorted_a = p.alphas[order]
        violation = None
        for l in range(1, k + 1):
            if sorted_a[l - 1] / sorted_a[l] < c * (1.0 - 1e-12):
                violation = l
                break
        if violation is None:
            break
        members = np.sort(order[violation:])
        outcome = rescale_recovery_step(p, mu, lam, uniform_alpha, index_set=members, eps=eps)
        if not outcome.applied:
            break
        new_resid = float(
            np.abs(compute_partition(outcome.polytope, lam).cell_masses - mu.weights).max()
        )
        if new_resid > tol_abs:
            warnings.warn(
                "rescaling did not preserve the residual; returning the previous body",
                RuntimeWarning,
            )
            return p
        p = outcome.polytope
    return p


def radius_ratio_lower_bound(
    p: DualPolytope, uniform_alpha: float, probe_nodes: np.ndarray
) -> tuple[int, float, float]:
    """Guaranteed lower bound on r_P / R_P after the improvement loop.

    With alphas sorted ascending, k is the largest prefix contained in a
    closed hemisphere; gamma is the covering margin
    min_u max_{i in first k+1} u . v_i over the probe nodes (positive
    because that prefix plus one more atom spans).  The enforced chain
    alpha_(l) >= sin(uniform_alpha) * alpha_(l+1) for l <= k gives

        r_P / R_P >= gamma * sin(uniform_alpha) ** k.

    Returns (k, gamma, bound).
    """
    if not p.canonical:
        raise ValueError("bound requires a canonical polytope")
    order = np.argsort(p.alphas, kind="stable")
    k = _largest_contained_prefix(p.directions, order)
    head = p.directions[order[: k + 1]]
    gamma = float((probe_nodes @ head.T).max(axis=1).min())
    return k, gamma, gamma * math.sin(uniform_alpha) ** k


class GaussImageSolver(BaseEstimator):
    """Estimator-style front end to :func:`solve`.

    Parameters mirror :class:`SolverConfig`.  After ``fit``, the solution
    is exposed through ``polytope_``, ``alphas_``, ``residual_`` and the
    full ``report_``; ``predict`` labels query directions with the index
    of the Gauss cell their ray exits through.
    """

    def __init__(
        self,
        tol: float = 1e-3,
        max_iters: int = 10_000,
        step_rule: str = "polyak",
        gap_ratio: float = 10.0,
        seed: int = 0,
        rescale_recovery: bool = True,
        init: str = "ones",
        step_size: float | None = None,
    ):
        self.tol = tol
        self.max_iters = max_iters
        self.step_rule = step_rule
        self.gap_ratio = gap_ratio
        self.seed = seed
        self.rescale_recovery = rescale_recovery
        self.init = init
        self.step_size = step_size

    def fit(self, mu: DiscreteMeasure, lam: QuadratureMeasure) -> "GaussImageSolver":
        cfg = SolverConfig(**self.get_params())
        report = solve(mu, lam, cfg)
        self.report_ = report
        self.polytope_ = report.final_polytope
        self.alphas_ = report.final_polytope.alphas
        self.residual_ = report.residual_inf
        self.n_iter_ = report.n_iters
        return self

    def predict(self, directions) -> np.ndarray:
        if not hasattr(self, "polytope_"):
            raise ValueError("solver is not fitted; call fit first")
        from .polytope import polar_radial_batch

        _, idx = polar_radial_batch(self.polytope_, np.asarray(directions, dtype=float))
        return idx
