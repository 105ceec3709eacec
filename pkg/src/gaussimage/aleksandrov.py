"""Checkers for the mass-transport compatibility relations between measures.

The weak relation requires balanced masses plus, for every closed set
omega contained in a closed hemisphere,

    mu(omega) <= lambda(outer parallel set of omega at angle pi/2 - alpha)

for a uniform alpha in (0, pi/2).  For a discrete mu it suffices to test
the atom subsets contained in closed hemispheres, since mu(omega) only
sees omega's atoms and parallel sets grow with the set.

The classical relation is the strict inequality
mu(omega) + lambda(omega*) < mu(S) over spherically convex test sets; it
implies the weak relation but fails for cap-concentrated measure pairs
that the weak relation still admits.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .gauss_image import compute_partition
from .measures import DiscreteMeasure, QuadratureMeasure, mass_tolerance, total_mass
from .polytope import DualPolytope, radii
from .sphere import hemisphere_witness, polar_set_mask

MAX_EXHAUSTIVE_ATOMS = 20
_HEMI_GAP_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class WeakAleksandrovReport:
    """Outcome of a weak-relation check at a fixed angle.

    ``per_subset`` holds (atom indices, slack) for every tested subset,
    where slack = lambda(parallel set) - mu(subset); the check holds when
    every slack is >= -eps and the total masses balance.
    """

    holds: bool
    uniform_alpha: float | None
    per_subset: list[tuple[tuple[int, ...], float]]
    masses_balanced: bool
    mode: str = "exhaustive"

    @property
    def worst_slack(self) -> float:
        return min((s for _, s in self.per_subset), default=math.inf)


def _bit_indices(bits: int, m: int) -> tuple[int, ...]:
    return tuple(i for i in range(m) if bits >> i & 1)


class _WeakChecker:
    """Shared state for repeated weak-relation checks on one measure pair."""

    def __init__(self, atoms, weights, lam, *, heuristic=False, max_exhaustive=MAX_EXHAUSTIVE_ATOMS):
        self.atoms = np.asarray(atoms, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.m = self.atoms.shape[0]
        self.node_masses = lam.node_masses
        self.dots = lam.grid.nodes @ self.atoms.T
        self.mu_total = float(self.weights.sum())
        self.lam_total = total_mass(lam)
        self.mode = "heuristic" if heuristic else "exhaustive"
        if heuristic:
            subsets = self._heuristic_subsets()
        else:
            if self.m > max_exhaustive:
                raise ValueError(
                    f"{self.m} atoms exceed the exhaustive subset cap "
                    f"({max_exhaustive}); pass heuristic=True"
                )
            subsets = self._contained_subsets()
        self.subsets = np.array(subsets, dtype=np.uint64)
        self.mu_sums = np.array(
            [float(self.weights[list(_bit_indices(int(s), self.m))].sum()) for s in subsets]
        )

    def _contained_subsets(self) -> list[int]:
        m = self.m
        if self.atoms.shape[1] == 2:
            # a planar set fits in a closed half-circle iff its largest
            # circular gap is at least pi
            angles = np.mod(np.arctan2(self.atoms[:, 1], self.atoms[:, 0]), 2 * math.pi)
            out = []
            for bits in range(1, 1 << m):
                sel = np.sort(angles[[i for i in range(m) if bits >> i & 1]])
                gaps = np.diff(sel, append=sel[0] + 2 * math.pi)
                if sel.size == 1 or gaps.max() >= math.pi - _HEMI_GAP_TOL:
                    out.append(bits)
            return out
        # containment is closed under taking subsets: prune supersets of
        # non-contained sets before resorting to the witness LP
        memo: dict[int, bool] = {}
        by_size: list[list[int]] = [[] for _ in range(m + 1)]
        for bits in range(1, 1 << m):
            by_size[bin(bits).count("1")].append(bits)
        out = []
        for size in range(1, m + 1):
            for bits in by_size[size]:
                if size == 1:
                    memo[bits] = True
                else:
                    parents_ok = all(
                        memo.get(bits & ~(1 << i), False)
                        for i in range(m)
                        if bits >> i & 1
                    )
                    if not parents_ok:
                        memo[bits] = False
                        continue
                    idx = list(_bit_indices(bits, m))
                    memo[bits] = hemisphere_witness(self.atoms[idx]) is not None
                if memo[bits]:
                    out.append(bits)
        return out

    def _heuristic_subsets(self, samples: int = 1000) -> list[int]:
        rng = np.random.default_rng(0)  # sampled test family; fixed for reproducibility
        u = rng.normal(size=(samples, self.atoms.shape[1]))
        u /= np.linalg.norm(u, axis=1)[:, None]
        halves = (u @ self.atoms.T) >= 0.0
        powers = (np.uint64(1) << np.arange(self.m, dtype=np.uint64))
        bits = set(int(b) for b in halves.astype(np.uint64) @ powers if b)
        bits.update(1 << i for i in range(self.m))
        bits.discard((1 << self.m) - 1)  # spanning atoms: full set is never contained
        return sorted(bits)

    def parallel_masses(self, alpha: float) -> np.ndarray:
        """lambda-mass of the parallel set of each atom subset at pi/2 - alpha."""
        beta = math.pi / 2.0 - alpha
        caps = self.dots > math.cos(beta)
        bits = np.zeros(caps.shape[0], dtype=np.uint64)
        for i in range(self.m):
            bits |= caps[:, i].astype(np.uint64) << np.uint64(i)
        pattern_bits, inverse = np.unique(bits, return_inverse=True)
        pattern_mass = np.bincount(inverse, weights=self.node_masses, minlength=len(pattern_bits))
        masses = np.empty(len(self.subsets))
        chunk = 4096
        for lo in range(0, len(self.subsets), chunk):
            sub = self.subsets[lo : lo + chunk, None]
            covered = (sub & pattern_bits[None, :]) != 0
            masses[lo : lo + chunk] = covered @ pattern_mass
        return masses

    def slacks(self, alpha: float) -> np.ndarray:
        return self.parallel_masses(alpha) - self.mu_sums

    def report(self, alpha: float, eps: float) -> WeakAleksandrovReport:
        if not 0.0 < alpha < math.pi / 2.0:
            raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
        s = self.slacks(alpha)
        balanced = abs(self.mu_total - self.lam_total) <= eps
        per_subset = [
            (_bit_indices(int(b), self.m), float(v)) for b, v in zip(self.subsets, s)
        ]
        return WeakAleksandrovReport(
            holds=bool(balanced and (s.size == 0 or s.min() >= -eps)),
            uniform_alpha=alpha,
            per_subset=per_subset,
            masses_balanced=balanced,
            mode=self.mode,
        )


def check_weak_aleksandrov(
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    alpha: float,
    *,
    eps: float | None = None,
    heuristic: bool = False,
) -> WeakAleksandrovReport:
    """Test the weak relation of mu to lambda at a fixed angle alpha."""
    eps = mass_tolerance(lam) if eps is None else eps
    checker = _WeakChecker(mu.atoms, mu.weights, lam, heuristic=heuristic)
    return checker.report(alpha, eps)


def find_uniform_alpha(
    mu,
    lam: QuadratureMeasure,
    *,
    resolution: float = 1e-4,
    eps: float | None = None,
    heuristic: bool = False,
) -> float | None:
    """Largest alpha in (0, pi/2) at which the weak relation holds.

    Monotone in alpha (smaller alpha means larger parallel sets), so the
    threshold is located by bisection to ``resolution`` radians.  Returns
    None when the relation fails even as alpha approaches 0.

    ``mu`` may be a DiscreteMeasure or a plain (atoms, weights) pair; the
    latter admits zero weights, which arise from empty Gauss cells.
    """
    eps = mass_tolerance(lam) if eps is None else eps
    atoms, weights = (mu.atoms, mu.weights) if isinstance(mu, DiscreteMeasure) else mu
    checker = _WeakChecker(atoms, weights, lam, heuristic=heuristic)
    if abs(checker.mu_total - checker.lam_total) > eps:
        return None

    def holds(a: float) -> bool:
        s = checker.slacks(a)
        return s.size == 0 or float(s.min()) >= -eps

    lo = resolution
    if not holds(lo):
        return None
    hi = math.pi / 2.0 - 1e-9
    if holds(hi):
        return hi
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def classical_margins(
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    convex_test_sets=None,
    *,
    polar_tol: float = 1e-12,
) -> tuple[float, bool, list[tuple[tuple[int, ...], float]]]:
    """Margins mu(S) - mu(omega) - lambda(omega*) over the test family.

    The default family is every hemisphere-contained atom subset, which is
    complete for the discrete side of the relation (test sets carrying no
    atoms only shrink the left-hand side).  Returns (min margin, masses
    balanced, per-set margins); the strict relation holds when the minimum
    margin is positive beyond quadrature error.
    """
    mu_total = total_mass(mu)
    balanced = abs(mu_total - total_mass(lam)) <= mass_tolerance(lam)
    details: list[tuple[tuple[int, ...], float]] = []
    if convex_test_sets is None:
        checker = _WeakChecker(mu.atoms, mu.weights, lam)
        for bits, mu_sum in zip(checker.subsets, checker.mu_sums):
            idx = _bit_indices(int(bits), mu.num_atoms)
            mask = polar_set_mask(lam.grid.nodes, mu.atoms[list(idx)], tol=polar_tol)
            lam_polar = float(np.sum(lam.node_masses[mask]))
            details.append((idx, mu_total - float(mu_sum) - lam_polar))
    else:
        for omega in convex_test_sets:
            omega = np.asarray(omega, dtype=float)
            if hemisphere_witness(omega) is None:
                raise ValueError("classical test sets must be contained in a closed hemisphere")
            # atoms lying in omega (chord distance within angular tolerance)
            d2 = np.sum((mu.atoms[:, None, :] - omega[None, :, :]) ** 2, axis=-1)
            idx = tuple(int(i) for i in np.nonzero((d2 < 1e-18).any(axis=1))[0])
            mu_sum = float(mu.weights[list(idx)].sum()) if idx else 0.0
            mask = polar_set_mask(lam.grid.nodes, omega, tol=polar_tol)
            lam_polar = float(np.sum(lam.node_masses[mask]))
            details.append((idx, mu_total - mu_sum - lam_polar))
    worst = min((v for _, v in details), default=math.inf)
    return worst, balanced, details


def check_classical_aleksandrov(
    mu: DiscreteMeasure,
    lam: QuadratureMeasure,
    convex_test_sets=None,
    *,
    eps: float | None = None,
) -> bool:
    """Strict relation mu(omega) + lambda(omega*) < mu(S) with margin eps.

    Margins within eps of zero are indistinguishable from ties at grid
    resolution and count as failures here; use :func:`classical_margins`
    for the three-way verdict.
    """
    eps = mass_tolerance(lam) if eps is None else eps
    worst, balanced, _ = classical_margins(mu, lam, convex_test_sets)
    return bool(balanced and worst > eps)


def necessity_check(
    p: DualPolytope,
    lam: QuadratureMeasure,
    *,
    slack: float = 1e-2,
    eps: float | None = None,
) -> bool:
    """Verify that lambda is weak-related to its own Gauss image measure.

    The Gauss image measure of any body with interior origin satisfies the
    weak relation with angle pi/2 - arccos(r/R): a normal direction at the
    radial point of u makes an angle at most arccos(r/R) with u.  The
    check runs at that angle minus ``slack`` to absorb grid quantization.
    """
    eps = mass_tolerance(lam) if eps is None else eps
    part = compute_partition(p, lam)
    r, big_r = radii(p)
    base = math.pi / 2.0 - math.acos(min(1.0, r / big_r))
    alpha0 = base - slack if base > 2.0 * slack else base / 2.0
    checker = _WeakChecker(p.directions, part.cell_masses, lam)
    s = checker.slacks(alpha0)
    return bool(s.size == 0 or float(s.min()) >= -eps)
