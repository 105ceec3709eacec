"""Semidiscrete solver and diagnostics for the Gauss image problem.

Given a discrete measure mu on the unit sphere (atoms positively
spanning) and an absolutely continuous measure lambda of equal total
mass, the solver finds a convex polytope P, with vertices on the rays of
mu's atoms, whose Gauss image measure of lambda matches mu.  The library
also ships the compatibility diagnostics (weak and classical relations),
the partial-rescaling machinery used to repair degenerating scales, and
independent brute-force oracles for desk-scale verification.
"""

from .aleksandrov import (
    WeakAleksandrovReport,
    check_classical_aleksandrov,
    check_weak_aleksandrov,
    classical_margins,
    find_uniform_alpha,
    necessity_check,
)
from .gauss_image import (
    FunctionalValue,
    GaussPartition,
    compute_partition,
    log_functional,
    pushforward_integral,
    supergradient,
    surrogate_objective,
)
from .measures import (
    DiscreteMeasure,
    QuadratureMeasure,
    caps_measure,
    mass_tolerance,
    normalize_to,
    parallel_set_mass,
    total_mass,
    uniform_measure,
)
from .oracles import arc_cell_masses, arc_cells, brute_force_maximize, dense_parallel_set_mass
from .polytope import (
    DualPolytope,
    ExtremalStats,
    atom_radii,
    canonicalize,
    degeneracy_clusters,
    extremal_stats,
    normalize_scale,
    partial_rescale,
    polar_radial,
    polar_radial_batch,
    polar_vertices,
    radii,
    scale_body,
    support_values,
)
from .solver import (
    GaussImageSolver,
    RescaleEvent,
    SolverConfig,
    SolverReport,
    radius_ratio_lower_bound,
    ratio_improvement_loop,
    rescale_recovery_step,
    solve,
)
from .sphere import (
    QuadratureGrid,
    build_grid,
    hemisphere_witness,
    in_outer_parallel_set,
    in_polar_set,
    outer_parallel_mask,
    polar_set_mask,
    surface_area,
)

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure",
    "DualPolytope",
    "ExtremalStats",
    "FunctionalValue",
    "GaussImageSolver",
    "GaussPartition",
    "QuadratureGrid",
    "QuadratureMeasure",
    "RescaleEvent",
    "SolverConfig",
    "SolverReport",
    "WeakAleksandrovReport",
    "arc_cell_masses",
    "arc_cells",
    "atom_radii",
    "brute_force_maximize",
    "build_grid",
    "canonicalize",
    "caps_measure",
    "check_classical_aleksandrov",
    "check_weak_aleksandrov",
    "classical_margins",
    "compute_partition",
    "degeneracy_clusters",
    "dense_parallel_set_mass",
    "extremal_stats",
    "find_uniform_alpha",
    "hemisphere_witness",
    "in_outer_parallel_set",
    "in_polar_set",
    "log_functional",
    "mass_tolerance",
    "necessity_check",
    "normalize_scale",
    "normalize_to",
    "outer_parallel_mask",
    "parallel_set_mass",
    "partial_rescale",
    "polar_radial",
    "polar_radial_batch",
    "polar_set_mask",
    "polar_vertices",
    "pushforward_integral",
    "radii",
    "radius_ratio_lower_bound",
    "ratio_improvement_loop",
    "rescale_recovery_step",
    "scale_body",
    "solve",
    "supergradient",
    "support_values",
    "surface_area",
    "surrogate_objective",
    "total_mass",
    "uniform_measure",
]
