"""Input validation helpers shared across the package.

All user-facing constructors funnel through these so that error messages
are consistent and numerical invariants (unit norm, distinctness,
positivity) are enforced in one place.
"""

from __future__ import annotations

import numpy as np

UNIT_NORM_TOL = 1e-12
ANGULAR_DISTINCT_TOL = 1e-9


def as_float_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_unit_vector(u, name: str = "vector") -> np.ndarray:
    u = as_float_array(u, name, ndim=1)
    if u.shape[0] < 2:
        raise ValueError(f"{name} must have dimension >= 2, got {u.shape[0]}")
    norm = np.linalg.norm(u)
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"{name} is not unit length (|norm - 1| = {abs(norm - 1.0):.3e})")
    return u


def as_unit_vectors(vectors, name: str = "vectors") -> np.ndarray:
    """Coerce to an (m, n) array of unit vectors, n >= 2."""
    arr = as_float_array(vectors, name)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of row vectors, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must be nonempty")
    if arr.shape[1] < 2:
        raise ValueError(f"{name} must have dimension >= 2, got {arr.shape[1]}")
    norms = np.linalg.norm(arr, axis=1)
    bad = np.abs(norms - 1.0) > UNIT_NORM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"{name}[{i}] is not unit length (|norm - 1| = {abs(norms[i] - 1.0):.3e})")
    return arr


def as_direction_set(vectors, name: str = "directions") -> np.ndarray:
    """Unit vectors, pairwise distinct within ``ANGULAR_DISTINCT_TOL`` radians."""
    arr = as_unit_vectors(vectors, name)
    m = arr.shape[0]
    if m > 1:
        # chord length ~= angle for small separations
        d2 = np.sum((arr[:, None, :] - arr[None, :, :]) ** 2, axis=-1)
        d2[np.diag_indices(m)] = np.inf
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        if d2[i, j] < ANGULAR_DISTINCT_TOL**2:
            raise ValueError(f"{name}[{i}] and {name}[{j}] coincide within {ANGULAR_DISTINCT_TOL} rad")
    return arr


def as_positive_weights(weights, m: int, name: str = "weights") -> np.ndarray:
    w = as_float_array(weights, name, ndim=1)
    if w.shape[0] != m:
        raise ValueError(f"{name} has length {w.shape[0]}, expected {m}")
    if np.any(w <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return w


def check_same_dimension(n: int, arr: np.ndarray, name: str) -> None:
    if arr.shape[-1] != n:
        raise ValueError(f"dimension mismatch: {name} has dimension {arr.shape[-1]}, expected {n}")


def as_index_set(members, m: int, *, proper: bool = True, name: str = "index_set") -> np.ndarray:
    """Sorted array of distinct indices into range(m); nonempty, optionally proper."""
    idx = np.unique(np.asarray(list(members), dtype=int))
    if idx.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if idx.min() < 0 or idx.max() >= m:
        raise ValueError(f"{name} entries must lie in [0, {m})")
    if proper and idx.size >= m:
        raise ValueError(f"{name} must be a proper subset of range({m})")
    return idx
