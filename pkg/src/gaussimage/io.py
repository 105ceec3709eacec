"""Instance and solution files (JSON, format_version 1).

An instance file fixes the problem data: dimension, the discrete measure
(atoms and weights), the continuous measure (a density specification),
and the quadrature grid it is sampled on.  A solution file stores the
final body with enough context to re-verify it against its instance.

Floats are serialized with Python's shortest round-trip representation,
so writing and re-reading reproduces every value bit-exactly.
"""

from __future__ import annotations

import dataclasses
import datetime
import importlib.resources
import json
from pathlib import Path

import numpy as np

from .measures import (
    DiscreteMeasure,
    QuadratureMeasure,
    caps_measure,
    normalize_to,
    total_mass,
    uniform_measure,
)
from .polytope import DualPolytope
from .sphere import GRID_SCHEMES, build_grid

FORMAT_VERSION = 1
DENSITY_TYPES = ("uniform", "table", "caps")


class InstanceError(ValueError):
    """Malformed instance or solution file; message carries the JSON path."""


def _fail(path: str, reason: str):
    raise InstanceError(f"{path}: {reason}")


def _get(obj: dict, key: str, path: str, kind=None):
    if key not in obj:
        _fail(f"{path}.{key}", "missing field")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        _fail(f"{path}.{key}", f"expected {kind.__name__}, got {type(val).__name__}")
    return val


@dataclasses.dataclass(frozen=True)
class Instance:
    mu: DiscreteMeasure
    lam: QuadratureMeasure
    dimension: int
    source: dict


def _unit_rows(raw, path: str, dim: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dim:
        _fail(path, f"expected a list of length-{dim} coordinate arrays")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms < 1e-12):
        _fail(path, "zero vector")
    if np.any(np.abs(norms - 1.0) > 1e-6):
        _fail(path, "vectors deviate from unit length by more than 1e-6")
    return arr / norms[:, None]


def parse_instance(doc: dict, *, path: str = "$") -> Instance:
    if not isinstance(doc, dict):
        _fail(path, "top level must be an object")
    version = _get(doc, "format_version", path, int)
    if version != FORMAT_VERSION:
        _fail(f"{path}.format_version", f"unsupported version {version}, expected {FORMAT_VERSION}")
    dim = _get(doc, "dimension", path, int)
    if dim not in (2, 3):
        _fail(f"{path}.dimension", "must be 2 or 3")

    quad = _get(doc, "quadrature", path, dict)
    scheme = _get(quad, "scheme", f"{path}.quadrature", str)
    if scheme not in GRID_SCHEMES:
        _fail(f"{path}.quadrature.scheme", f"unknown scheme {scheme!r}")
    count = _get(quad, "count", f"{path}.quadrature", int)
    try:
        grid = build_grid(dim, count, scheme)
    except ValueError as e:
        _fail(f"{path}.quadrature", str(e))

    mu_doc = _get(doc, "mu", path, dict)
    atoms = _unit_rows(_get(mu_doc, "atoms", f"{path}.mu"), f"{path}.mu.atoms", dim)
    weights = np.asarray(_get(mu_doc, "weights", f"{path}.mu"), dtype=float)
    if weights.ndim != 1 or weights.shape[0] != atoms.shape[0]:
        _fail(f"{path}.mu.weights", "must list one positive weight per atom")
    try:
        mu = DiscreteMeasure(atoms, weights)
    except ValueError as e:
        _fail(f"{path}.mu", str(e))

    lam_doc = _get(doc, "lambda", path, dict)
    dtype = _get(lam_doc, "type", f"{path}.lambda", str)
    if dtype == "uniform":
        lam = uniform_measure(grid)
    elif dtype == "table":
        values = np.asarray(_get(lam_doc, "values", f"{path}.lambda"), dtype=float)
        if values.shape != (grid.count,):
            _fail(f"{path}.lambda.values", f"expected {grid.count} node values, got {values.shape}")
        try:
            lam = QuadratureMeasure(grid, values)
        except ValueError as e:
            _fail(f"{path}.lambda", str(e))
    elif dtype == "caps":
        centers = _unit_rows(_get(lam_doc, "centers", f"{path}.lambda"), f"{path}.lambda.centers", dim)
        halfwidths = np.asarray(_get(lam_doc, "halfwidths", f"{path}.lambda"), dtype=float)
        values = np.asarray(_get(lam_doc, "values", f"{path}.lambda"), dtype=float)
        background = float(lam_doc.get("background", 0.0))
        try:
            lam = caps_measure(grid, centers, halfwidths, values, background)
        except ValueError as e:
            _fail(f"{path}.lambda", str(e))
    else:
        _fail(f"{path}.lambda.type", f"must be one of {DENSITY_TYPES}")

    if bool(doc.get("normalize_lambda", True)):
        lam = normalize_to(lam, total_mass(mu))
    return Instance(mu=mu, lam=lam, dimension=dim, source=doc)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: invalid JSON ({e})") from None
    return parse_instance(doc, path=str(path))


@dataclasses.dataclass(frozen=True)
class SolutionRecord:
    directions: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    residual: float
    phi: float
    radii_ratio: float
    uniform_alpha: float | None
    rescale_events: list[dict]
    converged: bool
    config: dict
    metadata: dict

    def polytope(self) -> DualPolytope:
        return DualPolytope(self.directions, self.alphas, canonical=True)


def solution_document(report, *, config: dict | None = None, timestamp: str | None = None) -> dict:
    """Serializable document for a SolverReport."""
    p = report.final_polytope
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return {
        "format_version": FORMAT_VERSION,
        "dimension": int(p.dim),
        "directions": p.directions.tolist(),
        "alphas": p.alphas.tolist(),
        "betas": (1.0 / p.alphas).tolist(),
        "residual": float(report.residual_inf),
        "phi": float(report.phi_trace[-1]),
        "radii_ratio": float(report.radii_ratio),
        "uniform_alpha": None if report.uniform_alpha_used is None else float(report.uniform_alpha_used),
        "rescale_events": [
            {"iteration": int(e.iteration), "index_set": list(e.index_set), "factor": float(e.factor)}
            for e in report.rescale_events
        ],
        "converged": bool(report.converged),
        "config": config if config is not None else dataclasses.asdict(report.config),
        "metadata": {"created": timestamp},
    }


def save_solution(path, report, *, config: dict | None = None, timestamp: str | None = None) -> None:
    doc = solution_document(report, config=config, timestamp=timestamp)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_solution(path) -> SolutionRecord:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: invalid JSON ({e})") from None
    loc = str(path)
    version = _get(doc, "format_version", loc, int)
    if version != FORMAT_VERSION:
        _fail(f"{loc}.format_version", f"unsupported version {version}, expected {FORMAT_VERSION}")
    dim = _get(doc, "dimension", loc, int)
    directions = _unit_rows(_get(doc, "directions", loc), f"{loc}.directions", dim)
    alphas = np.asarray(_get(doc, "alphas", loc), dtype=float)
    betas = np.asarray(_get(doc, "betas", loc), dtype=float)
    if alphas.shape != (directions.shape[0],) or betas.shape != alphas.shape:
        _fail(f"{loc}.alphas", "alphas/betas must list one value per direction")
    if np.any(np.abs(alphas * betas - 1.0) > 1e-12):
        _fail(f"{loc}.betas", "betas are not the reciprocals of alphas (tolerance 1e-12)")
    return SolutionRecord(
        directions=directions,
        alphas=alphas,
        betas=betas,
        residual=float(_get(doc, "residual", loc)),
        phi=float(_get(doc, "phi", loc)),
        radii_ratio=float(_get(doc, "radii_ratio", loc)),
        uniform_alpha=(None if doc.get("uniform_alpha") is None else float(doc["uniform_alpha"])),
        rescale_events=list(doc.get("rescale_events", [])),
        converged=bool(_get(doc, "converged", loc)),
        config=dict(doc.get("config", {})),
        metadata=dict(doc.get("metadata", {})),
    )


def verify_solution(solution: SolutionRecord, instance: Instance) -> float:
    """Residual of a stored solution against its instance's data."""
    from .gauss_image import compute_partition

    p = solution.polytope()
    masses = compute_partition(p, instance.lam).cell_masses
    return float(np.abs(masses - instance.mu.weights).max())


def bundled_instance_path(name: str) -> Path:
    """Path of an instance shipped with the package (e.g. 'square')."""
    res = importlib.resources.files("gaussimage").joinpath("instances", f"{name}.json")
    with importlib.resources.as_file(res) as p:
        if not p.exists():
            raise FileNotFoundError(f"no bundled instance named {name!r}")
        return Path(p)
