"""Command-line interface.

Subcommands: ``solve`` (exit 0 converged / 2 not / 1 bad input),
``check`` (0 holds / 3 fails / 4 indeterminate at grid resolution),
``oracle`` (planar brute-force verification), ``export`` (SVG or OBJ of a
solution).  The environment variable GIP_THREADS caps the BLAS worker
count (0 = automatic).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path


def _apply_thread_cap() -> None:
    cap = os.environ.get("GIP_THREADS")
    if cap and cap != "0":
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


_apply_thread_cap()

import numpy as np  # noqa: E402

from . import io as gio  # noqa: E402
from .aleksandrov import check_weak_aleksandrov, find_uniform_alpha  # noqa: E402
from .measures import mass_tolerance, total_mass  # noqa: E402
from .oracles import arc_cell_masses, brute_force_maximize  # noqa: E402
from .polytope import DualPolytope, canonicalize, polar_vertices  # noqa: E402
from .solver import SolverConfig, solve  # noqa: E402

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_FAILS = 3
EXIT_INDETERMINATE = 4


def _error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INVALID


def cmd_solve(args) -> int:
    try:
        inst = gio.load_instance(args.instance)
    except (gio.InstanceError, FileNotFoundError) as e:
        return _error(str(e))
    try:
        cfg = SolverConfig(
            tol=args.tol,
            max_iters=args.max_iters,
            seed=args.seed,
            init=args.init,
            step_rule=args.step_rule,
        )
        report = solve(inst.mu, inst.lam, cfg)
    except ValueError as e:
        return _error(str(e))
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(".solution.json")
    gio.save_solution(out, report)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iter", "phi", "residual_inf", "min_alpha", "max_alpha", "cluster_count"])
            for i in range(len(report.phi_trace)):
                writer.writerow(
                    [
                        i,
                        repr(float(report.phi_trace[i])),
                        repr(float(report.residual_trace[i])),
                        repr(float(report.min_alpha_trace[i])),
                        repr(float(report.max_alpha_trace[i])),
                        int(report.cluster_count_trace[i]),
                    ]
                )
    print(
        json.dumps(
            {
                "converged": report.converged,
                "iterations": report.n_iters,
                "residual_inf": report.residual_inf,
                "phi": report.phi_trace[-1],
                "radii_ratio": report.radii_ratio,
                "rescale_events": len(report.rescale_events),
                "solution": str(out),
            },
            indent=2,
        )
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_check(args) -> int:
    try:
        inst = gio.load_instance(args.instance)
    except (gio.InstanceError, FileNotFoundError) as e:
        return _error(str(e))
    eps = mass_tolerance(inst.lam)
    if args.find_alpha:
        alpha = find_uniform_alpha(inst.mu, inst.lam, heuristic=args.heuristic)
        print(
            json.dumps(
                {"uniform_alpha": alpha, "eps": eps, "found": alpha is not None}, indent=2
            )
        )
        return EXIT_OK if alpha is not None else EXIT_FAILS
    if args.alpha is None:
        return _error("pass --alpha RADIANS or --find-alpha")
    try:
        report = check_weak_aleksandrov(inst.mu, inst.lam, args.alpha, heuristic=args.heuristic)
    except ValueError as e:
        return _error(str(e))
    worst = report.worst_slack
    imbalance = abs(total_mass(inst.mu) - total_mass(inst.lam))
    ranked = sorted(report.per_subset, key=lambda kv: kv[1])
    print(
        json.dumps(
            {
                "holds": report.holds,
                "alpha": args.alpha,
                "masses_balanced": report.masses_balanced,
                "mass_imbalance": imbalance,
                "worst_slack": worst,
                "eps": eps,
                "mode": report.mode,
                "subsets_tested": len(report.per_subset),
                "worst_subsets": [
                    {"atoms": list(k), "slack": v} for k, v in ranked[:10]
                ],
            },
            indent=2,
        )
    )
    if imbalance > eps:
        return EXIT_FAILS
    if worst > eps:
        return EXIT_OK
    if worst < -eps:
        return EXIT_FAILS
    return EXIT_INDETERMINATE


def cmd_oracle(args) -> int:
    try:
        inst = gio.load_instance(args.instance)
    except (gio.InstanceError, FileNotFoundError) as e:
        return _error(str(e))
    if inst.dimension != 2:
        return _error("the oracle command supports planar instances only")
    if inst.mu.num_atoms > 6:
        return _error("brute-force verification is limited to 6 atoms")
    t_star, f_star = brute_force_maximize(
        inst.mu, inst.lam, box_halfwidth=args.box_halfwidth, points_per_dim=args.points
    )
    alphas = np.exp(t_star - t_star.max())
    p = canonicalize(DualPolytope(inst.mu.atoms, alphas))
    masses = arc_cell_masses(p, density=_angular_density(inst))
    print(
        json.dumps(
            {
                "brute_force_log_alphas": t_star.tolist(),
                "brute_force_objective": f_star,
                "maximizer_alphas": p.alphas.tolist(),
                "exact_cell_masses": masses.tolist(),
                "target_weights": inst.mu.weights.tolist(),
                "max_cell_error": float(np.abs(masses - inst.mu.weights).max()),
            },
            indent=2,
        )
    )
    return EXIT_OK


def _angular_density(inst: gio.Instance):
    """Continuous angular density matching the instance density description."""
    doc = inst.source.get("lambda", {"type": "uniform"})
    scale_doc = dict(doc)
    kind = scale_doc.get("type", "uniform")
    # reproduce the normalization factor applied at load time
    factor = total_mass(inst.lam)
    if kind == "uniform":
        return lambda theta: factor / (2 * math.pi)
    if kind == "caps":
        centers = np.asarray(scale_doc["centers"], dtype=float)
        centers = np.arctan2(centers[:, 1], centers[:, 0])
        halfwidths = np.asarray(scale_doc["halfwidths"], dtype=float)
        values = np.asarray(scale_doc["values"], dtype=float)
        background = float(scale_doc.get("background", 0.0))
        raw_total = background * 2 * math.pi + float(
            np.sum(2 * halfwidths * values)
        )
        scale = factor / raw_total

        def density(theta: float) -> float:
            val = background
            for c, h, v in zip(centers, halfwidths, values):
                delta = (theta - c + math.pi) % (2 * math.pi) - math.pi
                if abs(delta) < h:
                    val += v
            return val * scale

        return density
    raise gio.InstanceError("oracle densities support 'uniform' and 'caps' lambdas only")


def _polygon_path(points: np.ndarray) -> str:
    return "M " + " L ".join(f"{x:.6f},{y:.6f}" for x, y in points) + " Z"


def _write_svg(path, record: gio.SolutionRecord) -> None:
    from .oracles import arc_cells

    p = record.polytope()
    polar = polar_vertices(p.directions, p.alphas)
    primal = (1.0 / p.alphas)[:, None] * p.directions
    order = np.argsort(np.arctan2(primal[:, 1], primal[:, 0]))
    primal = primal[order]
    extent = 1.25 * max(np.abs(polar).max(), np.abs(primal).max(), 1.0)
    cells = arc_cells(canonicalize(p))
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{-extent} {-extent} {2*extent} {2*extent}" width="640" height="640">',
        f'<g transform="scale(1,-1)">',
        f'<circle cx="0" cy="0" r="1" fill="none" stroke="#bbbbbb" stroke-width="{extent/320}" stroke-dasharray="{extent/80},{extent/80}"/>',
        f'<path d="{_polygon_path(polar)}" fill="none" stroke="#1f77b4" stroke-width="{extent/160}"/>',
        f'<path d="{_polygon_path(primal)}" fill="none" stroke="#2ca02c" stroke-width="{extent/160}"/>',
    ]
    for i, v in enumerate(p.directions):
        parts.append(
            f'<line x1="0" y1="0" x2="{v[0]:.6f}" y2="{v[1]:.6f}" stroke="#444444" stroke-width="{extent/400}"/>'
        )
    for i, intervals in enumerate(cells.intervals):
        color = palette[i % len(palette)]
        for a, b in intervals:
            large = 1 if (b - a) > math.pi else 0
            x0, y0 = math.cos(a), math.sin(a)
            x1, y1 = math.cos(b), math.sin(b)
            parts.append(
                f'<path d="M {x0:.6f},{y0:.6f} A 1,1 0 {large} 1 {x1:.6f},{y1:.6f}" '
                f'fill="none" stroke="{color}" stroke-width="{extent/100}"/>'
            )
    parts.append("</g></svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _oriented_faces(vertices: np.ndarray) -> list[tuple[int, int, int]]:
    from scipy.spatial import ConvexHull

    hull = ConvexHull(vertices)
    center = vertices[hull.vertices].mean(axis=0)
    faces = []
    for simplex in hull.simplices:
        a, b, c = vertices[simplex]
        normal = np.cross(b - a, c - a)
        if normal @ (a - center) < 0:
            simplex = simplex[::-1]
        faces.append(tuple(int(i) for i in simplex))
    return faces


def _write_obj(path, record: gio.SolutionRecord) -> None:
    p = record.polytope()
    polar = polar_vertices(p.directions, p.alphas)
    primal = (1.0 / p.alphas)[:, None] * p.directions
    lines = ["# gaussimage solution meshes: polar body then primal body"]
    offset = 0
    for name, verts in (("polar", polar), ("primal", primal)):
        lines.append(f"o {name}")
        for v in verts:
            lines.append("v " + " ".join(f"{x:.17g}" for x in v))
        for face in _oriented_faces(verts):
            lines.append("f " + " ".join(str(i + 1 + offset) for i in face))
        offset += len(verts)
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_export(args) -> int:
    try:
        record = gio.load_solution(args.solution)
    except (gio.InstanceError, FileNotFoundError) as e:
        return _error(str(e))
    if not args.svg and not args.obj:
        return _error("pass --svg OUT.svg or --obj OUT.obj")
    dim = record.directions.shape[1]
    try:
        if args.svg:
            if dim != 2:
                return _error("--svg requires a planar solution")
            _write_svg(args.svg, record)
            print(f"wrote {args.svg}")
        if args.obj:
            if dim != 3:
                return _error("--obj requires a 3-d solution")
            _write_obj(args.obj, record)
            print(f"wrote {args.obj}")
    except ValueError as e:
        return _error(str(e))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gip", description="Gauss image problem solver and diagnostics"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve an instance file")
    p_solve.add_argument("instance")
    p_solve.add_argument("--tol", type=float, default=1e-3)
    p_solve.add_argument("--max-iters", type=int, default=10_000)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--init", choices=("ones", "random"), default="ones")
    p_solve.add_argument("--step-rule", choices=("polyak", "diminishing", "fixed"), default="polyak")
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--trace-csv", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_check = sub.add_parser("check", help="check the weak compatibility relation")
    p_check.add_argument("instance")
    p_check.add_argument("--alpha", type=float, default=None)
    p_check.add_argument("--find-alpha", action="store_true")
    p_check.add_argument("--heuristic", action="store_true")
    p_check.set_defaults(func=cmd_check)

    p_oracle = sub.add_parser("oracle", help="planar brute-force verification")
    p_oracle.add_argument("instance")
    p_oracle.add_argument("--box-halfwidth", type=float, default=0.75)
    p_oracle.add_argument("--points", type=int, default=9)
    p_oracle.set_defaults(func=cmd_oracle)

    p_export = sub.add_parser("export", help="export a solution as SVG or OBJ")
    p_export.add_argument("solution")
    p_export.add_argument("--svg", default=None)
    p_export.add_argument("--obj", default=None)
    p_export.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
