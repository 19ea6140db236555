"""Command-line front end: validate meshes, export extraction operators, and
run the adaptive solver.

Exit codes: 0 success, 1 domain failure (invalid or non-suitable mesh, solver
failure), 2 unreadable input.  All numeric output uses 17 significant digits
and runs are deterministic for a fixed configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import benchmarks, meshio
from .basis import GlobalKnots
from .extraction import dump_extraction, extract_all
from .hierarchy import HierarchicalSpace, LevelMesh, build_hierarchy
from .iga import Discretization, adaptive_loop, sample_field
from .meshio import ParseError
from .tmesh import MeshStructureError

FMT = "%.17g"

DEFAULTS = {
    "p": 2,
    "q": None,  # defaults to p
    "tol": 1e-3,
    "beta": None,  # defaults to p+1
    "max_levels": 8,
    "benchmark": "skew45",
    "out": ".",
    "seed": 0,
    "elements": 16,
    "kappa": None,
    "iterations": 5,
    "mesh": None,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="hasts", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("validate", "check a mesh file and report analysis-suitability"),
        ("extract", "write the Bezier extraction export for a mesh or hierarchy"),
        ("solve", "run the adaptive SUPG solver on a benchmark"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--mesh", help="mesh or hierarchy file")
        p.add_argument("--p", type=int, help="horizontal degree (benchmark runs)")
        p.add_argument("--q", type=int, help="vertical degree (defaults to --p)")
        p.add_argument("--tol", type=float, help="refinement tolerance (> 0)")
        p.add_argument("--beta", type=float, help="marking exponent (defaults to p+1)")
        p.add_argument("--max-levels", type=int, dest="max_levels", help="level cap, 1..16")
        p.add_argument("--benchmark", choices=("skew45", "manufactured", "none"))
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized generators")
        p.add_argument("--elements", type=int, help="initial elements per side")
        p.add_argument("--kappa", type=float, help="diffusivity override")
        p.add_argument("--iterations", type=int, help="adaptive iteration cap")
    return ap


def resolve_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(0, f"config file: {exc}")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ParseError(0, f"unknown config keys {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["q"] is None:
        cfg["q"] = cfg["p"]
    if cfg["beta"] is None:
        cfg["beta"] = cfg["p"] + 1
    if cfg["tol"] <= 0:
        raise MeshStructureError("tol must be positive")
    if not 1 <= cfg["max_levels"] <= 16:
        raise MeshStructureError("max-levels must be in 1..16")
    if cfg["p"] < 1 or cfg["q"] < 1:
        raise MeshStructureError("degrees must be >= 1")
    return cfg


def _read_text(path):
    try:
        with open(path) as f:
            return f.read()
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc}")


def _load_space(path):
    """A mesh file becomes a one-level space; a hierarchy file keeps levels."""
    text = _read_text(path)
    head = text.lstrip().splitlines()[0] if text.strip() else ""
    if head == meshio.HIER_MAGIC:
        return build_hierarchy(meshio.parse_hierarchy(text))
    mesh, hk, vk = meshio.parse_mesh(text)
    return build_hierarchy([LevelMesh(1, mesh, hk, vk)])


def _outpath(cfg, name):
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def run_validate(cfg):
    if not cfg["mesh"]:
        raise ParseError(0, "validate requires --mesh")
    mesh, _, _ = meshio.parse_mesh(_read_text(cfg["mesh"]))
    report = mesh.validate()
    ok, bad = (mesh.is_analysis_suitable() if not report else (False, []))
    lines = [f"mesh {cfg['mesh']}", f"m {mesh.m} n {mesh.n} p {mesh.p} q {mesh.q}"]
    for v in report:
        lines.append(f"violation {v}")
    lines.append(f"analysis-suitable {'yes' if ok else 'no'}")
    for h, v in bad:
        lines.append(
            "offending-pair "
            f"h y={h.line} x=[{h.lo},{h.hi}] junction=({h.junction.x},{h.junction.y}) "
            f"v x={v.line} y=[{v.lo},{v.hi}] junction=({v.junction.x},{v.junction.y})"
        )
    text = "\n".join(lines) + "\n"
    with open(_outpath(cfg, "validate_report.txt"), "w") as f:
        f.write(text)
    sys.stdout.write(text)
    return 0 if ok and not report else 1


def run_extract(cfg):
    if not cfg["mesh"]:
        raise ParseError(0, "extract requires --mesh")
    space = _load_space(cfg["mesh"])
    for lv in space.levels:
        bad = lv.mesh.validate()
        if bad:
            print(f"level {lv.level} invalid: {bad[0]}")
            return 1
        if not lv.mesh.is_analysis_suitable()[0]:
            print(f"level {lv.level} mesh is not analysis-suitable")
            return 1
    elems = extract_all(space)
    with open(_outpath(cfg, "extraction.txt"), "w") as f:
        f.write(dump_extraction(space, elems))
    print(f"n_f {space.n_f} n_e {space.n_e}")
    return 0


def _write_iteration(cfg, k, disc, coeffs, estimates):
    X, Y, PHI = sample_field(disc, coeffs)
    with open(_outpath(cfg, f"field_{k:03d}.txt"), "w") as f:
        f.write("# x y phi\n")
        for row in zip(X.ravel(), Y.ravel(), PHI.ravel()):
            f.write(" ".join(FMT % v for v in row) + "\n")
    with open(_outpath(cfg, f"elements_{k:03d}.txt"), "w") as f:
        f.write("# level s1 s2 t1 t2 estimate\n")
        for he, est in zip(disc.space.elements, estimates):
            r = [float(v) for v in he.param_rect]
            f.write(f"{he.level} " + " ".join(FMT % v for v in r) + " " + FMT % est + "\n")
    with open(_outpath(cfg, f"greville_{k:03d}.txt"), "w") as f:
        f.write("# level s t\n")
        for hf, (s, t) in zip(disc.space.functions, disc.space.greville_points()):
            f.write(f"{hf.level} " + FMT % s + " " + FMT % t + "\n")


def run_solve(cfg):
    if cfg["benchmark"] == "none":
        raise MeshStructureError("solve requires a benchmark (skew45 or manufactured)")
    problem = benchmarks.benchmark_problem(cfg["benchmark"], cfg["kappa"])
    if cfg["mesh"]:
        space = _load_space(cfg["mesh"])
    else:
        space = benchmarks.tensor_space(cfg["elements"], cfg["p"], cfg["q"])
    res = adaptive_loop(
        problem,
        space,
        tol=cfg["tol"],
        beta=cfg["beta"],
        max_levels=cfg["max_levels"],
        max_iterations=cfg["iterations"],
        keep_iterations=True,
    )
    for k, (disc, coeffs, estimates) in enumerate(res.iterations, start=1):
        _write_iteration(cfg, k, disc, coeffs, estimates)
    with open(_outpath(cfg, "history.txt"), "w") as f:
        f.write("# iteration n_f n_e total_estimate marked\n")
        for r in res.history:
            f.write(f"{r.iteration} {r.n_f} {r.n_e} " + FMT % r.total_estimate + f" {r.marked}\n")
    last = res.history[-1]
    print(
        f"iterations {last.iteration} n_f {last.n_f} n_e {last.n_e} "
        "total_estimate " + FMT % last.total_estimate
    )
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "validate":
            return run_validate(cfg)
        if args.command == "extract":
            return run_extract(cfg)
        return run_solve(cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except MeshStructureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
