"""
app/main.py

ElastiMatch command-line entry point.

Subcommands
-----------
  match    elastic symmetric-difference matching of a source onto a target
  compare  symmetric-difference method vs. the ICP-like baseline
  symdiff  symmetric-difference area (and optional normal gradient) of two shapes
  mesh     triangulate a shape and write OFF + SVG
  track    match a sequence of targets, warm-starting each frame

Exit codes: 0 ok, 2 invalid input, 3 mesh failure, 4 numerical failure.

Usage:
  python -m app.main match data/ellipse.json data/rectangle.json --out out/
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

# Ensure repo root is on PYTHONPATH so `python app/main.py` works as well as `-m app.main`.
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import numpy as np  # noqa: E402
from pydantic import ValidationError  # noqa: E402

from app.renderers import render_mesh, render_overlay, render_region  # noqa: E402
from models.conic import ConicProgram, dump_program  # noqa: E402
from models.matcher import MatchResult, ProgramHook, icp_like_match, initial_forces, match, track  # noqa: E402
from pipelines.elasticity import SchurOperator, assemble_stiffness, schur_condense  # noqa: E402
from pipelines.errors import (  # noqa: E402
    ClipDegeneracy,
    DegenerateTriangle,
    DegenerateVertex,
    InputValidationError,
    MeshFailure,
    NumericalFailure,
    SingularInterior,
)
from pipelines.geometry import BoolOp, clip, joint_diagonal, set_area  # noqa: E402
from pipelines.meshing import MeshParams, mesh_quality, order_nodes, triangulate  # noqa: E402
from pipelines.schemas import ComparisonRow, LameParams, MatchConfig, RunManifest  # noqa: E402
from pipelines.symdiff import DeformedBoundary, full_gradient, gradient  # noqa: E402
from storage.export import (  # noqa: E402
    atomic_write_text,
    read_manifest,
    write_compare_csv,
    write_gradient_csv,
    write_iterations_csv,
    write_manifest,
    write_result_json,
)
from storage.mesh_files import read_off, read_schur, write_off, write_schur  # noqa: E402
from storage.shapes import load_shape, load_source  # noqa: E402

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
LOG_LEVEL_ENV = "ELASTIMATCH_LOG_LEVEL"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MESH = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("matching configuration (normalized units)")
    g.add_argument("--alpha", type=float, help="fidelity weight (default 10 / (area(S)+area(T))^2)")
    g.add_argument("--beta", type=float, help="localization weight (default 1)")
    g.add_argument("--max-iters", type=int, help="outer iteration limit (default 50)")
    g.add_argument("--stop-fraction", type=float, help="stop below this fraction of area(S)+area(T) (default 0.01)")
    g.add_argument("--fd-step", type=float, help="finite-difference step (default 1e-3)")
    g.add_argument("--distortion-bound", type=float, help="per-triangle conformal distortion bound (off if absent)")
    g.add_argument("--mu", type=float, help="Lame mu (default 1)")
    g.add_argument("--lambda", dest="lam", type=float, help="Lame lambda (default 0)")
    g.add_argument("--form", choices=["hooke", "navier"], help="bilinear form (default hooke)")
    g.add_argument("--max-area", type=float, help="max triangle area (default 1.5e-3)")
    g.add_argument("--min-angle", type=float, help="min triangle angle in degrees (default 25)")
    g.add_argument("--workers", type=int, help="threads for gradient clips (default 1)")
    g.add_argument("--seed", type=int, help="reserved; every stage is deterministic")
    g.add_argument("--fixed-weights", action="store_true",
                   help="never escalate the default alpha and beta when an iteration stalls")
    p.add_argument("--mesh", type=Path, help="pre-built OFF mesh of the source")
    p.add_argument("--schur-cache", type=Path,
                   help="binary Schur complement: read if it exists, otherwise written after the run")
    p.add_argument("--from-manifest", type=Path, help="re-run the inputs and configuration of a manifest.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elastimatch", description="Elastic shape matching by symmetric-difference minimization.")
    parser.add_argument("--log-level", default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="match a source shape onto a target")
    p.add_argument("source", type=Path, nargs="?")
    p.add_argument("target", type=Path, nargs="?")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--dump-programs", type=Path, metavar="DIR", help="write every conic subproblem as text into DIR")
    _add_config_flags(p)

    p = sub.add_parser("compare", help="symmetric-difference method vs. ICP-like baseline")
    p.add_argument("source", type=Path, nargs="?")
    p.add_argument("target", type=Path, nargs="?")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--dump-programs", type=Path, metavar="DIR", help="write every conic subproblem as text into DIR")
    _add_config_flags(p)

    p = sub.add_parser("symdiff", help="symmetric-difference area of two shapes")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--svg", type=Path, help="write the clipped region as SVG")
    p.add_argument("--gradient", type=Path, help="write per-node normal derivatives of the first shape")
    p.add_argument("--full", action="store_true", help="also write the brute-force 2K-component gradient")
    p.add_argument("--fd-step", type=float, help="finite-difference step in shape units (default 1e-3 of the diagonal)")

    p = sub.add_parser("mesh", help="triangulate a shape")
    p.add_argument("shape", type=Path)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--max-area", type=float, help="max triangle area for a unit-diagonal shape (default 1.5e-3)")
    p.add_argument("--min-angle", type=float, help="min triangle angle in degrees (default 25)")
    p.add_argument("--strict", action="store_true", help="fail when the angle bound cannot be met")
    p.add_argument("--schur", action="store_true", help="also write the boundary Schur complement (schur.bin)")
    p.add_argument("--mu", type=float, help="Lame mu for --schur (default 1)")
    p.add_argument("--lambda", dest="lam", type=float, help="Lame lambda for --schur (default 0)")

    p = sub.add_parser("track", help="match a sequence of gradually deforming targets")
    p.add_argument("source", type=Path, nargs="?")
    p.add_argument("targets", type=Path, nargs="*")
    p.add_argument("--out", type=Path, default=Path("out"))
    _add_config_flags(p)
    return parser


def config_from_args(args: argparse.Namespace, base: Optional[MatchConfig] = None) -> MatchConfig:
    """Overlay explicitly given flags onto a base configuration."""
    data: dict[str, Any] = base.model_dump() if base is not None else {}
    mapping = {
        "alpha": "alpha", "beta": "beta", "max_iters": "max_iters", "stop_fraction": "stop_fraction",
        "fd_step": "fd_step", "distortion_bound": "distortion_bound", "form": "bilinear_form",
        "max_area": "max_triangle_area", "min_angle": "min_angle_deg", "workers": "workers", "seed": "seed",
    }
    for flag, key in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    if getattr(args, "fixed_weights", False):
        data["stall_escalation"] = None
    lame = dict(data.get("lame") or {})
    if getattr(args, "mu", None) is not None:
        lame["mu"] = args.mu
    if getattr(args, "lam", None) is not None:
        lame["lam"] = args.lam
    if lame:
        data["lame"] = LameParams(**lame)
    try:
        return MatchConfig(**data)
    except ValidationError as exc:
        raise InputValidationError(f"invalid configuration: {exc}") from exc


def _resolve_run(args: argparse.Namespace, needs_target: bool = True) -> tuple[MatchConfig, Optional[RunManifest]]:
    manifest = None
    base = None
    if args.from_manifest is not None:
        manifest = read_manifest(args.from_manifest)
        base = manifest.config
        args.source = args.source or Path(manifest.source)
        if hasattr(args, "target"):
            args.target = args.target or (Path(manifest.target) if manifest.target else None)
        if hasattr(args, "targets"):
            args.targets = args.targets or [Path(t) for t in manifest.targets]
        if args.mesh is None and manifest.mesh:
            args.mesh = Path(manifest.mesh)
        if args.schur_cache is None and manifest.schur_cache:
            args.schur_cache = Path(manifest.schur_cache)
    if args.source is None:
        raise InputValidationError("a source shape is required")
    if needs_target and getattr(args, "target", None) is None:
        raise InputValidationError("a target shape is required")
    return config_from_args(args, base), manifest


def _manifest(command: str, args: argparse.Namespace, cfg: MatchConfig, stages: dict[str, float],
              termination: Optional[str], targets: Sequence[Path] = ()) -> RunManifest:
    return RunManifest(
        command=command,
        source=str(args.source),
        target=str(args.target) if getattr(args, "target", None) else None,
        targets=[str(t) for t in targets],
        mesh=str(args.mesh) if getattr(args, "mesh", None) else None,
        schur_cache=str(args.schur_cache) if getattr(args, "schur_cache", None) else None,
        config=cfg,
        tool_version=TOOL_VERSION,
        stage_seconds=stages,
        termination=termination,
    )


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


def _write_run(out: Path, result: MatchResult, prefix: str = "") -> None:
    write_iterations_csv(out / f"{prefix}iterations.csv", result.log)
    write_result_json(out / f"{prefix}result.json", result)
    final = render_overlay(
        result.deformed_source(), result.target, result.forces,
        title=f"{result.method}: {result.termination} after {result.iterations} iterations, "
              f"fraction {result.final_fraction:.4%}",
        deformed=True,
    )
    atomic_write_text(out / f"{prefix}overlay_final.svg", final)


def _comparison_row(result: MatchResult) -> ComparisonRow:
    last = result.log[-1]
    return ComparisonRow(
        method=result.method, iterations=result.iterations, force_norm=last.force_norm,
        max_CD=last.max_cd, mean_CD=last.mean_cd, final_fraction=last.area_fraction,
    )


def _program_dumper(directory: Optional[Path], method: str) -> Optional[ProgramHook]:
    if directory is None:
        return None

    def dump(iteration: int, program: ConicProgram) -> None:
        buf = io.StringIO()
        dump_program(program, buf)
        atomic_write_text(directory / f"{method}_iter{iteration:03d}.txt", buf.getvalue())

    return dump


def _load_schur_cache(path: Optional[Path]) -> Optional[SchurOperator]:
    if path is None or not path.exists():
        return None
    logger.info("Reading Schur complement cache %s", path)
    return read_schur(path)


def _store_schur_cache(path: Optional[Path], result: MatchResult) -> None:
    if path is not None and not path.exists():
        write_schur(path, result.elastic.schur)
        logger.info("Wrote Schur complement cache %s (K=%d)", path, result.elastic.K)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_match(args: argparse.Namespace) -> int:
    cfg, _ = _resolve_run(args)
    source = load_source(args.source)
    target = load_shape(args.target)
    mesh = read_off(args.mesh) if args.mesh else None

    restoring, _ = initial_forces(source, target, cfg)
    atomic_write_text(
        args.out / "overlay_init.svg",
        render_overlay(source, target, restoring, title="initial restoring force"),
    )
    schur = _load_schur_cache(args.schur_cache)
    result = match(source, target, cfg, mesh=mesh, schur=schur,
                   on_program=_program_dumper(args.dump_programs, "symdiff"))
    _store_schur_cache(args.schur_cache, result)
    _write_run(args.out, result)
    write_manifest(args.out / "manifest.json",
                   _manifest("match", args, cfg, result.stage_seconds, result.termination))

    print(f"{result.termination}: {result.iterations} iterations, "
          f"area fraction {result.final_fraction:.6f}, force norm {result.log[-1].force_norm:.6g}")
    return EXIT_NUMERICAL if result.termination == "solver_failure" else EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg, _ = _resolve_run(args)
    source = load_source(args.source)
    target = load_shape(args.target)
    mesh = read_off(args.mesh) if args.mesh else None

    restoring, closest = initial_forces(source, target, cfg)
    atomic_write_text(
        args.out / "overlay_init_forces.svg",
        render_overlay(source, target, restoring, title="initial driving forces (blue: symmetric difference)",
                       alt_forces=closest, alt_label="closest-point (ICP-like)"),
    )

    schur = _load_schur_cache(args.schur_cache)
    results = [
        match(source, target, cfg, mesh=mesh, schur=schur,
              on_program=_program_dumper(args.dump_programs, "symdiff")),
        icp_like_match(source, target, cfg, mesh=mesh, schur=schur,
                       on_program=_program_dumper(args.dump_programs, "icp_like")),
    ]
    _store_schur_cache(args.schur_cache, results[0])
    rows = []
    stages: dict[str, float] = {}
    for res in results:
        _write_run(args.out, res, prefix=f"{res.method}_")
        rows.append(_comparison_row(res))
        stages.update({f"{res.method}.{k}": v for k, v in res.stage_seconds.items()})
    write_compare_csv(args.out / "compare.csv", rows)
    terminations = ",".join(f"{r.method}={r.termination}" for r in results)
    write_manifest(args.out / "manifest.json", _manifest("compare", args, cfg, stages, terminations))

    print(f"{'method':<10} {'iters':>5} {'force_norm':>12} {'max_CD':>8} {'mean_CD':>8} {'fraction':>9}")
    for r in rows:
        print(f"{r.method:<10} {r.iterations:>5} {r.force_norm:>12.5g} {r.max_CD:>8.3f} "
              f"{r.mean_CD:>8.3f} {r.final_fraction:>9.5f}")
    return EXIT_NUMERICAL if any(r.termination == "solver_failure" for r in results) else EXIT_OK


def cmd_symdiff(args: argparse.Namespace) -> int:
    a = load_shape(args.a)
    b = load_shape(args.b)
    region = clip(a, b, BoolOp.symmetric_difference)
    area = set_area(region)
    total = set_area(a) + set_area(b)
    fraction = area / total if total > 0 else 0.0
    print(f"symdiff_area {area!r}")
    print(f"fraction {fraction!r}")

    if args.svg:
        atomic_write_text(args.svg, render_region(a, b, region, title=f"symmetric difference {area:.6g}"))
    if args.gradient:
        source = load_source(args.a)
        db = DeformedBoundary(source, np.zeros(2 * len(source)))
        h = args.fd_step or 1e-3 * joint_diagonal(source, b)
        grad = gradient(db, b, h=h)
        write_gradient_csv(args.gradient, grad.normals, grad.d)
        if args.full:
            g_full = full_gradient(db, b, h=h).reshape(-1, 2)
            full_path = args.gradient.with_name(args.gradient.stem + "_full.csv")
            lines = ["node,gx,gy"] + [f"{i},{gx!r},{gy!r}" for i, (gx, gy) in enumerate(g_full.tolist())]
            atomic_write_text(full_path, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_mesh(args: argparse.Namespace) -> int:
    shape = load_source(args.shape)
    diag = joint_diagonal(shape)
    params = MeshParams(
        max_triangle_area=(args.max_area or MeshParams().max_triangle_area) * diag ** 2,
        min_angle_deg=args.min_angle or MeshParams().min_angle_deg,
    )
    mesh = triangulate(shape, params, strict=args.strict)
    q = mesh_quality(mesh)
    write_off(args.out / "mesh.off", mesh)
    atomic_write_text(args.out / "mesh.svg", render_mesh(mesh.nodes, mesh.triangles,
                                                         title=f"N={q.n_nodes} K={q.n_boundary} F={q.n_triangles}"))
    if args.schur:
        lame = LameParams(mu=args.mu if args.mu is not None else 1.0, lam=args.lam if args.lam is not None else 0.0)
        S = schur_condense(assemble_stiffness(mesh, order_nodes(mesh), lame))
        write_schur(args.out / "schur.bin", S)
    print(f"N={q.n_nodes} K={q.n_boundary} triangles={q.n_triangles} "
          f"min_angle={q.min_angle_deg:.2f} area={q.total_area!r}")
    return EXIT_OK


def cmd_track(args: argparse.Namespace) -> int:
    cfg, _ = _resolve_run(args, needs_target=False)
    if not args.targets:
        raise InputValidationError("track needs at least one target")
    source = load_source(args.source)
    targets = [load_shape(t) for t in args.targets]
    mesh = read_off(args.mesh) if args.mesh else None

    results = track(source, targets, cfg, mesh=mesh, schur=_load_schur_cache(args.schur_cache))
    _store_schur_cache(args.schur_cache, results[0])
    stages: dict[str, float] = {}
    for i, res in enumerate(results):
        _write_run(args.out, res, prefix=f"frame{i:03d}_")
        stages[f"frame{i:03d}"] = res.stage_seconds.get("iterations", 0.0)
        print(f"frame {i}: {res.termination}, {res.iterations} iterations, fraction {res.final_fraction:.6f}")
    terminations = ",".join(r.termination for r in results)
    write_manifest(args.out / "manifest.json",
                   _manifest("track", args, cfg, stages, terminations, targets=args.targets))
    return EXIT_NUMERICAL if any(r.termination == "solver_failure" for r in results) else EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "match": cmd_match,
    "compare": cmd_compare,
    "symdiff": cmd_symdiff,
    "mesh": cmd_mesh,
    "track": cmd_track,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except InputValidationError as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_INPUT
    except (MeshFailure, DegenerateTriangle) as exc:
        logger.error("Mesh failure: %s", exc)
        return EXIT_MESH
    except (NumericalFailure, SingularInterior, ClipDegeneracy, DegenerateVertex) as exc:
        logger.error("Numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
