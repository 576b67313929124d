"""Batch driver: mesh -> assembly -> continuation -> analysis -> artifacts.

Given a run configuration (file or shipped preset) this executes the full
pipeline and writes every artifact with provenance: mesh and field VTK files,
eigenvalue and trace CSV tables, the partition report (CSV + PGM + PNG),
per-stage checkpoints, and a manifest that suffices to re-run the experiment.
Identical (config, seed) runs produce byte-identical CSV output.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import build_report
from .config import (PRESETS, RunConfig, config_echo, load_config,
                     parse_config, validate_text)
from .energy import save_state
from .errors import SpecpartError, StageFailureError
from .export import (rasterize_partition, write_csv, write_eigenvalue_csv,
                     write_pgm, write_report_csvs, write_trace_csv, write_vtk)
from .fem import assemble_mass, assemble_stiffness
from .figures import (save_fields_figure, save_partition_figure,
                      save_trace_figure)
from .mesh import build_disk_mesh, build_rectangle_mesh, build_square_mesh
from .optimizer import continuation_run


def build_domain_mesh(cfg: RunConfig):
    if cfg.domain_type == "square":
        return build_square_mesh(cfg.resolution)
    if cfg.domain_type == "rectangle":
        return build_rectangle_mesh(cfg.width, cfg.height,
                                    cfg.resolution,
                                    max(2, round(cfg.resolution * cfg.height / cfg.width)))
    return build_disk_mesh(cfg.resolution)


def _stage_line(record) -> str:
    return (f"stage {record.stage:2d}  beta {record.beta:10.4g}  "
            f"energy {record.energy:14.8g}  penalty {record.penalty:10.4g}  "
            f"grad {record.grad_norm:9.3g}  iters {record.iterations}")


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()

    mesh = build_domain_mesh(cfg)
    write_vtk(outdir / "mesh.vtk", mesh, title="mesh")

    def hook(stage, state, record):
        print(_stage_line(record))
        save_state(outdir / f"checkpoint_stage_{stage}.npz", state, mesh)

    try:
        state, trace = continuation_run(cfg.functional, cfg.solver, mesh,
                                        checkpoint_hook=hook)
    except StageFailureError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        if exc.trace is not None and exc.trace.stages:
            write_trace_csv(outdir / "trace.csv", exc.trace)
        return 1

    write_trace_csv(outdir / "trace.csv", trace)
    save_state(outdir / "final_state.npz", state, mesh)

    K = assemble_stiffness(mesh)
    B = assemble_mass(mesh)
    report = build_report(state, cfg.functional, mesh, K, B)

    point_data = {}
    for i, U in enumerate(state.groups):
        for j in range(U.shape[1]):
            point_data[f"group{i}_field{j}"] = U[:, j]
    label = np.full(mesh.n_vertices, -1.0)
    for i in range(report.masks.shape[0]):
        label[report.masks[i]] = float(i)
    point_data["group_label"] = label
    write_vtk(outdir / "fields.vtk", mesh, point_data, title="fields")

    for i, rep in enumerate(report.eigen_reports):
        write_eigenvalue_csv(outdir / f"eigenvalues_group{i}.csv", rep)
    write_report_csvs(outdir / "report_eigenvalues.csv",
                      outdir / "report_residuals.csv", report)
    write_pgm(outdir / "partition.pgm", rasterize_partition(report.masks, mesh))
    np.savez(outdir / "masks.npz", masks=report.masks)

    save_partition_figure(outdir / "partition.png", mesh, report.masks)
    save_fields_figure(outdir / "fields.png", mesh, state)
    save_trace_figure(outdir / "trace.png", trace)

    wall = time.perf_counter() - t_start
    manifest = [
        f"specpart {__version__}",
        f"wall_time_seconds = {wall:.3f}",
        f"numpy = {np.__version__}",
        "",
        "# resolved configuration",
        config_echo(cfg),
    ]
    (outdir / "manifest.txt").write_text("\n".join(manifest))

    final = trace.stages[-1]
    print(f"done: energy {final.energy:.8g}, penalty share "
          f"{final.penalty / abs(final.energy):.3g}, wall {wall:.1f}s "
          f"-> {outdir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specpart",
        description="Compute an optimal spectral partition of a planar domain "
                    "and verify its structure (eigenvalues, spectral gap, "
                    "interface balance).")
    parser.add_argument("config", nargs="?",
                        help="path to a run configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="use a shipped configuration instead of a file")
    parser.add_argument("--validate", action="store_true",
                        help="only check the configuration, do not run")
    parser.add_argument("--output", help="override the output directory")
    parser.add_argument("--seed", type=int, help="override the run seed")
    args = parser.parse_args(argv)

    if args.preset and args.config:
        parser.error("give either a config file or --preset, not both")
    if not args.preset and not args.config:
        parser.error("a config file or --preset is required")

    if args.preset:
        text = PRESETS[args.preset]
    else:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return 2

    if args.validate:
        issues = validate_text(text)
        for issue in issues:
            print(issue)
        if not issues:
            print("configuration is valid")
        return 0 if not issues else 2

    try:
        cfg = parse_config(text)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return 2

    if args.seed is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, seed=args.seed))
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)

    try:
        return run(cfg)
    except SpecpartError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
