"""Command line driver: ``afc run <config>`` and ``afc convergence <config> --levels N``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from .benchmarks import get_case
from .config import ConfigError, RunConfig, load_config
from .diagnostics import DiagnosticsRecord
from .integrator import FDINonConvergenceError, SolverAbort
from .models import InadmissibleStateError
from . import runner

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_FDI = 0, 2, 3, 4
FMT = "%.16e"


def _fmt(x) -> str:
    return FMT % float(x)


def output_dir(cfg: RunConfig) -> Path:
    return Path(os.environ.get("AFC_OUTPUT_DIR") or cfg.output_dir)


def write_solution(path: Path, mesh, u, component_names):
    coords = ["x", "y"][: mesh.dim]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*coords, *component_names])
        for xc, uc in zip(mesh.coords, u):
            w.writerow([*map(_fmt, xc), *map(_fmt, uc)])


def write_diagnostics(path: Path, records, component_names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagnosticsRecord.header(component_names))
        for rec in records:
            w.writerow([_fmt(v) for v in rec.row()])


def write_manifest(path: Path, cfg: RunConfig):
    path.write_text(cfg.to_text(), encoding="utf-8")


def cmd_run(cfg: RunConfig) -> int:
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "manifest.txt", cfg)
    res = runner.run(cfg)
    names = get_case(cfg.problem).model(cfg.bp).component_names
    write_solution(out / "solution.csv", res.mesh, res.u, names)
    write_diagnostics(out / "diagnostics.csv", res.records, names)
    msg = f"{cfg.problem}: {res.mesh.num_nodes} nodes, t = {cfg.t_final}"
    if res.error_l1 is not None:
        msg += f", L1 error {res.error_l1:.6e}"
    print(msg)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, levels: int) -> int:
    if levels < 3:
        raise ConfigError("--levels: a convergence study needs at least 3 levels")
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "manifest.txt", cfg)

    def progress(lvl, res):
        print(f"  cells {lvl.cells:5d}  dt {lvl.dt:.3e}  done", flush=True)

    rows = runner.convergence(cfg, levels, progress)
    with open(out / "convergence.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cells", "e1", "eoc"])
        for r in rows:
            w.writerow([r.cells, _fmt(r.e1), _fmt(r.eoc)])
    for r in rows:
        print(f"{r.cells:6d}  e1 {r.e1:.4e}  EOC {r.eoc:.3f}")
    print(f"wrote {out / 'convergence.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="afc", description="Flux-corrected FEM benchmark driver")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("config")
    c = sub.add_parser("convergence", help="run a refinement study")
    c.add_argument("config")
    c.add_argument("--levels", type=int, default=3)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_convergence(cfg, args.levels)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FDINonConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_FDI
    except (SolverAbort, InadmissibleStateError) as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
