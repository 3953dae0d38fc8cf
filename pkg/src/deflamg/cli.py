"""Command-line driver.

Four subcommands:

* ``solve``             -- one system (generated Poisson or MatrixMarket files),
                           report printed as JSON;
* ``bench``             -- weak or strong scaling sweep over subdomain counts,
                           emitted as CSV;
* ``compare-deflation`` -- deflation vs plain block-AMG over a weak sweep, CSV;
* ``print-config``      -- the merged configuration tree as canonical JSON.

Exit codes: 0 converged, 1 not converged (or a solver-side failure such as a
singular deflation matrix), 2 usage, parse, or configuration errors.

``--subdomains`` is a single count for ``solve`` (perfect cubes become k*k*k
boxes, anything else z-slabs; an explicit ``MX,MY,MZ`` triple picks the box
grid), and a comma list of counts for the sweep commands. In weak mode the
grid is scaled per axis so every subdomain keeps ``N``^3 unknowns.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .config import SolverConfig
from .deflation import DeflatedSolver
from .errors import (
    BreakdownError,
    ConfigError,
    DimensionError,
    ParseError,
    PartitionError,
    SingularMatrixError,
    StructureError,
)
from .mmio import read_mask, read_matrix_market, read_vector, write_vector
from .problems import boxes_for, poisson3d
from .runtime import partition_contiguous
from .schur import solve_block_system

__all__ = ["main", "load_config", "BENCH_CSV_HEADER", "COMPARE_CSV_HEADER"]

BENCH_CSV_HEADER = "subdomains,threads,setup_s,factorize_E_s,solve_s,iters,converged"
COMPARE_CSV_HEADER = (
    "subdomains,unknowns,deflated_iters,deflated_converged,local_iters,local_converged"
)

DESK_UNKNOWN_LIMIT = 20_000_000

USAGE_ERRORS = (ParseError, ConfigError, PartitionError, DimensionError, StructureError)
SOLVER_ERRORS = (SingularMatrixError, BreakdownError)


def load_config(source: str | None) -> SolverConfig:
    """Build a SolverConfig from a file path or an inline JSON object."""
    if source is None:
        return SolverConfig()
    text = source.strip()
    if not text.startswith("{"):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"{source}: cannot open: {exc}") from exc
    return SolverConfig.from_json(text)


def _parse_boxes(spec: str):
    """solve's --subdomains: a count or an explicit MX,MY,MZ box triple."""
    parts = spec.split(",")
    try:
        numbers = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"--subdomains: expected integers, got '{spec}'") from None
    if any(v < 1 for v in numbers):
        raise ConfigError(f"--subdomains: counts must be positive, got '{spec}'")
    if len(numbers) == 1:
        return boxes_for(numbers[0])
    if len(numbers) == 3:
        return tuple(numbers)
    raise ConfigError(f"--subdomains: expected M or MX,MY,MZ, got '{spec}'")


def _parse_counts(spec: str):
    """bench/compare-deflation's --subdomains: comma list of counts."""
    try:
        counts = [int(p) for p in spec.split(",")]
    except ValueError:
        raise ConfigError(f"--subdomains: expected integers, got '{spec}'") from None
    if not counts or any(m < 1 for m in counts):
        raise ConfigError(f"--subdomains: counts must be positive, got '{spec}'")
    return counts


def _parse_kinds(spec: str):
    kinds = spec.split(",")
    for kind in kinds:
        if kind not in ("constant", "linear"):
            raise ConfigError(f"--deflation: unknown kind '{kind}'")
    return kinds


def _check_feasible(shape) -> None:
    unknowns = int(np.prod(shape, dtype=np.int64))
    if unknowns > DESK_UNKNOWN_LIMIT:
        raise ConfigError(
            f"grid {shape[0]}x{shape[1]}x{shape[2]} has {unknowns} unknowns, "
            f"beyond the desk-scale limit of {DESK_UNKNOWN_LIMIT}"
        )


def _apply_overrides(cfg: SolverConfig, args) -> SolverConfig:
    if getattr(args, "tol", None) is not None:
        cfg.set("solver.tol", args.tol)  # CLI beats the config file
    return cfg


def _write_rows(path: str | None, header: str, rows, label: str | None = None):
    lines = [header] + [",".join(str(c) for c in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        if label is not None:
            sys.stdout.write(f"# deflation={label}\n")
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _per_kind_path(path: str | None, kind: str, multiple: bool) -> str | None:
    if path is None or not multiple:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}-{kind}{ext or '.csv'}"


# -- solve ---------------------------------------------------------------------


def _solve_generated(args, cfg: SolverConfig) -> int:
    boxes = _parse_boxes(args.subdomains)
    _check_feasible((args.poisson,) * 3)
    prob = poisson3d(args.poisson, boxes=boxes)
    solver = DeflatedSolver(
        prob.matrix,
        prob.partition,
        config=cfg,
        coords=prob.coords,
        threads_per_subdomain=args.threads,
    )
    x, report = solver.solve(prob.rhs)
    print(json.dumps(report, indent=2))
    if args.solution:
        # natural grid order, so the file does not depend on --subdomains
        write_vector(x[prob.unknown_of_node], args.solution)
    return 0 if report["converged"] else 1


def _solve_files(args, cfg: SolverConfig) -> int:
    A = read_matrix_market(args.matrix)
    b = read_vector(args.rhs) if args.rhs else np.ones(A.nrows)
    if b.shape != (A.nrows,):
        raise DimensionError(
            f"right-hand side has length {b.shape[0]}, matrix has {A.nrows} rows"
        )
    m = int(args.subdomains) if args.subdomains else 1
    if args.mask:
        mask = read_mask(args.mask)
        if mask.shape != (A.nrows,):
            raise DimensionError(
                f"mask has length {mask.shape[0]}, matrix has {A.nrows} rows"
            )
        n_pressure = int(np.count_nonzero(mask))
        partition = partition_contiguous(n_pressure, m) if n_pressure else None
        x, report = solve_block_system(
            A, b, cfg,
            pressure_mask=mask,
            pressure_partition=partition,
            threads_per_subdomain=args.threads,
        )
    else:
        solver = DeflatedSolver(
            A,
            partition_contiguous(A.nrows, m),
            config=cfg,
            threads_per_subdomain=args.threads,
        )
        x, report = solver.solve(b)
    print(json.dumps(report, indent=2))
    if args.solution:
        write_vector(x, args.solution)
    return 0 if report["converged"] else 1


def cmd_solve(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if args.deflation:
        (kind,) = _parse_kinds(args.deflation)
        cfg.set("deflation.kind", kind)
        cfg.set("precond.psolver.deflation.kind", kind)
    if args.matrix:
        return _solve_files(args, cfg)
    if args.poisson is None:
        raise ConfigError("solve needs either --poisson N or --matrix PATH")
    return _solve_generated(args, cfg)


# -- scaling sweeps --------------------------------------------------------------


def _sweep_problem(mode: str, base: int, m: int):
    boxes = boxes_for(m)
    if mode == "weak":
        shape = tuple(base * b for b in boxes)
    else:
        shape = (base, base, base)
    _check_feasible(shape)
    return poisson3d(shape, boxes=boxes)


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    counts = _parse_counts(args.subdomains)
    kinds = _parse_kinds(args.deflation) if args.deflation else [cfg.get("deflation.kind")]
    for kind in kinds:
        rows = []
        for m in counts:
            prob = _sweep_problem(args.mode, args.poisson, m)
            run_cfg = SolverConfig(json.loads(cfg.to_json()))
            run_cfg.set("deflation.kind", kind)
            solver = DeflatedSolver(
                prob.matrix,
                prob.partition,
                config=run_cfg,
                coords=prob.coords,
                threads_per_subdomain=args.threads,
            )
            _, rep = solver.solve(prob.rhs)
            rows.append(
                (
                    m,
                    args.threads,
                    f"{rep['setup_seconds']:.6f}",
                    f"{rep['factorize_seconds']:.6f}",
                    f"{rep['solve_seconds']:.6f}",
                    rep["iterations"],
                    "true" if rep["converged"] else "false",
                )
            )
        _write_rows(
            _per_kind_path(args.csv, kind, len(kinds) > 1),
            BENCH_CSV_HEADER,
            rows,
            label=kind if len(kinds) > 1 else None,
        )
    return 0


def cmd_compare_deflation(args) -> int:
    cfg = load_config(args.config)
    if args.deflation:
        (kind,) = _parse_kinds(args.deflation)
        cfg.set("deflation.kind", kind)
    counts = _parse_counts(args.subdomains)
    rows = []
    for m in counts:
        prob = _sweep_problem("weak", args.poisson, m)
        deflated = DeflatedSolver(
            prob.matrix, prob.partition, config=cfg, coords=prob.coords,
            threads_per_subdomain=args.threads,
        )
        _, drep = deflated.solve(prob.rhs)
        local = DeflatedSolver(
            prob.matrix, prob.partition, config=cfg, coords=prob.coords,
            deflated=False, threads_per_subdomain=args.threads,
        )
        _, lrep = local.solve(prob.rhs)
        rows.append(
            (
                m,
                prob.matrix.nrows,
                drep["iterations"],
                "true" if drep["converged"] else "false",
                lrep["iterations"],
                "true" if lrep["converged"] else "false",
            )
        )
    _write_rows(args.csv, COMPARE_CSV_HEADER, rows)
    return 0


def cmd_print_config(args) -> int:
    print(load_config(args.config).to_json())
    return 0


# -- wiring ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deflamg",
        description="Deflated Krylov solvers with subdomain-local smoothed-aggregation AMG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep: bool):
        p.add_argument("--config", metavar="PATH", help="JSON configuration file (or inline JSON)")
        p.add_argument("--threads", type=int, default=1, metavar="T",
                       help="threads per subdomain for local matvecs (numerically inert)")
        if sweep:
            p.add_argument("--poisson", type=int, required=True, metavar="N",
                           help="grid edge: per-subdomain in weak mode, global in strong mode")
            p.add_argument("--subdomains", required=True, metavar="M1,M2,...",
                           help="comma list of subdomain counts to sweep")
            p.add_argument("--csv", metavar="PATH", help="write CSV here instead of stdout")

    ps = sub.add_parser("solve", help="solve one system and print the report as JSON")
    ps.add_argument("--poisson", type=int, metavar="N", help="generate an N^3 Poisson system")
    ps.add_argument("--matrix", metavar="PATH", help="MatrixMarket system matrix")
    ps.add_argument("--rhs", metavar="PATH", help="right-hand side, one value per line (default: ones)")
    ps.add_argument("--mask", metavar="PATH",
                    help="pressure mask (0/1 per line); selects the block solver")
    ps.add_argument("--subdomains", default="1", metavar="M|MX,MY,MZ",
                    help="subdomain count or box triple (default 1)")
    ps.add_argument("--deflation", metavar="KIND", help="constant or linear")
    ps.add_argument("--tol", type=float, metavar="TOL",
                    help="override solver.tol from the config file")
    ps.add_argument(
        "--solution",
        metavar="PATH",
        help="write the solution vector here (natural grid order for --poisson)",
    )
    common(ps, sweep=False)
    ps.set_defaults(handler=cmd_solve)

    pb = sub.add_parser("bench", help="weak/strong scaling sweep, CSV output")
    pb.add_argument("mode", choices=("weak", "strong"))
    pb.add_argument("--deflation", metavar="KINDS",
                    help="comma list of deflation kinds (default: config value)")
    common(pb, sweep=True)
    pb.set_defaults(handler=cmd_bench)

    pc = sub.add_parser(
        "compare-deflation",
        help="deflated vs no-deflation block-AMG over a weak sweep, CSV output",
    )
    pc.add_argument("--deflation", metavar="KIND", help="constant or linear")
    common(pc, sweep=True)
    pc.set_defaults(handler=cmd_compare_deflation)

    pp = sub.add_parser("print-config", help="print the merged configuration as JSON")
    pp.add_argument("--config", metavar="PATH", help="JSON configuration file (or inline JSON)")
    pp.set_defaults(handler=cmd_print_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
