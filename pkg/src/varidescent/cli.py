"""Command-line front end.

Exit codes: 0 success, 1 input or I/O error, 2 iteration cap reached,
3 line-search failure, 4 gradient check failed.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .descent import (
    DegenerateConstraintError,
    boundary_mode_gradient,
    directional_derivative,
    mode_projection,
)
from .grid import BoxDomain, GridError, GridFunction, Placement, build_grid, norm_l2
from .io import (
    ConfigError,
    RunConfig,
    format_csv,
    parse_config,
    read_csv,
    write_csv,
    write_log,
)
from .operators import certify_L0, project_L0
from .optimizer import Termination, minimize
from .oracles import fd_sweep
from .problems import EvaluationError, ProblemError, list_problems

THREADS_ENV = "VARIDESCENT_THREADS"
GRADIENT_CHECK_TOL = 1e-2
EPS_SWEEP = (1e-4, 1e-5, 1e-6)

_EXIT = {
    Termination.GRADIENT_TOLERANCE: 0,
    Termination.CRITICAL_POINT: 0,
    Termination.MAX_ITERATIONS: 2,
    Termination.LINE_SEARCH_FAILURE: 3,
}


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _write_outputs(cfg: RunConfig, report) -> None:
    if cfg.solution_csv is not None:
        write_csv(report.final_u, cfg.solution_csv)
    if cfg.convergence_log is not None:
        write_log(report.iterations, cfg.convergence_log)


def cmd_solve(cfg: RunConfig) -> int:
    try:
        problem = cfg.build_problem()
        grid = cfg.grid()
    except (ConfigError, ProblemError, GridError) as exc:
        _err(str(exc))
        return 1
    try:
        report = minimize(problem, grid, cfg.optimizer, constraint=cfg.isoperimetric)
    except EvaluationError as exc:
        _err(str(exc))
        partial = getattr(exc, "report", None)
        if partial is not None and partial.iterations:
            with contextlib.suppress(OSError):
                _write_outputs(cfg, partial)
        return 1
    except (DegenerateConstraintError, ProblemError) as exc:
        _err(str(exc))
        return 1
    try:
        _write_outputs(cfg, report)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return 1
    last = report.iterations[-1]
    print(
        f"{report.termination.value}: {last.iter} iterations, "
        f"F = {last.F:.12g}, |G| = {last.grad_norm:.3e}"
    )
    return _EXIT[report.termination]


def cmd_check_gradient(cfg: RunConfig, n_directions: int = 3) -> int:
    try:
        problem = cfg.build_problem()
        grid = cfg.grid()
    except (ConfigError, ProblemError, GridError) as exc:
        _err(str(exc))
        return 1
    rng = np.random.default_rng(cfg.seed)
    v = GridFunction.zeros(grid, Placement.CELLS, problem.d)
    try:
        bundle = boundary_mode_gradient(problem, v)
        if bundle.grad_norm == 0.0:
            print("gradient vanishes identically at v = 0 (degenerate case); nothing to compare")
            return 0
        print(f"{'dir':>3} {'eps':>8} {'fd':>24} {'analytic':>24} {'rel_err':>10}")
        worst = 0.0
        for k in range(n_directions):
            raw = GridFunction(grid, Placement.CELLS, rng.standard_normal((problem.d, *grid.cell_shape)))
            h = mode_projection(raw, problem.boundary_mode)
            h = h / norm_l2(h)
            analytic = directional_derivative(problem, v, h)
            rows = fd_sweep(problem, v, h, analytic, EPS_SWEEP)
            for eps, fd, rel in rows:
                print(f"{k:>3} {eps:>8.0e} {fd:>24.16e} {analytic:>24.16e} {rel:>10.2e}")
            worst = max(worst, min(r[2] for r in rows))
    except EvaluationError as exc:
        _err(str(exc))
        return 1
    ok = worst <= GRADIENT_CHECK_TOL
    print(f"best relative error (worst direction): {worst:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 4


def _parse_floats(text: str, what: str, integer: bool = False) -> list:
    try:
        conv = int if integer else float
        return [conv(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def cmd_project(path, domain: str, cells: str, output=None) -> int:
    try:
        bounds = _parse_floats(domain, "--domain")
        if len(bounds) % 2:
            raise ConfigError("--domain needs pairs a1,b1[,a2,b2...]")
        dom = BoxDomain(bounds[0::2], bounds[1::2])
        counts = _parse_floats(cells, "--cells", integer=True)
        if len(counts) != dom.n:
            raise ConfigError(f"--cells has {len(counts)} entries but --domain has rank {dom.n}")
        grid = build_grid(dom, counts)
        v = read_csv(path, grid, Placement.CELLS)
    except (ConfigError, GridError, OSError) as exc:
        _err(str(exc))
        return 1
    w = project_L0(v)
    cert = certify_L0(w, 1e-12)
    try:
        if output is None:
            sys.stdout.write(format_csv(w))
        else:
            write_csv(w, output)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return 1
    print(f"L0 certificate residual: {cert.max_slab_residual:.3e}", file=sys.stderr)
    return 0


def cmd_list_problems() -> int:
    for name in list_problems():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varidescent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="run steepest descent from a JSON config")
    p.add_argument("config")
    p = sub.add_parser("check-gradient", help="compare the analytic gradient with finite differences")
    p.add_argument("config")
    p = sub.add_parser("project", help="project a cell field CSV onto the zero-slab subspace")
    p.add_argument("field")
    p.add_argument("--domain", required=True, help="a1,b1[,a2,b2...]")
    p.add_argument("--cells", required=True, help="N1[,N2...]")
    p.add_argument("-o", "--output", help="output CSV (default: stdout)")
    sub.add_parser("list-problems", help="print the registered problem names")
    return parser


def _thread_limit() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _dispatch(args) -> int:
    if args.command == "list-problems":
        return cmd_list_problems()
    if args.command == "project":
        return cmd_project(args.field, args.domain, args.cells, args.output)
    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        _err(str(exc))
        return 1
    if args.command == "solve":
        return cmd_solve(cfg)
    return cmd_check_gradient(cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        limit = _thread_limit()
    except ConfigError as exc:
        _err(str(exc))
        return 1
    with threadpool_limits(limits=limit):
        return _dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
