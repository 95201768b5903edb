"""Run configuration and file formats.

Solution and field CSVs have a header ``x1,...,xn,u1,...,ud`` and one row
per point with ``x1`` varying fastest; floats carry 17 significant digits
so a write/read round trip is lossless.  Convergence logs are JSON lines
with the keys ``iter``, ``F``, ``grad_norm`` and ``step``.
"""

from __future__ import annotations

import csv
import difflib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .descent import IsoperimetricConstraint
from .expressions import ExpressionError, parse_expression
from .grid import BoxDomain, GridError, GridFunction, UniformGrid, build_grid
from .optimizer import IterationRecord, OptimizerConfig
from .problems import BoundaryMode, Problem, builtin_problem


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


FLOAT_FORMAT = "%.17g"

_OPTIMIZER_KEYS = tuple(f.name for f in fields(OptimizerConfig))
_TOP_KEYS = (
    "domain",
    "cells",
    "problem",
    "params",
    "d",
    "boundary_mode",
    "isoperimetric",
    "solution_csv",
    "convergence_log",
    "seed",
) + _OPTIMIZER_KEYS
_REQUIRED = ("domain", "cells", "problem")


@dataclass
class RunConfig:
    domain: BoxDomain
    cells: tuple[int, ...]
    problem: str
    params: dict[str, Any] = field(default_factory=dict)
    d: int = 1
    boundary_mode: BoundaryMode = BoundaryMode.ALL_SIDES
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    isoperimetric: IsoperimetricConstraint | None = None
    solution_csv: Path | None = None
    convergence_log: Path | None = None
    seed: int = 0

    def grid(self) -> UniformGrid:
        return build_grid(self.domain, self.cells)

    def build_problem(self) -> Problem:
        problem = builtin_problem(
            self.problem, self.params, n=self.domain.n, boundary_mode=self.boundary_mode
        )
        if problem.d != self.d:
            raise ConfigError(
                f"problem {self.problem!r} has d={problem.d} but config says d={self.d}"
            )
        return problem


def _reject_unknown(keys: Iterable[str], allowed: Iterable[str], where: str) -> None:
    allowed = list(allowed)
    for key in keys:
        if key not in allowed:
            close = difflib.get_close_matches(key, allowed, n=1, cutoff=0.5)
            if not close:
                # catch camelCase spellings of snake_case keys
                folded = {a.replace("_", "").lower(): a for a in allowed}
                hit = folded.get(key.replace("_", "").lower())
                close = [hit] if hit else []
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"unknown key {where}{key!r}{hint}")


def _number(value, key: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {type(value).__name__}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return float(value)


def _number_list(value, key: str, integer: bool = False) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty array")
    return [_number(x, f"{key}[{i}]", integer) for i, x in enumerate(value)]


def _expr_tree(value, key: str, n: int):
    """Check that ``value`` is an expression or a nested list of them."""
    if isinstance(value, str):
        try:
            parse_expression(value, n)
        except ExpressionError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
        return value
    if isinstance(value, list):
        return [_expr_tree(x, f"{key}[{i}]", n) for i, x in enumerate(value)]
    raise ConfigError(f"{key}: expected an expression string, got {type(value).__name__}")


def config_from_dict(raw: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Validate a decoded JSON config.  Output paths resolve against ``base_dir``."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    dom = raw["domain"]
    if not isinstance(dom, Mapping):
        raise ConfigError("domain: expected an object with 'lower' and 'upper'")
    _reject_unknown(dom, ("lower", "upper"), "domain.")
    for key in ("lower", "upper"):
        if key not in dom:
            raise ConfigError(f"missing required key 'domain.{key}'")
    lower = _number_list(dom["lower"], "domain.lower")
    upper = _number_list(dom["upper"], "domain.upper")
    try:
        domain = BoxDomain(lower, upper)
    except GridError as exc:
        raise ConfigError(f"domain: {exc}") from exc

    cells = _number_list(raw["cells"], "cells", integer=True)
    if len(cells) != domain.n:
        raise ConfigError(
            f"cells has {len(cells)} entries but the domain has rank {domain.n}"
        )
    if min(cells) < 2:
        raise ConfigError(f"cells: every axis needs at least 2 cells, got {cells}")

    problem = raw["problem"]
    if not isinstance(problem, str):
        raise ConfigError("problem: expected a problem name")
    params = raw.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigError("params: expected an object")
    params = {k: _expr_tree(v, f"params.{k}", domain.n) for k, v in params.items()}

    d = _number(raw.get("d", 1), "d", integer=True)
    if d < 1:
        raise ConfigError(f"d: must be at least 1, got {d}")
    try:
        mode = BoundaryMode(raw.get("boundary_mode", "all_sides"))
    except ValueError as exc:
        choices = ", ".join(m.value for m in BoundaryMode)
        raise ConfigError(
            f"boundary_mode: {raw.get('boundary_mode')!r} is not one of {choices}"
        ) from exc

    opt = {}
    for key in _OPTIMIZER_KEYS:
        if key in raw:
            opt[key] = _number(raw[key], key, integer=key == "max_iters")
    try:
        optimizer = OptimizerConfig(**opt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    iso = None
    if raw.get("isoperimetric") is not None:
        block = raw["isoperimetric"]
        if not isinstance(block, Mapping):
            raise ConfigError("isoperimetric: expected an object")
        _reject_unknown(block, ("g0", "g1", "g2", "c"), "isoperimetric.")
        kw = {
            k: _expr_tree(block[k], f"isoperimetric.{k}", 2)
            for k in ("g0", "g1", "g2")
            if k in block
        }
        kw["c"] = _number(block.get("c", 0.0), "isoperimetric.c")
        try:
            iso = IsoperimetricConstraint(**kw)
        except ExpressionError as exc:
            raise ConfigError(f"isoperimetric: {exc}") from exc

    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    paths = {}
    for key in ("solution_csv", "convergence_log"):
        value = raw.get(key)
        if value is None:
            paths[key] = None
        elif isinstance(value, str):
            paths[key] = base_dir / value
        else:
            raise ConfigError(f"{key}: expected a path string")

    cfg = RunConfig(
        domain=domain,
        cells=tuple(cells),
        problem=problem,
        params=params,
        d=d,
        boundary_mode=mode,
        optimizer=optimizer,
        isoperimetric=iso,
        solution_csv=paths["solution_csv"],
        convergence_log=paths["convergence_log"],
        seed=_number(raw.get("seed", 0), "seed", integer=True),
    )
    # surface expression and registry errors at parse time
    try:
        cfg.build_problem()
    except ExpressionError as exc:
        raise ConfigError(f"params: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def _format_row(values) -> str:
    return ",".join(FLOAT_FORMAT % x for x in values)


def format_csv(f: GridFunction) -> str:
    """Coordinates and values, one point per row, ``x1`` fastest."""
    coords = np.stack([c.ravel(order="F") for c in f.coordinates()], axis=1)
    data = np.hstack([coords, f.flat()])
    n, d = f.grid.n, f.d
    header = [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(d)]
    lines = [",".join(header)] + [_format_row(row) for row in data]
    return "\n".join(lines) + "\n"


def write_csv(f: GridFunction, path) -> None:
    Path(path).write_text(format_csv(f), encoding="utf-8")


def read_csv(path, grid: UniformGrid, placement) -> GridFunction:
    """Read a field written by :func:`write_csv` onto ``grid``.

    The row count and coordinate columns must match the grid.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise GridError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    n = grid.n
    if header[:n] != [f"x{i + 1}" for i in range(n)] or len(header) <= n:
        raise GridError(f"{path}: header must be x1..x{n} followed by u1..ud")
    try:
        data = np.array(body, dtype=float)
    except ValueError as exc:
        raise GridError(f"{path}: non-numeric entry") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise GridError(f"{path}: ragged rows")
    f = GridFunction.from_flat(grid, placement, data[:, n:])
    expected = np.stack([c.ravel(order="F") for c in f.coordinates()], axis=1)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(expected))))
    if not np.allclose(data[:, :n], expected, rtol=0.0, atol=tol):
        raise GridError(f"{path}: coordinates do not match the requested grid")
    return f


def log_line(record: IterationRecord) -> str:
    return json.dumps(
        {"iter": record.iter, "F": record.F, "grad_norm": record.grad_norm, "step": record.step}
    )


def write_log(records: Iterable[IterationRecord], path) -> None:
    text = "".join(log_line(r) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8")
