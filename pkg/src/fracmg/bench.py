"""Experiment orchestration: configs, presets, result tables, timing series."""

import csv
import dataclasses
from dataclasses import dataclass, field
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

from .assembly import build_load
from .cache import load_or_build
from .errors import ConfigError
from .kernel import DirectionalMeasure, KernelParams, discretize_measure
from .mesh import build_hierarchy
from .multigrid import MultigridSolver

__all__ = [
    "COLUMNS",
    "SOLVERS",
    "PRESETS",
    "RunConfig",
    "Row",
    "resolve_measure",
    "resolve_source",
    "prepare_solver",
    "run_benchmark",
    "format_rows",
    "write_rows",
    "timing_series",
    "emit_timing_series",
]

log = logging.getLogger(__name__)

COLUMNS = (
    "level",
    "dofs",
    "solver",
    "iters",
    "total_seconds",
    "seconds_per_iteration",
    "final_diff_inf",
    "converged",
)
SOLVERS = ("vcycle", "pcg", "cg")

_AXES = [[0.0, 0.25], [math.pi / 2, 0.25], [math.pi, 0.25], [3 * math.pi / 2, 0.25]]

PRESETS = {
    "example1": {
        "domain": [2.0, 2.0],
        "n0": 4,
        "l0": 4,
        "alpha": 0.75,
        "c": 0.0,
        "measure": {"kind": "atoms", "atoms": _AXES},
        "f": "one",
        "levels": [4, 6],
    },
    "example2": {
        "domain": [2.0, 2.0],
        "n0": 4,
        "l0": 4,
        "alpha": 0.75,
        "c": 0.0,
        "measure": {"kind": "uniform"},
        "f": "one",
        "levels": [4, 6],
    },
}


@dataclass
class RunConfig:
    domain: tuple = (2.0, 2.0)
    n0: int = 4
    l0: int = 4
    levels: tuple = (4, 4)
    alpha: float = 0.75
    c: float = 0.0
    measure: dict = field(default_factory=lambda: {"kind": "atoms", "atoms": _AXES})
    f: str = "one"
    solvers: tuple = SOLVERS
    tol: float = 1e-6
    max_iter: int = 200
    cg_max_iter: int = 5000
    cg_max_level: int = 6
    cache_dir: str = None
    out: str = None
    format: str = "csv"

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def preset(cls, name, **overrides):
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        data = json.loads(json.dumps(PRESETS[name]))
        data.update(overrides)
        return cls.from_dict(data)

    def validate(self):
        self.domain = tuple(float(v) for v in self.domain)
        self.levels = tuple(int(v) for v in self.levels)
        self.solvers = tuple(self.solvers)
        if len(self.domain) != 2:
            raise ConfigError("domain is [Lx, Ly]")
        if len(self.levels) != 2 or not 1 <= self.levels[0] <= self.levels[1]:
            raise ConfigError(f"levels must be a range a..b with 1 <= a <= b, got {self.levels}")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ConfigError(f"unknown solvers {bad}; choose from {SOLVERS}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        KernelParams(self.alpha, self.c)
        build_hierarchy(self.n0, self.l0, 1, self.domain)
        if not isinstance(self.measure, dict) or "kind" not in self.measure:
            raise ConfigError("measure spec must be a mapping with a 'kind'")
        return self


@dataclass
class Row:
    level: int
    dofs: int
    solver: str
    iters: int
    total_seconds: float
    seconds_per_iteration: float
    final_diff_inf: float
    converged: bool

    def as_dict(self):
        return dataclasses.asdict(self)


_EXPR_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "pi", "minimum", "maximum", "where")
}


def _expression(expr, names=("x", "y")):
    try:
        code = compile(expr, "<config expression>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc}") from exc

    def fn(*args):
        scope = dict(_EXPR_NAMES)
        scope.update(zip(names, args))
        return eval(code, {"__builtins__": {}}, scope)

    return fn


def resolve_measure(spec, finest):
    """Turn a measure spec into a :class:`DirectionalMeasure` for finest level ``finest``.

    ``uniform`` and ``density`` specs default to ``N_theta = 4 (n_J + 1)``.
    """
    kind = spec.get("kind")
    if kind == "atoms":
        try:
            measure = DirectionalMeasure.from_atoms(spec["atoms"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad atom list: {exc}") from exc
        measure.partner_index()
        return measure
    if kind in ("uniform", "density"):
        N = spec.get("N_theta") or 4 * (finest.n + 1)
        if kind == "uniform":
            return discretize_measure(lambda t: 1.0, N)
        if "expr" not in spec:
            raise ConfigError("density measure needs an 'expr' in theta")
        dens = _expression(spec["expr"], names=("theta",))
        return discretize_measure(lambda t: float(dens(t)), N)
    raise ConfigError(f"unknown measure kind {kind!r}")


def resolve_source(spec):
    if spec in ("one", 1, 1.0):
        return lambda x, y: np.ones_like(x)
    if isinstance(spec, str):
        expr = _expression(spec)
        return lambda x, y: np.broadcast_to(np.asarray(expr(x, y), dtype=float), np.shape(x))
    raise ConfigError(f"cannot interpret source term {spec!r}")


def prepare_solver(config, J):
    """Hierarchy, measure and solver for finest level ``J``."""
    hierarchy = build_hierarchy(config.n0, config.l0, J, config.domain)
    measure = resolve_measure(config.measure, hierarchy.finest)
    params = KernelParams(config.alpha, config.c)
    generators = [
        load_or_build(hierarchy[k], measure, params, config.cache_dir) for k in range(1, J + 1)
    ]
    return hierarchy, measure, MultigridSolver(hierarchy, generators)


def run_benchmark(config):
    """Solve for every level in ``config.levels`` with every selected solver."""
    rows = []
    if not config.solvers:
        return rows
    source = resolve_source(config.f)
    for J in range(config.levels[0], config.levels[1] + 1):
        hierarchy, _, solver = prepare_solver(config, J)
        f = build_load(hierarchy.finest, source)
        for name in config.solvers:
            if name == "cg" and J > config.cg_max_level:
                log.info("skipping cg at level %d (cg_max_level=%d)", J, config.cg_max_level)
                continue
            if name == "vcycle":
                _, rep = solver.solve_vcycle(f, config.tol, config.max_iter)
            elif name == "pcg":
                _, rep = solver.solve_pcg(f, config.tol, config.max_iter)
            else:
                _, rep = solver.solve_cg(f, config.tol, config.cg_max_iter)
            if not rep.converged:
                log.warning("%s at level %d failed: %s", name, J, rep.message)
            rows.append(
                Row(
                    J,
                    hierarchy.finest.num_nodes,
                    name,
                    rep.iterations,
                    rep.total_seconds,
                    rep.seconds_per_iteration,
                    rep.final_diff_inf,
                    rep.converged,
                )
            )
    return rows


def format_rows(rows, fmt="csv"):
    if fmt == "json":
        return json.dumps([r.as_dict() for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        d = r.as_dict()
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in COLUMNS])
    return buf.getvalue()


def write_rows(rows, path=None, fmt="csv"):
    text = format_rows(rows, fmt)
    if path is None:
        return text
    Path(path).write_text(text)
    return text


def timing_series(rows, solver="vcycle"):
    """``(dofs, seconds_per_iteration)`` arrays and the log-log slope."""
    picked = [r for r in rows if r.solver == solver]
    if len(picked) < 2:
        raise ValueError(f"need at least two levels of {solver} timings, got {len(picked)}")
    dofs = np.array([r.dofs for r in picked], dtype=float)
    secs = np.array([r.seconds_per_iteration for r in picked], dtype=float)
    if np.any(np.diff(dofs) <= 0):
        raise ValueError("degrees of freedom must increase strictly from row to row")
    if np.any(secs <= 0):
        raise ValueError("timings must be positive")
    slope = float(np.polyfit(np.log(dofs), np.log(secs), 1)[0])
    return dofs, secs, slope


def emit_timing_series(rows, path=None, solver="vcycle"):
    """Two-column ``dofs seconds_per_iteration`` file with the fitted slope in a header."""
    dofs, secs, slope = timing_series(rows, solver)
    lines = [
        f"# solver: {solver}",
        f"# loglog_slope: {slope:.6f}",
        "# dofs seconds_per_iteration",
    ]
    lines += [f"{int(d)} {s:.9e}" for d, s in zip(dofs, secs)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text, slope
