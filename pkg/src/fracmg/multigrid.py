"""V-cycle multigrid, multigrid-preconditioned CG, and plain CG.

Iterates and corrections are nodal coefficient vectors; right-hand sides and
residuals are moment vectors ``{(g, phi_m)}``.  In that split the smoother is
a division by a scalar and the coarse-space projection is the transpose of
nodal interpolation, both exact.
"""

from dataclasses import dataclass, field
import time

import numpy as np
import scipy.linalg as sl

from .assembly import generator_matrix
from .mesh import prolongation_matrix
from .toeplitz import ToeplitzOperator, apply_stiffness

__all__ = ["LevelOperator", "SolveReport", "MultigridSolver"]


@dataclass
class LevelOperator:
    level: object
    stiffness: ToeplitzOperator
    lambda_tilde: float
    prolongation: object = None  # sparse map from level k-1, None on level 1
    coarse_factor: tuple = None  # Cholesky factor of the level-1 matrix

    def apply(self, U):
        return apply_stiffness(self.stiffness, U, self.level)


@dataclass
class SolveReport:
    solver: str
    iterations: int = 0
    per_iteration_seconds: list = field(default_factory=list)
    final_diff_inf: float = float("nan")
    converged: bool = False
    message: str = ""
    diff_history: list = field(default_factory=list)

    @property
    def total_seconds(self):
        return float(sum(self.per_iteration_seconds))

    @property
    def seconds_per_iteration(self):
        if not self.per_iteration_seconds:
            return 0.0
        return self.total_seconds / len(self.per_iteration_seconds)


class MultigridSolver:
    """Level operators ``1..J`` plus the three solvers built on them.

    Parameters
    ----------
    hierarchy : Hierarchy
    generators : sequence of GeneratorVector
        One per level, coarsest first.
    """

    def __init__(self, hierarchy, generators):
        if len(generators) != hierarchy.J:
            raise ValueError(f"need {hierarchy.J} generators, got {len(generators)}")
        ops = []
        for k, gen in enumerate(generators, start=1):
            level = hierarchy[k]
            if gen.level != level:
                raise ValueError(f"generator {k} belongs to level {gen.level.k}")
            stiff = ToeplitzOperator.from_generator(gen)
            op = LevelOperator(level, stiff, 1.5 * gen.diagonal)
            if k == 1:
                op.coarse_factor = sl.cho_factor(generator_matrix(gen))
            else:
                op.prolongation = prolongation_matrix(hierarchy[k - 1], level)
            ops.append(op)
        self.hierarchy = hierarchy
        self.levels = ops

    @property
    def J(self):
        return len(self.levels)

    def operator(self, k):
        if not 1 <= k <= self.J:
            raise ValueError(f"no operator for level {k}")
        return self.levels[k - 1]

    def apply(self, U, k=None):
        return self.operator(k or self.J).apply(U)

    def smooth(self, op, g):
        """``R_k g``: moments divided by the smoother scale."""
        if op.level.k == 1:
            raise ValueError("level 1 is solved exactly, not smoothed")
        return np.asarray(g) / op.lambda_tilde

    def restrict_moments(self, op, r):
        """Moments on level ``k - 1`` of the functional with moments ``r`` on level ``k``."""
        if op.prolongation is None:
            raise ValueError("level 1 has no coarser level")
        return op.prolongation.T @ r

    def coarse_solve(self, g):
        return sl.cho_solve(self.levels[0].coarse_factor, g)

    def vcycle_apply(self, g, k=None):
        """``B_k g`` with one pre- and one post-smoothing step per level."""
        k = self.J if k is None else k
        op = self.operator(k)
        g = np.asarray(g, dtype=float)
        if g.shape != (op.level.num_nodes,):
            raise ValueError(f"moment vector has shape {g.shape}, level {k} needs {op.level.num_nodes}")
        if k == 1:
            return self.coarse_solve(g)
        v = self.smooth(op, g)
        r = g - op.apply(v)
        v = v + op.prolongation @ self.vcycle_apply(self.restrict_moments(op, r), k - 1)
        return v + self.smooth(op, g - op.apply(v))

    def solve_vcycle(self, f, tol=1e-6, max_iter=200, divergence_window=10):
        """Stationary iteration ``u <- u + B_J (f - A u)`` from ``u = 0``."""
        report = SolveReport("vcycle")
        u = np.zeros(self.operator(self.J).level.num_nodes)
        growth = 0
        for it in range(1, max_iter + 1):
            t0 = time.perf_counter()
            du = self.vcycle_apply(f - self.apply(u))
            u = u + du
            report.per_iteration_seconds.append(time.perf_counter() - t0)
            diff = float(np.max(np.abs(du))) if du.size else 0.0
            if report.diff_history and diff > report.diff_history[-1]:
                growth += 1
            else:
                growth = 0
            report.diff_history.append(diff)
            report.iterations = it
            report.final_diff_inf = diff
            if not np.isfinite(diff):
                report.message = "non-finite iterate"
                return u, report
            if diff <= tol:
                report.converged = True
                return u, report
            if growth >= divergence_window:
                report.message = f"difference grew for {growth} consecutive iterations"
                return u, report
        report.message = f"no convergence in {max_iter} iterations"
        return u, report

    def solve_pcg(self, f, tol=1e-6, max_iter=200):
        """Conjugate gradients preconditioned by one V-cycle."""
        return self._cg(f, tol, max_iter, self.vcycle_apply, "pcg")

    def solve_cg(self, f, tol=1e-6, max_iter=5000):
        return self._cg(f, tol, max_iter, None, "cg")

    def _cg(self, f, tol, max_iter, precond, name):
        report = SolveReport(name)
        f = np.asarray(f, dtype=float)
        u = np.zeros_like(f)
        r = f.copy()
        z = precond(r) if precond else r
        rz = float(r @ z)
        p = z.copy()
        for it in range(1, max_iter + 1):
            t0 = time.perf_counter()
            if rz == 0.0:
                du = np.zeros_like(u)
            else:
                if precond is not None and rz < 0.0:
                    report.message = "preconditioner is not positive"
                    report.per_iteration_seconds.append(time.perf_counter() - t0)
                    report.iterations = it
                    return u, report
                Ap = self.apply(p)
                step = rz / float(p @ Ap)
                du = step * p
                u = u + du
                r = r - step * Ap
                z = precond(r) if precond else r
                rz_new = float(r @ z)
                p = z + (rz_new / rz) * p
                rz = rz_new
            report.per_iteration_seconds.append(time.perf_counter() - t0)
            diff = float(np.max(np.abs(du))) if du.size else 0.0
            report.diff_history.append(diff)
            report.iterations = it
            report.final_diff_inf = diff
            if not np.isfinite(diff):
                report.message = "non-finite iterate"
                return u, report
            if diff <= tol:
                report.converged = True
                return u, report
        report.message = f"no convergence in {max_iter} iterations"
        return u, report
