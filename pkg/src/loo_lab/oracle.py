"""Brute-force min-max oracle: projected subgradient descent over products of simplices.

Deliberately independent of the equalizer solvers: it knows nothing about
equalization, only the list of regret functions
``r_f(x) = c_f + sum a_{f,(ctx,sym)} (-log x[ctx, sym])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .core import CapacityError, ConvergenceError
from .graph import InclusionGraph
from .multinomial import compositions, n_compositions, sub, unit

VARIABLE_GUARD = 10**3
FLOOR = 1e-12
WINDOW = 1000


@dataclass
class MinMaxProblem:
    """``n_ctx`` simplices of size ``m`` and one regret function per row of ``coef``."""

    n_ctx: int
    m: int
    constants: np.ndarray
    coef: sparse.csr_matrix      # (n_functions, n_ctx * m), nonnegative
    labels: list

    def __post_init__(self):
        self.constants = np.asarray(self.constants, dtype=float)
        if not np.all(np.isfinite(self.constants)):
            raise ValueError("regret constants must be finite")
        if self.coef.shape != (len(self.constants), self.n_ctx * self.m):
            raise ValueError("coefficient matrix does not match the problem size")
        if self.coef.nnz and self.coef.data.min() < 0:
            raise ValueError("coefficients must be nonnegative")
        used = np.asarray(abs(self.coef).sum(axis=0)).ravel().reshape(self.n_ctx, self.m)
        if np.any(used.sum(axis=1) == 0):
            raise ValueError("every context must appear in some regret function")

    @property
    def n_functions(self) -> int:
        return len(self.constants)

    def values(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            logs = -np.log(np.asarray(x, dtype=float)).ravel()
        logs[~np.isfinite(logs)] = np.inf
        dense = self.coef.toarray()
        out = self.constants.copy()
        for f in range(self.n_functions):
            nz = dense[f] > 0
            out[f] += float(dense[f, nz] @ logs[nz])
        return out


def _problem(n_ctx, m, rows, labels) -> MinMaxProblem:
    constants, ri, ci, vals = [], [], [], []
    for f, (const, terms) in enumerate(rows):
        constants.append(const)
        for ctx, sym, a in terms:
            ri.append(f)
            ci.append(ctx * m + sym)
            vals.append(a)
    coef = sparse.csr_matrix((vals, (ri, ci)), shape=(len(rows), n_ctx * m))
    return MinMaxProblem(n_ctx, m, np.array(constants), coef, labels)


def compile_multinomial(m: int, N: int) -> MinMaxProblem:
    """Contexts are training compositions, functions the full compositions."""
    n_vars = n_compositions(m, N - 1) * m
    if n_vars > VARIABLE_GUARD:
        raise CapacityError(f"{n_vars} variables exceed {VARIABLE_GUARD}")
    contexts = list(compositions(m, N - 1))
    index = {e: i for i, e in enumerate(contexts)}
    rows, labels = [], []
    for v in compositions(m, N):
        const = sum((c / N) * math.log(c / N) for c in v if c)
        terms = [(index[sub(v, unit(m, j))], j, c / N) for j, c in enumerate(v) if c]
        rows.append((const, terms))
        labels.append(v)
    return _problem(len(contexts), m, rows, labels)


def compile_graph(g: InclusionGraph, N: int | None = None) -> MinMaxProblem:
    """One binary simplex per edge (mass on its 0-side node), one function per node."""
    N = g.N if N is None else N
    if 2 * len(g.edges) > VARIABLE_GUARD:
        raise CapacityError(f"{2 * len(g.edges)} variables exceed {VARIABLE_GUARD}")
    rows = [(0.0, [(e, side, 1.0 / N) for e, side in g.incident[i]]) for i in range(g.n_nodes)]
    return _problem(len(g.edges), 2, rows, list(g.nodes))


def project_rows(y: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex (sorting method)."""
    n, m = y.shape
    u = -np.sort(-y, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ks = np.arange(1, m + 1)
    cond = u - css / ks > 0
    rho = m - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho] / (rho + 1)
    return np.maximum(y - theta[:, None], 0.0)


@dataclass
class MinMaxResult:
    assignment: np.ndarray       # (n_ctx, m), rows sum to one
    value: float
    spread: float                # max - min regret at the returned point
    iterations: int
    argmax: int                  # lexicographically first maximizing function


def _project_binary(y: np.ndarray) -> np.ndarray:
    a = np.clip(0.5 * (y[:, 0] - y[:, 1] + 1.0), 0.0, 1.0)
    return np.stack([a, 1.0 - a], axis=1)


def solve_minmax(
    p: MinMaxProblem,
    tol: float = 1e-10,
    step: float = 0.1,
    max_iter: int = 10**6,
    patience: int = 6,
    epoch_windows: int = 10,
) -> MinMaxResult:
    """Minimize the largest regret by projected subgradient descent.

    Starts at uniform rows.  The subgradient is that of the first maximizing
    function, and each move has length ``c / sqrt(k)`` along it.  A run
    ("epoch") ends once the best value improved by less than ``tol`` over the
    last 1000 iterations, or after ``epoch_windows`` such windows; the next
    epoch restarts from the best point with ``c`` halved.  The solver stops
    after ``patience`` consecutive epochs without a ``tol`` improvement.
    """
    if p.n_ctx * p.m > VARIABLE_GUARD:
        raise CapacityError(f"{p.n_ctx * p.m} variables exceed {VARIABLE_GUARD}")
    A = p.coef.toarray()
    project = _project_binary if p.m == 2 else project_rows

    def objective(x):
        return p.constants - A @ np.log(x).ravel()

    best_x = np.full((p.n_ctx, p.m), 1.0 / p.m)
    best = float(objective(best_x).max())
    c, total, stalled = step, 0, 0
    while stalled < patience:
        x, start, checkpoint, k = best_x.copy(), best, best, 0
        while True:
            k += 1
            total += 1
            if total > max_iter:
                raise ConvergenceError(f"no convergence within {max_iter} iterations")
            vals = objective(x)
            f = int(np.argmax(vals))
            if vals[f] < best:
                best, best_x = float(vals[f]), x.copy()
            grad = -A[f].reshape(x.shape) / x
            norm = math.sqrt(float(np.sum(grad * grad)))
            x = np.maximum(project(x - (c / (math.sqrt(k) * norm)) * grad), FLOOR)
            if k % WINDOW == 0:
                if checkpoint - best < tol or k >= epoch_windows * WINDOW:
                    break
                checkpoint = best
        stalled = stalled + 1 if start - best < tol else 0
        c /= 2.0
    best_x = best_x / best_x.sum(axis=1, keepdims=True)
    vals = objective(best_x)
    return MinMaxResult(best_x, float(vals.max()), float(vals.max() - vals.min()), total, int(np.argmax(vals)))
