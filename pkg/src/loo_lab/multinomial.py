"""Featureless m-ary case: composition regret, add-constant learners and the equalizer."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import comb

from .core import CapacityError, ConvergenceError, Alphabet

SOLVER_GUARD = 10**5
TABLE_GUARD = 2 * 10**6
MAX_SWEEPS = 10**6
BISECTION_ITERS = 200
BRACKET_EPS = 1e-15


def compositions(m: int, total: int) -> Iterator[tuple[int, ...]]:
    """All length-``m`` nonnegative integer vectors summing to ``total``, in lex order."""
    if m == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(m - 1, total - first):
            yield (first,) + rest


def n_compositions(m: int, total: int) -> int:
    return int(comb(total + m - 1, m - 1, exact=True))


def sorted_compositions(m: int, total: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Non-increasing compositions: one representative per symbol permutation."""
    largest = total if largest is None else largest
    if m == 1:
        if total <= largest:
            yield (total,)
        return
    for first in range(min(total, largest), -(-total // m) - 1, -1):
        for rest in sorted_compositions(m - 1, total - first, first):
            yield (first,) + rest


def _check_table(m: int, total: int):
    if n_compositions(m, total) > TABLE_GUARD:
        raise CapacityError(f"{n_compositions(m, total)} compositions exceed {TABLE_GUARD}")


def unit(m: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(m))


def add(v: Sequence[int], w: Sequence[int]) -> tuple[int, ...]:
    return tuple(a + b for a, b in zip(v, w))


def sub(v: Sequence[int], w: Sequence[int]) -> tuple[int, ...]:
    return tuple(a - b for a, b in zip(v, w))


@dataclass
class MultinomialAssignment:
    """A distribution over symbols for every training composition (sum ``N-1``)."""

    m: int
    N: int
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        Alphabet(self.m)
        if self.N < 2:
            raise ValueError("N must be at least 2")
        self.table = {tuple(e): np.asarray(q, dtype=float) for e, q in self.table.items()}
        expected = set(compositions(self.m, self.N - 1))
        if set(self.table) != expected:
            raise ValueError("assignment must cover exactly the training compositions")
        for e, q in self.table.items():
            if q.shape != (self.m,) or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
                raise ValueError(f"invalid distribution at {e}: {q}")

    def __getitem__(self, e) -> np.ndarray:
        return self.table[tuple(e)]

    def copy(self) -> "MultinomialAssignment":
        return MultinomialAssignment(self.m, self.N, {e: q.copy() for e, q in self.table.items()})

    def predictor(self):
        """Adapter to the generic leave-one-out predictor interface."""
        def predict(t, features, others):
            e = tuple(np.bincount(np.asarray(others, dtype=int), minlength=self.m))
            return self.table[e]
        return predict

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"e{j}" for j in range(self.m)] + [f"q{j}" for j in range(self.m)])
        for e in compositions(self.m, self.N - 1):
            writer.writerow(list(e) + [f"{x:.17g}" for x in self.table[e]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MultinomialAssignment":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        m = len(header) // 2
        table = {}
        for row in body:
            e = tuple(int(x) for x in row[:m])
            table[e] = np.array([float(x) for x in row[m:]])
        N = sum(next(iter(table))) + 1
        return cls(m, N, table)


def regret_of_composition(v: Sequence[int], q: MultinomialAssignment) -> float:
    """Leave-one-out regret of the sequences whose counts are ``v``.

    ``sum_j (v_j/N) log((v_j/N) / q(j | v - e_j))`` with empty symbols
    contributing nothing and a zero probability on a present symbol giving inf.
    """
    N = sum(v)
    if N != q.N or len(v) != q.m:
        raise ValueError(f"composition {v} does not match assignment (m={q.m}, N={q.N})")
    total = 0.0
    for j, c in enumerate(v):
        if c == 0:
            continue
        p = q[sub(v, unit(q.m, j))][j]
        if p <= 0.0:
            return math.inf
        total += (c / N) * math.log((c / N) / p)
    return total


def regret_table(q: MultinomialAssignment) -> dict[tuple, float]:
    _check_table(q.m, q.N)
    return {v: regret_of_composition(v, q) for v in compositions(q.m, q.N)}


def add_constant_learner(m: int, N: int, beta: float) -> MultinomialAssignment:
    """``q(j|e) = (e_j + beta) / (N - 1 + m beta)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    _check_table(m, N - 1)
    table = {
        e: (np.asarray(e, dtype=float) + beta) / (N - 1 + m * beta)
        for e in compositions(m, N - 1)
    }
    return MultinomialAssignment(m, N, table)


def shifted_empirical_learner(m: int, N: int) -> MultinomialAssignment:
    """Empirical frequencies pulled toward uniform by ``(1 - m theta_j)/(N-1)``."""
    if N - 1 <= m:
        raise ValueError(f"shifted empirical learner needs N - 1 > m (got N={N}, m={m})")
    table = {}
    for e in compositions(m, N - 1):
        theta = np.asarray(e, dtype=float) / (N - 1)
        table[e] = theta + (1.0 - m * theta) / (N - 1)
    return MultinomialAssignment(m, N, table)


def add_one_regret(m: int, N: int) -> float:
    """Regret of the add-one learner, which is the same for every composition.

    Each present symbol contributes ``(v_j/N) log((N-1+m)/N)``, so the regret
    is ``log(1 + (m-1)/N)`` regardless of ``v``.
    """
    return math.log1p((m - 1) / N)


def add_constant_regrets(m: int, N: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Regret of the add-``beta`` learner on every sorted composition, without a table.

    The learner treats symbols alike, so one composition per permutation
    class suffices; returns ``(compositions, regrets)``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    V = np.array(list(sorted_compositions(m, N)), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (V / N) * (np.log(V / N) - np.log((V - 1 + beta) / (N - 1 + m * beta)))
    return V.astype(int), np.where(V > 0, terms, 0.0).sum(axis=1)


@dataclass
class AppearanceGraph:
    """Sequence compositions joined when they differ by moving one count."""

    m: int
    N: int
    nodes: list
    # (index of v, index of v', k, l) with v - v' = e_k - e_l, k < l
    edges: list

    def is_connected(self) -> bool:
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        n = len(self.nodes)
        if not self.edges:
            return n <= 1
        rows = [a for a, _, _, _ in self.edges]
        cols = [b for _, b, _, _ in self.edges]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(adj, directed=False)[0] == 1


def appearance_graph(m: int, N: int) -> AppearanceGraph:
    nodes = list(compositions(m, N))
    index = {v: i for i, v in enumerate(nodes)}
    edges = []
    for e in compositions(m, N - 1):
        for k in range(m):
            for l in range(k + 1, m):
                edges.append((index[add(e, unit(m, k))], index[add(e, unit(m, l))], k, l))
    return AppearanceGraph(m, N, nodes, edges)


def _bisect_equal(c_v: float, a_v: float, c_w: float, a_w: float, beta: float) -> float:
    """Root of ``c_v - a_v log(x) = c_w - a_w log(beta - x)`` on ``(0, beta)``.

    The left side falls and the right side rises in ``x``.
    """
    def gap(x):
        return (c_v - a_v * math.log(x)) - (c_w - a_w * math.log(beta - x))

    lo, hi = BRACKET_EPS, beta - BRACKET_EPS
    if not (lo < hi and gap(lo) > 0 > gap(hi)):
        raise ConvergenceError("no equalizing root inside the bracket")
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * beta:
            break
    return 0.5 * (lo + hi)


def _term(c: int, N: int, p: float) -> float:
    if c == 0:
        return 0.0
    if p <= 0.0:
        return math.inf
    return (c / N) * math.log((c / N) / p)


def _equalize_at(q: MultinomialAssignment, v, w, k: int, l: int) -> bool:
    """Move mass between ``k`` and ``l`` at the shared context; in place.

    Returns ``False`` when the two regrets were already equal.
    """
    N, m = q.N, q.m
    e = sub(v, unit(m, k))
    if e != sub(w, unit(m, l)):
        raise ValueError(f"{v} and {w} are not ({k},{l})-connected")
    r_v, r_w = regret_of_composition(v, q), regret_of_composition(w, q)
    if r_v == r_w:
        return False
    dist = q[e]
    beta = dist[k] + dist[l]
    # regret of v without its k-term, regret of w without its l-term
    c_v = r_v - _term(v[k], N, dist[k]) + (v[k] / N) * math.log(v[k] / N)
    c_w = r_w - _term(w[l], N, dist[l]) + (w[l] / N) * math.log(w[l] / N)
    alpha = _bisect_equal(c_v, v[k] / N, c_w, w[l] / N, beta)
    dist[k], dist[l] = alpha, beta - alpha
    return True


def equalize_pair(q: MultinomialAssignment, v, w, k: int, l: int) -> MultinomialAssignment:
    """Equalize the regrets of two ``(k,l)``-connected compositions.

    ``v - w`` must equal ``e_k - e_l``.  Only ``q(k|e)`` and ``q(l|e)`` at the
    shared training composition ``e = v - e_k`` change; their sum is kept.
    """
    out = q.copy()
    _equalize_at(out, tuple(v), tuple(w), k, l)
    return out


def _maxplus_range(m: int, N: int, f: np.ndarray) -> tuple[float, float]:
    """Max and min of ``sum_j f[v_j]`` over compositions of ``N`` into ``m`` parts."""
    hi = np.full(N + 1, -np.inf)
    lo = np.full(N + 1, np.inf)
    hi[:] = f
    lo[:] = f
    s = np.arange(N + 1)
    c = s[:, None] - s[None, :]          # c[s, r] = part given to the next symbol
    ok = c >= 0
    fc = np.where(ok, f[np.clip(c, 0, N)], 0.0)
    for _ in range(m - 1):
        hi = np.where(ok, fc + hi[None, :], -np.inf).max(axis=1)
        lo = np.where(ok, fc + lo[None, :], np.inf).min(axis=1)
    return float(hi[N]), float(lo[N])


def separable_regret_range(m: int, N: int, conditional) -> tuple[float, float]:
    """Exact ``(max, min)`` regret over all compositions, without a table.

    For learners whose ``q(j | v - e_j)`` depends only on ``v_j`` (given as
    ``conditional(c)`` for ``c = 1..N``) the regret is a sum of per-symbol
    terms, so the extremes come from a max-plus recursion in ``O(m N^2)``.
    """
    f = np.zeros(N + 1)
    for c in range(1, N + 1):
        p = conditional(c)
        f[c] = math.inf if p <= 0 else (c / N) * math.log((c / N) / p)
    return _maxplus_range(m, N, f)


def add_constant_regret_range(m: int, N: int, beta: float) -> tuple[float, float]:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return separable_regret_range(m, N, lambda c: (c - 1 + beta) / (N - 1 + m * beta))


def shifted_regret_range(m: int, N: int) -> tuple[float, float]:
    if N - 1 <= m:
        raise ValueError(f"shifted empirical learner needs N - 1 > m (got N={N}, m={m})")

    def conditional(c):
        theta = (c - 1) / (N - 1)
        return theta + (1.0 - m * theta) / (N - 1)

    return separable_regret_range(m, N, conditional)


def regret_spread(q: MultinomialAssignment) -> tuple[float, float]:
    values = list(regret_table(q).values())
    return max(values), min(values)


def solve_equalizer(
    m: int,
    N: int,
    tol: float = 1e-10,
    init: MultinomialAssignment | None = None,
    max_sweeps: int = MAX_SWEEPS,
) -> tuple[MultinomialAssignment, float]:
    """Min-max assignment by repeated pairwise equalization sweeps.

    Starts from add-one (or ``init``) and sweeps every appearance-graph edge in
    lexicographic order until the spread of regrets is at most ``tol``.
    Returns the assignment and its maximal regret.

    For ``m > 2`` the equalizers form a family and the sweep lands on the one
    nearest its start; add-one is already the min-max one.  A custom ``init``
    yields an equalizer that need not be min-max.
    """
    if n_compositions(m, N) > SOLVER_GUARD:
        raise CapacityError(f"{n_compositions(m, N)} compositions exceed {SOLVER_GUARD}")
    q = add_constant_learner(m, N, 1.0) if init is None else init.copy()
    graph = appearance_graph(m, N)
    nodes = graph.nodes
    for _ in range(max_sweeps + 1):
        hi, lo = regret_spread(q)
        if hi - lo <= tol:
            return q, hi
        for a, b, k, l in graph.edges:
            _equalize_at(q, nodes[a], nodes[b], k, l)
    raise ConvergenceError(f"equalizer did not reach spread {tol} in {max_sweeps} sweeps")


def epsilon_sequence(eps0: float, m: int, n_terms: int) -> list[float]:
    """First ``n_terms`` values of the contradiction recursion, starting at ``eps0``."""
    eps = [eps0]
    for k in range(1, n_terms):
        prev = eps[-1]
        eps.append(eps0 + k * (prev - eps0 + prev * prev / 2) / (m + k - 1))
    return eps


def epsilon_recursion(eps0: float, m: int, max_iter: int = 10**6) -> int:
    """Smallest ``k`` with ``eps_k >= 1`` in the lower-bound recursion.

    ``eps_k = eps0 + k (eps_{k-1} - eps0 + eps_{k-1}^2 / 2) / (m + k - 1)``
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    Alphabet(m)
    eps = eps0
    for k in range(max_iter + 1):
        if eps >= 1.0:
            return k
        nxt = k + 1
        eps = eps0 + nxt * (eps - eps0 + eps * eps / 2) / (m + nxt - 1)
    raise ConvergenceError(f"eps sequence stayed below 1 for {max_iter} steps")
