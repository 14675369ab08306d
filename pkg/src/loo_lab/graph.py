"""One-inclusion graphs of deterministic binary classes.

Class generators, graph construction, degeneracy peeling and the edge
assignments built on it, the min-max equalizer over edges, the star lower
bound certificate and brute-force subgraph density.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heappop, heappush
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from scipy.special import comb, expit

from .core import (
    LN2,
    Alphabet,
    CapacityError,
    ConvergenceError,
    Dataset,
    ReferenceClass,
)

REALIZABLE_GUARD = 10**5
SOLVER_GUARD = 10**4
DENSITY_GUARD = 16


# ---------------------------------------------------------------------------
# deterministic classes


class DeterministicClass(ReferenceClass):
    """A class whose hypotheses put probability 0 or 1 on every label.

    Subclasses implement :meth:`labelings` over the sorted distinct feature
    values; points that share a feature value always share a label.
    """

    deterministic = True

    def __init__(self, m: int = 2):
        self.m = Alphabet(m).m
        self._cache: dict[tuple, frozenset] = {}

    def count(self, n_distinct: int) -> int:
        """Number of labelings on ``n_distinct`` values, for the size guard."""
        raise NotImplementedError

    def labelings(self, n_distinct: int):
        """Label tuples over ``n_distinct`` sorted distinct feature values."""
        raise NotImplementedError

    def realizable(self, features: Sequence) -> list[tuple]:
        return sorted(self._realizable_set(tuple(features)))

    def _realizable_set(self, features: tuple) -> frozenset:
        if features not in self._cache:
            values = sorted(set(features))
            if self.count(len(values)) > REALIZABLE_GUARD:
                raise CapacityError(
                    f"{self.count(len(values))} realizable sequences exceed {REALIZABLE_GUARD}"
                )
            rank = {x: i for i, x in enumerate(values)}
            where = [rank[x] for x in features]
            self._cache[features] = frozenset(
                tuple(lab[i] for i in where) for lab in self.labelings(len(values))
            )
        return self._cache[features]

    def is_realizable(self, features: Sequence, labels: Sequence[int]) -> bool:
        return tuple(labels) in self._realizable_set(tuple(features))

    def reference_value(self, data: Dataset) -> float:
        return 0.0 if self.is_realizable(data.features, data.labels) else -math.inf

    def fitted_conditional(self, data: Dataset, t: int) -> float:
        return 1.0 if self.is_realizable(data.features, data.labels) else 0.0


class ThresholdClass(DeterministicClass):
    """``y = 1`` iff ``x > theta``."""

    def count(self, n):
        return n + 1

    def labelings(self, n):
        for k in range(n + 1):
            yield (0,) * k + (1,) * (n - k)


class IntervalClass(DeterministicClass):
    """``y = 1`` iff ``a <= x <= b`` (the empty interval included)."""

    def count(self, n):
        return 1 + n * (n + 1) // 2

    def labelings(self, n):
        yield (0,) * n
        for a in range(n):
            for b in range(a + 1, n + 1):
                yield (0,) * a + (1,) * (b - a) + (0,) * (n - b)


class UniqueValuesClass(DeterministicClass):
    """Label 0 everywhere except at up to ``d`` chosen feature values.

    With ``m > 2`` each chosen value carries any nonzero symbol.
    """

    def __init__(self, d: int, m: int = 2):
        super().__init__(m)
        if d < 0:
            raise ValueError("d must be nonnegative")
        self.d = d

    def count(self, n):
        return sum(int(comb(n, i, exact=True)) * (self.m - 1) ** i for i in range(self.d + 1))

    def labelings(self, n):
        for i in range(self.d + 1):
            for where in itertools.combinations(range(n), i):
                for marks in itertools.product(range(1, self.m), repeat=i):
                    lab = [0] * n
                    for pos, s in zip(where, marks):
                        lab[pos] = s
                    yield tuple(lab)


class ExplicitClass(DeterministicClass):
    """A fixed list of label sequences; features only fix the length."""

    def __init__(self, sequences, m: int = 2):
        super().__init__(m)
        seqs = [tuple(int(c) for c in s) for s in sequences]
        if len(set(seqs)) != len(seqs):
            raise ValueError("explicit class contains duplicate sequences")
        if len({len(s) for s in seqs}) > 1:
            raise ValueError("explicit sequences must share one length")
        if any(c < 0 or c >= self.m for s in seqs for c in s):
            raise ValueError(f"explicit labels must lie in 0..{self.m - 1}")
        self.sequences = frozenset(seqs)

    @classmethod
    def from_text(cls, text: str, m: int = 2) -> "ExplicitClass":
        """One label sequence per line, e.g. ``00101``; blank lines and ``#`` skipped."""
        lines = [ln.strip() for ln in text.splitlines()]
        return cls([ln for ln in lines if ln and not ln.startswith("#")], m)

    def _realizable_set(self, features):
        if self.sequences and len(features) != len(next(iter(self.sequences))):
            raise ValueError("feature length does not match the explicit sequences")
        if len(self.sequences) > REALIZABLE_GUARD:
            raise CapacityError(f"{len(self.sequences)} sequences exceed {REALIZABLE_GUARD}")
        return self.sequences


def make_class(kind: str, d: int = 1, m: int = 2) -> DeterministicClass:
    kinds = {
        "threshold": lambda: ThresholdClass(m),
        "interval": lambda: IntervalClass(m),
        "unique-values": lambda: UniqueValuesClass(d, m),
    }
    if kind not in kinds:
        raise ValueError(f"unknown class kind {kind!r}; choose from {sorted(kinds)}")
    return kinds[kind]()


# ---------------------------------------------------------------------------
# graph


@dataclass
class InclusionGraph:
    """Realizable binary sequences joined when they differ at one position.

    Each edge is ``(u, v, t)`` with ``nodes[u][t] == 0`` and ``nodes[v][t] == 1``.
    Edge probabilities elsewhere in this module are the mass on ``u``'s label.
    """

    N: int
    nodes: list
    edges: list
    index: dict = field(repr=False)
    incident: list = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def degree(self, i: int) -> int:
        return len(self.incident[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(inc) for inc in self.incident], dtype=int)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.nodes else 0

    def node_id(self, node) -> int:
        return node if isinstance(node, (int, np.integer)) else self.index[tuple(node)]

    def components(self) -> list[list[int]]:
        seen, out = set(), []
        for start in range(self.n_nodes):
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                i = stack.pop()
                comp.append(i)
                for e, _ in self.incident[i]:
                    u, v, _t = self.edges[e]
                    j = v if u == i else u
                    if j not in seen:
                        seen.add(j)
                        stack.append(j)
            out.append(sorted(comp))
        return out

    def predictor(self, p: np.ndarray):
        """Leave-one-out predictor reading probabilities off the edges.

        A position where only one completion is realizable is forced and gets
        probability 1.
        """
        edge_at = {(u, t): e for e, (u, _v, t) in enumerate(self.edges)}

        def predict(t, features, others):
            zero = tuple(others[:t]) + (0,) + tuple(others[t:])
            one = tuple(others[:t]) + (1,) + tuple(others[t:])
            i0, i1 = self.index.get(zero), self.index.get(one)
            if i0 is not None and i1 is not None:
                q0 = float(p[edge_at[(i0, t)]])
                return np.array([q0, 1.0 - q0])
            if i0 is not None:
                return np.array([1.0, 0.0])
            if i1 is not None:
                return np.array([0.0, 1.0])
            return np.array([0.5, 0.5])

        return predict

    def to_dot(self, p: np.ndarray | None = None) -> str:
        lines = ["graph one_inclusion {"]
        for i, node in enumerate(self.nodes):
            lines.append(f'  n{i} [label="{"".join(map(str, node))}"];')
        for e, (u, v, t) in enumerate(self.edges):
            attrs = f'label="t={t}'
            if p is not None:
                attrs += f" p={p[e]:.6g}"
            lines.append(f'  n{u} -- n{v} [{attrs}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self, p: np.ndarray | None = None) -> str:
        doc = {
            "N": self.N,
            "nodes": ["".join(map(str, node)) for node in self.nodes],
            "edges": [
                {"u": u, "v": v, "position": t} | ({} if p is None else {"p": float(p[e])})
                for e, (u, v, t) in enumerate(self.edges)
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "InclusionGraph":
        doc = json.loads(text)
        return graph_from_sequences([tuple(int(c) for c in s) for s in doc["nodes"]])


def graph_from_sequences(sequences) -> InclusionGraph:
    nodes = sorted(set(tuple(s) for s in sequences))
    if len(nodes) > REALIZABLE_GUARD:
        raise CapacityError(f"{len(nodes)} nodes exceed {REALIZABLE_GUARD}")
    N = len(nodes[0]) if nodes else 0
    index = {s: i for i, s in enumerate(nodes)}
    edges, incident = [], [[] for _ in nodes]
    for i, s in enumerate(nodes):
        for t in range(N):
            if s[t] != 0:
                continue
            j = index.get(s[:t] + (1,) + s[t + 1:])
            if j is not None:
                incident[i].append((len(edges), 0))
                incident[j].append((len(edges), 1))
                edges.append((i, j, t))
    return InclusionGraph(N, nodes, edges, index, incident)


def build_graph(cls: DeterministicClass, features: Sequence) -> InclusionGraph:
    """One-inclusion graph of ``cls`` projected on ``features``."""
    if cls.m != 2:
        raise ValueError("one-inclusion graphs need a binary class; use the hypergraph module")
    g = graph_from_sequences(cls.realizable(features))
    g.N = len(features)
    return g


# ---------------------------------------------------------------------------
# degeneracy and assignments


def degeneracy(g: InclusionGraph) -> int:
    """Largest minimum degree met while repeatedly deleting a minimum-degree node."""
    deg = g.degrees().tolist()
    heap = [(d, i) for i, d in enumerate(deg)]
    heap.sort()
    removed = [False] * g.n_nodes
    best = 0
    while heap:
        d, i = heappop(heap)
        if removed[i] or d != deg[i]:
            continue
        removed[i] = True
        best = max(best, d)
        for e, _ in g.incident[i]:
            u, v, _t = g.edges[e]
            j = v if u == i else u
            if not removed[j]:
                deg[j] -= 1
                heappush(heap, (deg[j], j))
    return best


def peel_layers(g: InclusionGraph, k: float) -> list[list[int]]:
    """Rounds of simultaneous removal of every node with current degree ``<= k``."""
    alive = set(range(g.n_nodes))
    deg = g.degrees().tolist()
    layers = []
    while alive:
        outer = sorted(i for i in alive if deg[i] <= k)
        if not outer:
            raise ValueError(f"k={k} is below the degeneracy: a round has no outer layer")
        layers.append(outer)
        alive.difference_update(outer)
        for i in outer:
            for e, _ in g.incident[i]:
                u, v, _t = g.edges[e]
                j = v if u == i else u
                if j in alive:
                    deg[j] -= 1
    return layers


def peel_assign(g: InclusionGraph, k: int, N: int | None = None) -> np.ndarray:
    """Layered assignment: 1/2 inside an outer layer, 1/N from outer to inner.

    Each round takes every remaining node of degree ``<= k``; an edge between
    two such nodes gets 1/2, an edge to a deeper node gives the outer node
    ``1/N`` and the deeper node ``1 - 1/N``.
    """
    N = g.N if N is None else N
    p = np.full(len(g.edges), np.nan)
    layer_of = {}
    for r, layer in enumerate(peel_layers(g, k)):
        for i in layer:
            layer_of[i] = r
    for e, (u, v, _t) in enumerate(g.edges):
        if layer_of[u] == layer_of[v]:
            p[e] = 0.5
        elif layer_of[u] < layer_of[v]:
            p[e] = 1.0 / N
        else:
            p[e] = 1.0 - 1.0 / N
    return p


def half_assign(g: InclusionGraph) -> np.ndarray:
    return np.full(len(g.edges), 0.5)


def node_probabilities(g: InclusionGraph, p: np.ndarray, node) -> list[float]:
    i = g.node_id(node)
    return [p[e] if side == 0 else 1.0 - p[e] for e, side in g.incident[i]]


def node_regret(g: InclusionGraph, p: np.ndarray, node, N: int | None = None) -> float:
    """``(1/N) sum`` over incident edges of ``-log`` of this node's probability.

    Forced positions (no incident edge) contribute nothing.
    """
    N = g.N if N is None else N
    total = 0.0
    for prob in node_probabilities(g, p, node):
        if prob <= 0.0:
            return math.inf
        total -= math.log(prob)
    return total / N


def node_regrets(g: InclusionGraph, p: np.ndarray, N: int | None = None) -> np.ndarray:
    N = g.N if N is None else N
    out = np.zeros(g.n_nodes)
    if not g.edges:
        return out
    us = np.array([u for u, _, _ in g.edges])
    vs = np.array([v for _, v, _ in g.edges])
    with np.errstate(divide="ignore"):
        np.add.at(out, us, -np.log(p))
        np.add.at(out, vs, -np.log1p(-p))
    return out / N


def max_node_regret(g: InclusionGraph, p: np.ndarray, N: int | None = None) -> float:
    return float(node_regrets(g, p, N).max()) if g.nodes else 0.0


def peel_bound(k: int, N: int) -> float:
    """``(k log N + k log 2 + 2) / N``: the three edge groups of a peeled node."""
    return (k * math.log(N) + k * LN2 + 2.0) / N


def half_bound(max_degree: int, N: int) -> float:
    return max_degree * LN2 / N


# ---------------------------------------------------------------------------
# equalizer


def equalize_edge(g: InclusionGraph, p: np.ndarray, e: int, N: int | None = None) -> np.ndarray:
    """Reset edge ``e`` so its two endpoints have equal regret; other edges unchanged.

    With both endpoints weighted by ``1/N`` the balancing probability is a
    logistic function of the difference of the remaining regrets.
    """
    N = g.N if N is None else N
    out = p.copy()
    _equalize_edge(g, out, e, N)
    return out


def _equalize_edge(g, p, e, N):
    u, v, _t = g.edges[e]
    c_u = node_regret(g, p, u, N) + math.log(p[e]) / N
    c_v = node_regret(g, p, v, N) + math.log1p(-p[e]) / N
    if math.isinf(c_u) or math.isinf(c_v):
        raise ConvergenceError("cannot equalize next to an infinite regret")
    p[e] = expit(N * (c_u - c_v))


@dataclass
class EqualizerResult:
    p: np.ndarray
    regret: float
    spread: float
    sweeps: int


def _component_edges(g, comp):
    members = set(comp)
    return [e for e, (u, _v, _t) in enumerate(g.edges) if u in members]


def _sweep_component(g, p, comp, edges, N, tol, max_sweeps):
    for sweep in range(max_sweeps + 1):
        r = [node_regret(g, p, i, N) for i in comp]
        if max(r) - min(r) <= tol:
            return sweep
        for e in edges:
            _equalize_edge(g, p, e, N)
    raise ConvergenceError(f"edge sweeps did not reach spread {tol}")


def _weights_component(g, p, comp, edges, N, tol, max_iter=200):
    """Newton solve for node log-weights ``s`` with edge mass ``w_u / (w_u + w_v)``.

    Unknowns are ``s`` (with ``s[comp[0]]`` pinned to 0) and the common regret
    ``r``; equations are ``regret_v(s) = r`` for every node of the component.
    """
    n = len(comp)
    local = {i: a for a, i in enumerate(comp)}
    eu = np.array([local[g.edges[e][0]] for e in edges])
    ev = np.array([local[g.edges[e][1]] for e in edges])

    def residual(s, r):
        d = s[ev] - s[eu]
        out = np.zeros(n)
        np.add.at(out, eu, np.logaddexp(0.0, d))
        np.add.at(out, ev, np.logaddexp(0.0, -d))
        return out / N - r

    def jacobian(s):
        d = s[ev] - s[eu]
        a, b = expit(d), expit(-d)
        # d regret_u / d s_v = a/N, d regret_v / d s_u = b/N
        rows = np.concatenate([eu, ev, eu, ev])
        cols = np.concatenate([ev, eu, eu, ev])
        vals = np.concatenate([a, b, -a, -b]) / N
        J = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
        J = sparse.hstack([J[:, 1:], sparse.csc_matrix(-np.ones((n, 1)))]).tocsc()
        return J

    s = np.zeros(n)
    f0 = residual(s, 0.0)
    r = float(f0.mean())
    F = f0 - r
    for _ in range(max_iter):
        if np.max(np.abs(F)) <= tol / 4:
            break
        step = spsolve(jacobian(s), -F)
        ds = np.concatenate([[0.0], step[:-1]])
        dr = step[-1]
        norm, lam = np.linalg.norm(F), 1.0
        while lam > 1e-10:
            s_new, r_new = s + lam * ds, r + lam * dr
            F_new = residual(s_new, r_new)
            if np.linalg.norm(F_new) < (1 - 1e-4 * lam) * norm:
                break
            lam /= 2
        else:
            raise ConvergenceError("Newton line search stalled")
        s, r, F = s_new, r_new, F_new
    else:
        raise ConvergenceError("Newton solve for node weights did not converge")
    for e, a, b in zip(edges, eu, ev):
        p[e] = expit(s[a] - s[b])


def solve_equalizer_graph(
    g: InclusionGraph,
    tol: float = 1e-10,
    method: str = "auto",
    N: int | None = None,
    max_sweeps: int = 10**6,
) -> EqualizerResult:
    """Min-max edge assignment, equalizing regret within each connected component.

    ``method="sweep"`` repeats single-edge equalization from the all-1/2 start.
    On a tree component that reaches the unique equalizer, which is min-max.
    A component with a cycle has a whole family of equalizers; there the
    min-max one has edge masses ``w_u / (w_u + w_v)`` for positive node
    weights, found by ``method="weights"``.  ``"auto"`` picks per component.
    """
    if g.n_nodes > SOLVER_GUARD:
        raise CapacityError(f"{g.n_nodes} nodes exceed {SOLVER_GUARD}")
    if method not in ("auto", "sweep", "weights"):
        raise ValueError(f"unknown method {method!r}")
    N = g.N if N is None else N
    p = half_assign(g)
    sweeps = 0
    for comp in g.components():
        edges = _component_edges(g, comp)
        if not edges:
            continue
        tree = len(edges) == len(comp) - 1
        if method == "sweep" or (method == "auto" and tree):
            sweeps = max(sweeps, _sweep_component(g, p, comp, edges, N, tol, max_sweeps))
        else:
            _weights_component(g, p, comp, edges, N, tol)
    r = node_regrets(g, p, N)
    spreads = [r[c].max() - r[c].min() for c in g.components()]
    return EqualizerResult(p, float(r.max()) if len(r) else 0.0, float(max(spreads, default=0.0)), sweeps)


# ---------------------------------------------------------------------------
# lower bound and density


@dataclass
class StarCertificate:
    """Outcome of the chain argument for ``d``-unique-values at level ``a``."""

    certified: bool
    threshold: float
    implied_regret: float
    q_bounds: list

    def __bool__(self):
        return self.certified


def certify_star_lower_bound(d: int, N: int, a: float, margin: float = 1e-12) -> StarCertificate:
    """Try to refute ``R* <= a log(N) / N`` for the ``d``-unique-values class.

    ``q_i`` is the probability of a 1 after seeing ``i`` ones.  Assuming the
    bound, the all-zero sequence forces ``q_0 <= 1 - exp(-R)`` and the
    sequences with ``i`` ones force
    ``1 - q_i >= exp(-(R + (i/N) log q_{i-1}) N / (N - i))``.
    A certificate is issued when the sequence with ``d`` ones then has regret
    ``-(d/N) log q_{d-1}`` above the assumed bound, or when some ``q_i`` is
    forced to be nonpositive.  ``margin`` guards against floating ties.
    """
    if not 1 <= d < N:
        raise ValueError("need 1 <= d < N")
    a = float(a)
    if a <= 0:
        raise ValueError("a must be positive")
    R = a * math.log(N) / N
    bounds = [-math.expm1(-R)]
    for i in range(1, d):
        exponent = -(R + (i / N) * math.log(bounds[-1])) * N / (N - i)
        qi = -math.expm1(exponent)
        if qi <= 0.0:
            return StarCertificate(True, R, math.inf, bounds + [qi])
        bounds.append(qi)
    implied = -(d / N) * math.log(bounds[-1])
    return StarCertificate(bool(implied > R * (1 + margin)), R, implied, bounds)


def densest_subgraph_bruteforce(g: InclusionGraph) -> Fraction:
    """``max |E(S)| / |S|`` over nonempty node subsets, exactly."""
    n = g.n_nodes
    if n > DENSITY_GUARD:
        raise CapacityError(f"brute force density needs at most {DENSITY_GUARD} nodes")
    if n == 0:
        return Fraction(0)
    masks = np.arange(1, 1 << n, dtype=np.int64)
    size = np.zeros(len(masks), dtype=np.int64)
    for i in range(n):
        size += (masks >> i) & 1
    inner = np.zeros(len(masks), dtype=np.int64)
    for u, v, _t in g.edges:
        inner += ((masks >> u) & 1) & ((masks >> v) & 1)
    scale = math.lcm(*range(1, n + 1))
    best = int(np.argmax(inner * (scale // size)))
    return Fraction(int(inner[best]), int(size[best]))
