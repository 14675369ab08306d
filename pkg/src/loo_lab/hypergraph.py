"""One-inclusion hypergraphs of deterministic multiclass classes and their layered assignment."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heappop, heappush
from typing import NamedTuple, Sequence

import numpy as np

from .core import CapacityError
from .graph import DENSITY_GUARD, REALIZABLE_GUARD, DeterministicClass


@dataclass
class InclusionHypergraph:
    """Realizable sequences grouped by (position, labels elsewhere).

    A hyperedge is every realizable completion of one off-position labeling,
    kept when there are at least two.  Members are listed by increasing symbol.
    """

    N: int
    m: int
    nodes: list
    # (position, tuple of member node indices)
    hyperedges: list
    incident: list = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def degrees(self) -> np.ndarray:
        return np.array([len(inc) for inc in self.incident], dtype=int)

    def to_json(self, probs: list | None = None) -> str:
        doc = {
            "N": self.N,
            "m": self.m,
            "nodes": ["".join(map(str, s)) for s in self.nodes],
            "hyperedges": [
                {"position": t, "members": list(mem)}
                | ({} if probs is None else {"probabilities": [float(x) for x in probs[h]]})
                for h, (t, mem) in enumerate(self.hyperedges)
            ],
        }
        return json.dumps(doc, indent=2)


def hypergraph_from_sequences(sequences, m: int) -> InclusionHypergraph:
    nodes = sorted(set(tuple(s) for s in sequences))
    if len(nodes) > REALIZABLE_GUARD:
        raise CapacityError(f"{len(nodes)} nodes exceed {REALIZABLE_GUARD}")
    N = len(nodes[0]) if nodes else 0
    groups: dict[tuple, list[int]] = {}
    for i, s in enumerate(nodes):
        for t in range(N):
            groups.setdefault((t, s[:t] + s[t + 1:]), []).append(i)
    hyperedges, incident = [], [[] for _ in nodes]
    for (t, _rest), members in sorted(groups.items(), key=lambda kv: (kv[1][0], kv[0][0])):
        if len(members) < 2:
            continue
        members = tuple(sorted(members, key=lambda i: nodes[i][t]))
        for pos, i in enumerate(members):
            incident[i].append((len(hyperedges), pos))
        hyperedges.append((t, members))
    return InclusionHypergraph(N, m, nodes, hyperedges, incident)


def build_hypergraph(cls: DeterministicClass, features: Sequence, m: int | None = None) -> InclusionHypergraph:
    """One-inclusion hypergraph of ``cls`` projected on ``features``."""
    m = cls.m if m is None else m
    h = hypergraph_from_sequences(cls.realizable(features), m)
    h.N = len(features)
    return h


def _live_degrees(h: InclusionHypergraph, alive: set) -> dict[int, int]:
    deg = {}
    for i in alive:
        deg[i] = sum(
            1 for e, _ in h.incident[i] if sum(1 for j in h.hyperedges[e][1] if j in alive) >= 2
        )
    return deg


def peel_assign_multiclass(
    h: InclusionHypergraph, mu: float | None = None, m: int | None = None, N: int | None = None
) -> list[np.ndarray]:
    """Layered hyperedge assignment for maximal average subgraph degree ``mu``.

    Each round the outer layer is every remaining node lying in at most ``mu``
    hyperedges that still have another remaining member.  For a hyperedge
    touching the outer layer: if all its unassigned members are outer, they
    split the leftover mass equally (the edge closes); otherwise each outer
    member gets ``1 / ((m - 1) N)``.  Returns per-hyperedge member masses.
    ``mu`` defaults to :func:`max_avg_subgraph_degree`.
    """
    if mu is None:
        mu = float(max_avg_subgraph_degree(h).value)
    m = h.m if m is None else m
    N = h.N if N is None else N
    small = 1.0 / ((m - 1) * N)
    probs = [np.full(len(mem), np.nan) for _, mem in h.hyperedges]
    alive = set(range(h.n_nodes))
    while alive:
        deg = _live_degrees(h, alive)
        outer = {i for i in alive if deg[i] <= mu + 1e-12}
        if not outer:
            raise ValueError(f"mu={mu} leaves a round with no outer layer")
        touched = sorted({e for i in outer for e, _ in h.incident[i]})
        for e in touched:
            members = h.hyperedges[e][1]
            open_pos = [pos for pos in range(len(members)) if np.isnan(probs[e][pos])]
            if all(members[pos] in outer for pos in open_pos):
                left = 1.0 - np.nansum(probs[e])
                for pos in open_pos:
                    probs[e][pos] = left / len(open_pos)
            else:
                for pos in open_pos:
                    if members[pos] in outer:
                        probs[e][pos] = small
        alive -= outer
    return probs


def hyper_node_regret(h: InclusionHypergraph, probs: list, node: int, N: int | None = None) -> float:
    N = h.N if N is None else N
    total = 0.0
    for e, pos in h.incident[node]:
        p = probs[e][pos]
        if p <= 0.0:
            return math.inf
        total -= math.log(p)
    return total / N


def hyper_node_regrets(h: InclusionHypergraph, probs: list, N: int | None = None) -> np.ndarray:
    return np.array([hyper_node_regret(h, probs, i, N) for i in range(h.n_nodes)])


def multiclass_bound(mu: float, m: int, N: int) -> float:
    """``(mu log((m-1) N) + 2) / N``."""
    return (mu * math.log((m - 1) * N) + 2.0) / N


class AverageDegree(NamedTuple):
    value: float
    exact: bool


def hyper_degeneracy(h: InclusionHypergraph) -> int:
    """Largest live degree met while repeatedly deleting a minimum-degree node."""
    alive = set(range(h.n_nodes))
    live_count = [len(mem) for _, mem in h.hyperedges]
    deg = [len(inc) for inc in h.incident]
    heap = [(d, i) for i, d in enumerate(deg)]
    heap.sort()
    best = 0
    while heap:
        d, i = heappop(heap)
        if i not in alive or d != deg[i]:
            continue
        alive.discard(i)
        best = max(best, d)
        for e, _ in h.incident[i]:
            live_count[e] -= 1
            if live_count[e] == 1:
                # the last member loses this hyperedge from its degree
                for j in h.hyperedges[e][1]:
                    if j in alive:
                        deg[j] -= 1
                        heappush(heap, (deg[j], j))
    return best


def max_avg_subgraph_degree(h: InclusionHypergraph) -> AverageDegree:
    """Largest average live degree over node subsets.

    Exact by brute force up to 16 nodes (value is a ``Fraction``).  Otherwise
    an upper estimate ``(largest hyperedge) * degeneracy``: every subset's
    hyperedges can be charged to their first-peeled member.
    """
    n = h.n_nodes
    if n == 0 or not h.hyperedges:
        return AverageDegree(Fraction(0), True)
    if n > DENSITY_GUARD:
        width = max(len(mem) for _, mem in h.hyperedges)
        return AverageDegree(float(width * hyper_degeneracy(h)), False)
    masks = np.arange(1, 1 << n, dtype=np.int64)
    size = np.zeros(len(masks), dtype=np.int64)
    for i in range(n):
        size += (masks >> i) & 1
    total = np.zeros(len(masks), dtype=np.int64)
    for _, mem in h.hyperedges:
        inside = np.zeros(len(masks), dtype=np.int64)
        for j in mem:
            inside += (masks >> j) & 1
        total += np.where(inside >= 2, inside, 0)
    scale = math.lcm(*range(1, n + 1))
    best = int(np.argmax(total * (scale // size)))
    return AverageDegree(Fraction(int(total[best]), int(size[best])), True)
