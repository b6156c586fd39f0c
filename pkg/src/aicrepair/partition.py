"""Split an AIC set into partitions that can be repaired separately.

Two graphs are built over the rules.  An undirected edge joins rules whose
bodies read a common atom pattern; a directed edge r1 -> r2 records that r1
precedes r2 (r1 can write something r2 reads, not conversely).  Partitions
are the strongly connected components once entangled pairs with no
precedence either way are linked in both directions.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

from .core import Aic, AtomPattern
from .parser import AicDocument, Partition


@dataclass
class AicGraph:
    nodes: list[Aic]
    undirected: set[tuple[int, int]] = field(default_factory=set)  # both (i, j) and (j, i)
    directed: set[tuple[int, int]] = field(default_factory=set)


def patterns_unifiable(a: AtomPattern, b: AtomPattern) -> bool:
    """Same table, and every column both patterns fix to a constant carries the same constant."""
    if a.table != b.table:
        return False
    ca, cb = a.constants(), b.constants()
    return all(cb[c] == v for c, v in ca.items() if c in cb)


def _reads_common(r1: Aic, r2: Aic) -> bool:
    return any(patterns_unifiable(l1.atom, l2.atom) for l1 in r1.body for l2 in r2.body)


def _influences(r1: Aic, r2: Aic) -> bool:
    return any(patterns_unifiable(h.atom, l.atom) for h in r1.head for l in r2.body)


def build_graphs(aics: Sequence[Aic]) -> AicGraph:
    g = AicGraph(list(aics))
    n = len(g.nodes)
    for i in range(n):
        for j in range(i + 1, n):
            ri, rj = g.nodes[i], g.nodes[j]
            if _reads_common(ri, rj):
                g.undirected.update({(i, j), (j, i)})
            fwd, back = _influences(ri, rj), _influences(rj, ri)
            if fwd and not back:
                g.directed.add((i, j))
            elif back and not fwd:
                g.directed.add((j, i))
    return g


def _augmented(g: AicGraph) -> dict[int, list[int]]:
    succ: dict[int, set[int]] = {i: set() for i in range(len(g.nodes))}
    for i, j in g.directed:
        succ[i].add(j)
    for i, j in g.undirected:
        if (i, j) not in g.directed and (j, i) not in g.directed:
            succ[i].add(j)
    return {i: sorted(s) for i, s in succ.items()}


def strongly_connected(succ: dict[int, list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative so deep chains do not hit the recursion limit."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for start in sorted(succ):
        if start in index:
            continue
        work = [(start, 0)]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, k = work[-1]
            if k < len(succ[v]):
                work[-1] = (v, k + 1)
                w = succ[v][k]
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def compute_partitions(g: AicGraph) -> AicDocument:
    """Annotated document: components numbered in precedence order, ties by smallest rule index."""
    succ = _augmented(g)
    comps = strongly_connected(succ)
    comp_of = {v: c for c, members in enumerate(comps) for v in members}
    edges: set[tuple[int, int]] = set()
    for v, ws in succ.items():
        for w in ws:
            if comp_of[v] != comp_of[w]:
                edges.add((comp_of[v], comp_of[w]))

    indeg = {c: 0 for c in range(len(comps))}
    for _, b in edges:
        indeg[b] += 1
    ready = [(comps[c][0], c) for c, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    number: dict[int, int] = {}
    while ready:
        _, c = heapq.heappop(ready)
        number[c] = len(number) + 1
        for a, b in edges:
            if a == c:
                indeg[b] -= 1
                if indeg[b] == 0:
                    heapq.heappush(ready, (comps[b][0], b))

    parts = sorted(
        (Partition(number[c], tuple(g.nodes[i] for i in members)) for c, members in enumerate(comps)),
        key=lambda p: p.id,
    )
    # "X -> Y" means Y precedes X
    deps = sorted((number[b], number[a]) for a, b in edges)
    return AicDocument.annotate(parts, deps)


def preprocess(aics: Sequence[Aic]) -> AicDocument:
    return compute_partitions(build_graphs(aics))
