"""Exact graph edit distance on typed multigraphs.

Uniform cost model: every node/edge insertion, deletion, and substitution
costs 1. Nodes substitute nodes and edges substitute edges; a type change
is what makes a substitution cost 1 instead of 0. Two entities match at
zero cost only when their types and topological positions agree.

``ged`` is an anytime exact solver: best-first search over assignments of
one graph's nodes to the other's (or to deletion), ordered by
``cost-so-far + admissible lower bound``. The lower bound is the multiset
mismatch between the not-yet-assigned node types and the not-yet-decided
edge types of both graphs, so the first completed assignment popped from
the frontier is provably optimal. A greedy assignment provides the initial
incumbent for pruning. If the deadline expires first, the best incumbent is
returned with ``optimal=False`` — never an error.

``ged_bruteforce`` is a deliberately unsophisticated oracle for testing:
depth-first enumeration of all assignments, cutting a branch only when its
committed cost already reaches the best complete cost found so far.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from heapq import heappush, heappop

from .graph import HeteroGraph

EditOp = tuple[str, str, str]  # (action, entity, target) e.g. ("delete", "edge", "M5~net:E")


@dataclass(frozen=True)
class GedResult:
    """Outcome of a GED search.

    ``cost`` is always a valid upper bound on the true distance and equals
    it when ``optimal`` is true.
    """

    cost: int
    optimal: bool
    elapsed: float
    edit_ops: tuple[EditOp, ...] | None = None


class _Compiled:
    """Graph lowered to integer node/edge types and pairwise edge bundles."""

    __slots__ = ("n", "ntype", "adj", "ids", "edge_total", "edge_type_counts")

    def __init__(self, g: HeteroGraph, node_types: dict[str, int], edge_types: dict[str, int]):
        self.ids = [nid for nid, _ in g.nodes]
        index = {nid: i for i, nid in enumerate(self.ids)}
        if len(index) != len(self.ids):
            raise ValueError("duplicate node ids in graph")
        self.n = len(self.ids)
        self.ntype = [node_types.setdefault(t, len(node_types)) for _, t in g.nodes]
        bundles: dict[int, dict[int, list[int]]] = {i: {} for i in range(self.n)}
        for u, v, et in g.edges:
            iu, iv = index[u], index[v]
            t = edge_types.setdefault(et, len(edge_types))
            bundles[iu].setdefault(iv, []).append(t)
            if iu != iv:
                bundles[iv].setdefault(iu, []).append(t)
        self.adj: list[dict[int, tuple[int, ...]]] = [
            {w: tuple(sorted(ts)) for w, ts in bundles[i].items()} for i in range(self.n)
        ]
        self.edge_total = len(g.edges)
        counts: dict[int, int] = {}
        for _, _, et in g.edges:
            counts[edge_types[et]] = counts.get(edge_types[et], 0) + 1
        self.edge_type_counts = counts


def _bundle_cost(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Edit cost between two parallel-edge bundles: max(|a|,|b|) - |a ∩ b|."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    i = j = inter = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            inter += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return max(len(a), len(b)) - inter


def _mismatch(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """max(Σa, Σb) - Σ min(a_t, b_t) over per-type count vectors."""
    sa = sb = matched = 0
    for x, y in zip(a, b):
        sa += x
        sb += y
        matched += x if x < y else y
    return (sa if sa > sb else sb) - matched


def _order_nodes(c: _Compiled) -> list[int]:
    """Process nodes so each one touches the already-processed prefix when possible."""
    remaining = set(range(c.n))
    order: list[int] = []
    while remaining:
        seed = max(remaining, key=lambda i: (len(c.adj[i]), -i))
        queue = [seed]
        remaining.discard(seed)
        while queue:
            u = queue.pop(0)
            order.append(u)
            nbrs = sorted((w for w in c.adj[u] if w in remaining),
                          key=lambda w: (-len(c.adj[w]), w))
            for w in nbrs:
                remaining.discard(w)
                queue.append(w)
    return order


class _Search:
    """Shared machinery: incremental assignment cost and heuristic vectors."""

    def __init__(self, g1: HeteroGraph, g2: HeteroGraph):
        node_types: dict[str, int] = {}
        edge_types: dict[str, int] = {}
        self.c1 = _Compiled(g1, node_types, edge_types)
        self.c2 = _Compiled(g2, node_types, edge_types)
        self.nt = len(node_types)
        self.et = len(edge_types)
        self.order = _order_nodes(self.c1)
        self.pos = {u: i for i, u in enumerate(self.order)}
        n1 = self.c1.n
        # static per-depth remainders for g1
        node_rem = [[0] * self.nt for _ in range(n1 + 1)]
        for d in range(n1 - 1, -1, -1):
            node_rem[d] = node_rem[d + 1][:]
            node_rem[d][self.c1.ntype[self.order[d]]] += 1
        self.node_rem1 = [tuple(v) for v in node_rem]
        # an edge stays "undecided" until both endpoints are processed, so it
        # belongs to every remainder up to its later endpoint's depth
        edge_rem = [[0] * self.et for _ in range(n1 + 1)]
        for d in range(n1 - 1, -1, -1):
            edge_rem[d] = edge_rem[d + 1][:]
            u = self.order[d]
            for w, ts in self.c1.adj[u].items():
                if self.pos[w] < d or w == u:
                    for t in ts:
                        edge_rem[d][t] += 1
        self.edge_rem1 = [tuple(v) for v in edge_rem]
        b_nodes = [0] * self.nt
        for t in self.c2.ntype:
            b_nodes[t] += 1
        self.b_nodes0 = tuple(b_nodes)
        b_edges = [0] * self.et
        for t, cnt in self.c2.edge_type_counts.items():
            b_edges[t] += cnt
        self.b_edges0 = tuple(b_edges)

    def assign_delta(self, d: int, mapping: tuple[int, ...], used: int, u: int, v: int):
        """Cost increase of mapping g1 node u -> g2 node v at depth d.

        Returns (delta, edge type decrements for the dynamic g2 remainder).
        """
        c1, c2 = self.c1, self.c2
        delta = 1 if c1.ntype[u] != c2.ntype[v] else 0
        decrements: list[int] = []
        handled = 0
        self_a = c1.adj[u].get(u, ())
        self_b = c2.adj[v].get(v, ())
        if self_a or self_b:
            delta += _bundle_cost(self_a, self_b)
            decrements.extend(self_b)
        for w, a in c1.adj[u].items():
            if w == u:
                continue
            p = self.pos[w]
            if p < d:
                vw = mapping[p]
                if vw >= 0:
                    b = c2.adj[v].get(vw, ())
                    if b:
                        handled |= 1 << vw
                        decrements.extend(b)
                    delta += _bundle_cost(a, b)
                else:
                    delta += len(a)
        for x, b in c2.adj[v].items():
            if x != v and (used >> x) & 1 and not (handled >> x) & 1:
                delta += len(b)
                decrements.extend(b)
        return delta, decrements

    def delete_delta(self, d: int, u: int) -> int:
        c1 = self.c1
        delta = 1 + len(c1.adj[u].get(u, ()))
        for w, a in c1.adj[u].items():
            if w != u and self.pos[w] < d:
                delta += len(a)
        return delta

    def greedy_cost(self) -> tuple[int, tuple[int, ...]]:
        """A complete assignment built by locally cheapest choices (upper bound)."""
        n1, n2 = self.c1.n, self.c2.n
        mapping: list[int] = []
        used = 0
        g = 0
        decided_edges = 0
        for d in range(n1):
            u = self.order[d]
            best_v, best_delta, best_dec = -1, self.delete_delta(d, u), 0
            for v in range(n2):
                if (used >> v) & 1:
                    continue
                delta, dec = self.assign_delta(d, tuple(mapping), used, u, v)
                if delta < best_delta:
                    best_v, best_delta, best_dec = v, delta, len(dec)
            g += best_delta
            mapping.append(best_v)
            if best_v >= 0:
                used |= 1 << best_v
                decided_edges += best_dec
        unused = n2 - bin(used).count("1")
        g += unused + (self.c2.edge_total - decided_edges)
        return g, tuple(mapping)


def _extract_ops(search: _Search, mapping: tuple[int, ...]) -> tuple[EditOp, ...]:
    """Categorized edit operations realizing a complete assignment."""
    c1, c2 = search.c1, search.c2
    ops: list[EditOp] = []
    m = {search.order[i]: mapping[i] for i in range(c1.n)}
    for u in range(c1.n):
        v = m[u]
        if v < 0:
            ops.append(("delete", "node", c1.ids[u]))
        elif c1.ntype[u] != c2.ntype[v]:
            ops.append(("substitute", "node", f"{c1.ids[u]}->{c2.ids[v]}"))
    mapped_targets = {v for v in m.values() if v >= 0}
    for v in range(c2.n):
        if v not in mapped_targets:
            ops.append(("insert", "node", c2.ids[v]))
    handled_pairs: set[tuple[int, int]] = set()
    for u in range(c1.n):
        for w, a in c1.adj[u].items():
            if w < u:
                continue
            mu, mw = m[u], m[w]
            b = c2.adj[mu].get(mw, ()) if mu >= 0 and mw >= 0 else ()
            if mu >= 0 and mw >= 0:
                handled_pairs.add((mu, mw) if mu <= mw else (mw, mu))
            i = j = inter = 0
            while i < len(a) and j < len(b):
                if a[i] == b[j]:
                    inter += 1
                    i += 1
                    j += 1
                elif a[i] < b[j]:
                    i += 1
                else:
                    j += 1
            tag = f"{c1.ids[u]}~{c1.ids[w]}"
            subs = min(len(a), len(b)) - inter
            ops.extend(("substitute", "edge", tag) for _ in range(subs))
            ops.extend(("delete", "edge", tag) for _ in range(len(a) - min(len(a), len(b))))
            ops.extend(("insert", "edge", tag) for _ in range(len(b) - min(len(a), len(b))))
    for x in range(c2.n):
        for y, b in c2.adj[x].items():
            if y < x:
                continue
            if (x, y) not in handled_pairs:
                ops.extend(("insert", "edge", f"{c2.ids[x]}~{c2.ids[y]}") for _ in range(len(b)))
    return tuple(ops)


def ged(g1: HeteroGraph, g2: HeteroGraph, budget: float = 60.0,
        want_ops: bool = False) -> GedResult:
    """Graph edit distance between two typed multigraphs.

    ``budget`` is wall-clock seconds; on expiry the best upper bound found
    so far is returned with ``optimal=False``. Increasing the budget never
    increases the reported cost.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    start = time.monotonic()
    deadline = start + budget
    s = _Search(g1, g2)
    n1, n2 = s.c1.n, s.c2.n

    trivial = n1 + s.c1.edge_total + n2 + s.c2.edge_total
    incumbent, best_mapping = s.greedy_cost() if n1 else (n2 + s.c2.edge_total, ())
    if trivial < incumbent:
        incumbent, best_mapping = trivial, tuple([-1] * n1)

    def finish(cost: int, optimal: bool) -> GedResult:
        ops = _extract_ops(s, best_mapping) if want_ops and len(best_mapping) == n1 else None
        return GedResult(cost, optimal, time.monotonic() - start, ops)

    if n1 == 0:
        return finish(n2 + s.c2.edge_total, True)

    # frontier entries: (f, -depth, seq, g, mapping, used, b_nodes, b_edges)
    seq = 0
    root_h = _mismatch(s.node_rem1[0], s.b_nodes0) + _mismatch(s.edge_rem1[0], s.b_edges0)
    heap = [(root_h, 0, seq, 0, (), 0, s.b_nodes0, s.b_edges0)]
    pops = 0
    while heap:
        f, negd, _, g, mapping, used, b_nodes, b_edges = heappop(heap)
        if f >= incumbent:
            return finish(incumbent, True)
        pops += 1
        if pops % 128 == 0 and (time.monotonic() > deadline or len(heap) > 1_500_000):
            return finish(incumbent, False)
        d = -negd
        u = s.order[d]
        nd = d + 1
        candidates: list[tuple[int, int, list[int]]] = []
        for v in range(n2):
            if (used >> v) & 1:
                continue
            delta, dec = s.assign_delta(d, mapping, used, u, v)
            candidates.append((v, delta, dec))
        candidates.append((-1, s.delete_delta(d, u), []))
        for v, delta, dec in candidates:
            ng = g + delta
            if ng >= incumbent:
                continue
            if v >= 0:
                nused = used | (1 << v)
                nb_nodes = list(b_nodes)
                nb_nodes[s.c2.ntype[v]] -= 1
                nb_nodes = tuple(nb_nodes)
                if dec:
                    nb_edges_l = list(b_edges)
                    for t in dec:
                        nb_edges_l[t] -= 1
                    nb_edges = tuple(nb_edges_l)
                else:
                    nb_edges = b_edges
            else:
                nused, nb_nodes, nb_edges = used, b_nodes, b_edges
            h = _mismatch(s.node_rem1[nd], nb_nodes) + _mismatch(s.edge_rem1[nd], nb_edges)
            nf = ng + h
            if nf >= incumbent:
                continue
            nmapping = mapping + (v,)
            if nd == n1:
                # h at full depth is exactly the insertion completion cost
                incumbent, best_mapping = nf, nmapping
            else:
                seq += 1
                heappush(heap, (nf, -nd, seq, ng, nmapping, nused, nb_nodes, nb_edges))
    return finish(incumbent, True)


def ged_bruteforce(g1: HeteroGraph, g2: HeteroGraph, max_nodes: int = 14) -> int:
    """Provably minimal edit cost by exhaustive assignment enumeration.

    Verification oracle: no heuristics, no ordering tricks — a branch is
    abandoned only once its committed cost already matches the best complete
    assignment seen. ``max_nodes`` bounds the combined node count; raise it
    explicitly for a larger (slower) instance.
    """
    s = _Search(g1, g2)
    n1, n2 = s.c1.n, s.c2.n
    if n1 + n2 > max_nodes:
        raise ValueError(f"graphs too large for brute force: {n1}+{n2} > {max_nodes}")
    order = list(range(n1))  # plain given order, no connectivity heuristics
    s.order = order
    s.pos = {u: u for u in order}
    e2 = s.c2.edge_total
    best = n1 + s.c1.edge_total + n2 + e2

    def rec(d: int, mapping: tuple[int, ...], used: int, g: int, decided: int) -> None:
        nonlocal best
        if g >= best:
            return
        if d == n1:
            total = g + (n2 - bin(used).count("1")) + (e2 - decided)
            if total < best:
                best = total
            return
        u = order[d]
        for v in range(n2):
            if (used >> v) & 1:
                continue
            delta, dec = s.assign_delta(d, mapping, used, u, v)
            rec(d + 1, mapping + (v,), used | (1 << v), g + delta, decided + len(dec))
        rec(d + 1, mapping + (-1,), used, g + s.delete_delta(d, u), decided)

    rec(0, (), 0, 0, 0)
    return best
