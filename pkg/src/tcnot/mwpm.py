"""Exact minimum-weight perfect matching over a MatchingGraph.

Detection events are paired up (with each other or with the boundary) by
reducing to maximum-weight matching on a complete graph: one node per
detection event plus one boundary copy per event, boundary copies linked by
zero-weight edges.  The blossom search itself is delegated to networkx's
exact ``max_weight_matching``; shortest paths, path expansion, caching and
the brute-force oracle are local.

Instances are desk-scale (tens of events), so exactness is affordable and
matching quality never confounds accuracy comparisons.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .dem import BOUNDARY, Edge, MatchingGraph

_DECODE_CACHE_LIMIT = 1 << 18


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class Matching:
    """A decoded pairing, expanded to primitive graph edges."""
    pairs: tuple[tuple[int, int], ...]       # (node, node) or (node, BOUNDARY)
    expanded_edges: tuple[int, ...]          # edge indices, with multiplicity
    total_weight: float
    observable_flip: int


# Tie-break scale: far below any real weight difference, far above float
# rounding noise of equal sums.
_TIE_EPS = 1e-12


def _tie_bias(graph: MatchingGraph, edge) -> float:
    """Deterministic perturbation preferring, among equal-weight matchings,
    the one whose data-error attributions sit at later rounds (and avoiding
    diagonal edges).  Late attributions propagate through fewer CNOTs, which
    keeps the multi-pass decoder from trading equal-weight explanations back
    and forth between sweeps."""
    from .dem import SPATIAL, TEMPORAL
    if edge.kind == TEMPORAL:
        return 0.0
    if edge.kind == SPATIAL:
        return _TIE_EPS * (graph.num_rows - 1 - edge.row)
    return _TIE_EPS * graph.num_rows


def _ensure_tables(graph: MatchingGraph) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs shortest paths over nodes + boundary.

    Returns (dist, pred) arrays of shape (N+1, N+1); index N is the
    boundary.  pred[s, v] is the edge index used to reach v in s's tree.
    Path selection uses tie-biased weights; ``dist`` stores the biased
    sums (true weights are recovered by walking the predecessor chain).
    """
    if graph._dist is not None:
        return graph._dist, graph._pred
    n = graph.num_nodes
    size = n + 1
    dist = np.full((size, size), np.inf)
    pred = np.full((size, size), -1, dtype=np.int64)
    adj = graph.adjacency()
    biased = [e.weight + _tie_bias(graph, e) for e in graph.edges]

    def slot(node: int) -> int:
        return n if node == BOUNDARY else node

    for s in range(size):
        d = dist[s]
        d[s] = 0.0
        heap = [(0.0, s)]
        done = np.zeros(size, dtype=bool)
        while heap:
            dv, v = heapq.heappop(heap)
            if done[v]:
                continue
            done[v] = True
            vnode = BOUNDARY if v == n else v
            for eidx in adj.get(vnode, ()):
                e = graph.edges[eidx]
                u = e.node_b if e.node_a == vnode else e.node_a
                us = slot(u)
                if done[us]:
                    continue
                nd = dv + biased[eidx]
                if nd < d[us] - 1e-15 or (abs(nd - d[us]) <= 1e-15
                                          and 0 <= eidx < pred[s, us]):
                    d[us] = nd
                    pred[s, us] = eidx
                    heapq.heappush(heap, (nd, us))
    graph._dist, graph._pred = dist, pred
    return dist, pred


def all_pairs_distances(graph: MatchingGraph, sources: list[int]
                        ) -> tuple[dict, dict]:
    """True shortest-path weights from each source to all nodes and boundary.

    Sources and keys use node ids with BOUNDARY for the virtual node.
    Raises DecodeError if any source cannot reach the boundary.
    """
    dist, pred = _ensure_tables(graph)
    n = graph.num_nodes
    slot = lambda v: n if v == BOUNDARY else v
    dists: dict[int, dict[int, float]] = {}
    preds: dict[int, dict[int, int]] = {}
    for s in sources:
        row = dist[slot(s)]
        if not np.isfinite(row[n]):
            raise DecodeError(f"detection event {s} cannot reach the boundary")
        dists[s] = {}
        preds[s] = {}
        for v in range(n + 1):
            node = BOUNDARY if v == n else v
            if np.isfinite(row[v]):
                path = _walk_path(graph, s, node)
                dists[s][node] = sum(graph.edges[e].weight for e in path)
            if pred[slot(s), v] >= 0:
                preds[s][node] = int(pred[slot(s), v])
    return dists, preds


def _walk_path(graph: MatchingGraph, s: int, v: int) -> list[int]:
    """Edge indices along the shortest path from s to v (pred-chain walk)."""
    _, pred = _ensure_tables(graph)
    n = graph.num_nodes
    slot = lambda node: n if node == BOUNDARY else node
    out: list[int] = []
    cur = v
    guard = 0
    while cur != s:
        eidx = int(pred[slot(s), slot(cur)])
        if eidx < 0:
            raise DecodeError(f"no path from {s} to {v}")
        e = graph.edges[eidx]
        out.append(eidx)
        cur = e.node_a if e.node_b == cur else e.node_b
        guard += 1
        if guard > graph.num_nodes + 2:
            raise DecodeError("predecessor chain does not terminate")
    return out


def _finish(graph: MatchingGraph, pairs: list[tuple[int, int]]) -> Matching:
    expanded: list[int] = []
    total = 0.0
    flip = 0
    for u, v in pairs:
        path = _walk_path(graph, u, v)
        expanded.extend(path)
        for eidx in path:
            total += graph.edges[eidx].weight
            flip ^= graph.edges[eidx].observables
    return Matching(pairs=tuple(pairs), expanded_edges=tuple(expanded),
                    total_weight=total, observable_flip=flip)


def decode(graph: MatchingGraph, events) -> Matching:
    """Exact MWPM of the detection events; deterministic for a given graph."""
    ev = tuple(sorted(int(v) for v in events))
    for v in ev:
        if not (0 <= v < graph.num_nodes):
            raise DecodeError(f"event {v} is not a graph node")
    if graph._decode_cache is None:
        graph._decode_cache = {}
    cached = graph._decode_cache.get(ev)
    if cached is not None:
        return cached
    result = _decode_uncached(graph, ev)
    if len(graph._decode_cache) >= _DECODE_CACHE_LIMIT:
        graph._decode_cache.clear()
    graph._decode_cache[ev] = result
    return result


def _decode_uncached(graph: MatchingGraph, ev: tuple[int, ...]) -> Matching:
    n = len(ev)
    if n == 0:
        return Matching(pairs=(), expanded_edges=(), total_weight=0.0,
                        observable_flip=0)
    dist, _ = _ensure_tables(graph)
    nn = graph.num_nodes
    for v in ev:
        if not np.isfinite(dist[v, nn]):
            raise DecodeError(f"detection event {v} cannot reach the boundary")
    if n == 1:
        return _finish(graph, [(ev[0], BOUNDARY)])
    if n == 2:
        a, b = ev
        through = dist[a, b]
        via_boundary = dist[a, nn] + dist[b, nn]
        if through <= via_boundary + 1e-12:
            return _finish(graph, [(a, b)])
        return _finish(graph, [(a, BOUNDARY), (b, BOUNDARY)])

    # Reduced complete graph: events 0..n-1, boundary copies n..2n-1.
    g = nx.Graph()
    for i in range(n):
        g.add_edge(i, n + i, weight=-float(dist[ev[i], nn]))
        for j in range(i + 1, n):
            d = dist[ev[i], ev[j]]
            if np.isfinite(d):
                g.add_edge(i, j, weight=-float(d))
            g.add_edge(n + i, n + j, weight=0.0)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    pairs: list[tuple[int, int]] = []
    for a, b in sorted((min(a, b), max(a, b)) for a, b in mate):
        if a < n and b < n:
            pairs.append((ev[a], ev[b]))
        elif a < n <= b:
            pairs.append((ev[a], BOUNDARY))
    if sum(2 if u != BOUNDARY and v != BOUNDARY else 1 for u, v in pairs) != n:
        raise DecodeError("matching failed to cover every detection event")
    return _finish(graph, pairs)


def brute_force_decode(graph: MatchingGraph, events) -> Matching:
    """Exhaustive minimum-weight pairing; oracle for small instances."""
    ev = tuple(sorted(int(v) for v in events))
    if len(ev) > 12:
        raise DecodeError("brute force limited to at most 12 events")
    dist, _ = _ensure_tables(graph)
    nn = graph.num_nodes
    slot = lambda v: nn if v == BOUNDARY else v

    memo: dict[frozenset, tuple[float, tuple]] = {}

    def solve(remaining: frozenset) -> tuple[float, tuple]:
        if not remaining:
            return 0.0, ()
        if remaining in memo:
            return memo[remaining]
        first = min(remaining)
        rest = remaining - {first}
        best_w, best_pairs = None, None
        cand = [(BOUNDARY, float(dist[first, nn]))]
        for other in sorted(rest):
            d = float(dist[first, other])
            if np.isfinite(d):
                cand.append((other, d))
        for other, d in cand:
            sub = rest - {other} if other != BOUNDARY else rest
            w, pairs = solve(frozenset(sub))
            total = d + w
            if best_w is None or total < best_w - 1e-15:
                best_w = total
                best_pairs = ((first, other),) + pairs
        if best_w is None:
            raise DecodeError("events cannot all be paired")
        memo[remaining] = (best_w, best_pairs)
        return memo[remaining]

    _, pairs = solve(frozenset(ev))
    return _finish(graph, list(pairs))
