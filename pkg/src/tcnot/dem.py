"""Matching-graph extraction from memory-equivalent circuits.

Every elementary fault (each Pauli component of each noise channel, each
measurement flip) is propagated deterministically through the circuit to
its detector signature and observable flip.  Signatures are restricted to
one patch and one check basis, identical signatures are merged, and the
result becomes a weighted graph over detector nodes ``(row, check)`` plus a
virtual boundary:

* single-detector signatures become boundary edges;
* two-detector signatures become regular edges;
* wider signatures are decomposed into existing primitive edges and fold
  their probability into each member.

Edges are classified as SPATIAL (a data error within one round, attributed
to a qubit), TEMPORAL (a check misread, linking consecutive rows of one
column) or DIAGONAL (mid-circuit faults spanning rows or several qubits).
Each DIAGONAL edge stores a decomposition into primitive edges whose
spatial members stand in for it during frame propagation.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .builders import LogicalCircuit
from .circuit import Circuit
from .layout import PatchLayout

BOUNDARY = -1
PROBABILITY_FLOOR = 1e-15

SPATIAL = "SPATIAL"
TEMPORAL = "TEMPORAL"
DIAGONAL = "DIAGONAL"


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class FaultSignature:
    """Detector footprint of one elementary fault."""
    detectors: tuple[int, ...]        # node ids, sorted
    observables: int                  # bitmask
    probability: float


@dataclass(frozen=True)
class Edge:
    index: int
    node_a: int                       # BOUNDARY or node id; node_a < node_b
    node_b: int
    probability: float
    weight: float
    kind: str
    observables: int
    qubit: int = -1                   # SPATIAL: data qubit
    row: int = -1                     # SPATIAL: round; TEMPORAL: earlier round
    check: int = -1                   # TEMPORAL: check column
    decomposition: tuple[int, ...] = ()   # DIAGONAL: primitive edge indices

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.node_a, self.node_b)


@dataclass
class MatchingGraph:
    """Weighted detector graph for one patch and one basis."""

    basis: str
    num_rows: int
    num_checks: int
    layout: PatchLayout
    edges: list[Edge] = field(default_factory=list)
    _adjacency: dict[int, list[int]] | None = None
    _dist: np.ndarray | None = None
    _pred: np.ndarray | None = None
    _decode_cache: dict | None = None

    @property
    def num_nodes(self) -> int:
        return self.num_rows * self.num_checks

    def node_id(self, row: int, check: int) -> int:
        if not (0 <= row < self.num_rows and 0 <= check < self.num_checks):
            raise IndexError(f"node ({row}, {check}) out of range")
        return row * self.num_checks + check

    def node_coords(self, node: int) -> tuple[int, int]:
        return divmod(node, self.num_checks)

    def adjacency(self) -> dict[int, list[int]]:
        if self._adjacency is None:
            adj: dict[int, list[int]] = {n: [] for n in range(self.num_nodes)}
            adj[BOUNDARY] = []
            for e in self.edges:
                adj[e.node_a].append(e.index)
                adj[e.node_b].append(e.index)
            self._adjacency = adj
        return self._adjacency

    def to_text(self) -> str:
        lines = [f"GRAPH basis={self.basis} rows={self.num_rows} "
                 f"checks={self.num_checks}"]
        for e in self.edges:
            extra = ""
            if e.kind == SPATIAL:
                extra = f" qubit={e.qubit} row={e.row}"
            elif e.kind == TEMPORAL:
                extra = f" check={e.check} row={e.row}"
            elif e.decomposition:
                extra = " decomp=" + ",".join(str(i) for i in e.decomposition)
            lines.append(
                f"EDGE {e.node_a} {e.node_b} kind={e.kind} p={e.probability:.9g} "
                f"w={e.weight:.9g} obs={e.observables}{extra}")
        return "\n".join(lines) + "\n"


def edge_weight(p: float) -> float:
    p = min(max(p, PROBABILITY_FLOOR), 0.5)
    return math.log((1.0 - p) / p)


def _merge_probability(p1: float, p2: float) -> float:
    return p1 * (1.0 - p2) + p2 * (1.0 - p1)


# ---------------------------------------------------------------------------
# Fault enumeration

_P_X = (0, 1, 1, 0)
_P_Z = (0, 0, 1, 1)


@dataclass
class _Fault:
    instr: int
    probability: float
    # Pauli flips applied at the instruction position: (qubit, x, z)
    flips: tuple[tuple[int, int, int], ...] = ()
    record_flip: int = -1             # measurement slot within the instruction


def _enumerate_faults(circuit: Circuit) -> list[_Fault]:
    faults: list[_Fault] = []
    for i, ins in enumerate(circuit.instructions):
        p = ins.probability
        if ins.op == "X_ERROR":
            for q in ins.targets:
                faults.append(_Fault(i, p, ((q, 1, 0),)))
        elif ins.op == "MEASURE_FLIP":
            for slot in range(len(ins.targets)):
                faults.append(_Fault(i, p, (), record_flip=slot))
        elif ins.op == "DEPOLARIZE1":
            for q in ins.targets:
                for xf, zf in ((1, 0), (1, 1), (0, 1)):
                    faults.append(_Fault(i, p / 3.0, ((q, xf, zf),)))
        elif ins.op == "DEPOLARIZE2":
            for a, b in ins.target_pairs():
                for k in range(1, 16):
                    p1, p2 = k // 4, k % 4
                    flips = tuple(
                        (q, _P_X[c], _P_Z[c])
                        for q, c in ((a, p1), (b, p2)) if c != 0)
                    faults.append(_Fault(i, p / 15.0, flips))
    return faults


def _propagate_faults(circuit: Circuit, faults: list[_Fault]
                      ) -> tuple[np.ndarray, np.ndarray]:
    """One deterministic pass, one lane per fault; returns (dets, obs)."""
    lanes = len(faults)
    by_instr: dict[int, list[int]] = {}
    for idx, f in enumerate(faults):
        by_instr.setdefault(f.instr, []).append(idx)

    n = circuit.num_qubits
    x = np.zeros((lanes, n), dtype=np.uint8)
    z = np.zeros((lanes, n), dtype=np.uint8)
    records = np.zeros((lanes, circuit.num_measurements), dtype=np.uint8)
    det_vals: list[np.ndarray] = []
    obs = np.zeros((lanes, max(circuit.num_observables, 1)), dtype=np.uint8)
    m = 0
    for i, ins in enumerate(circuit.instructions):
        op = ins.op
        if op == "CNOT":
            for c, t in ins.target_pairs():
                x[:, t] ^= x[:, c]
                z[:, c] ^= z[:, t]
        elif op == "H":
            q = list(ins.targets)
            x[:, q], z[:, q] = z[:, q].copy(), x[:, q].copy()
        elif op == "RESET_Z":
            q = list(ins.targets)
            x[:, q] = 0
            z[:, q] = 0
        elif op in ("MEASURE_Z", "MEASURE_FLIP"):
            q = list(ins.targets)
            records[:, m:m + len(q)] = x[:, q]
            if op == "MEASURE_FLIP":
                for idx in by_instr.get(i, ()):
                    f = faults[idx]
                    if f.record_flip >= 0:
                        records[idx, m + f.record_flip] ^= 1
            m += len(q)
        elif op == "DETECTOR":
            val = np.zeros(lanes, dtype=np.uint8)
            for off in ins.rec_offsets:
                val ^= records[:, m + off]
            det_vals.append(val)
        elif op == "OBSERVABLE":
            for off in ins.rec_offsets:
                obs[:, ins.observable_id] ^= records[:, m + off]
        if op in ("X_ERROR", "DEPOLARIZE1", "DEPOLARIZE2"):
            for idx in by_instr.get(i, ()):
                for q, xf, zf in faults[idx].flips:
                    x[idx, q] ^= xf
                    z[idx, q] ^= zf
    dets = (np.stack(det_vals, axis=1) if det_vals
            else np.zeros((lanes, 0), dtype=np.uint8))
    return dets, obs


# ---------------------------------------------------------------------------
# Graph assembly

def extract_dem(logical: LogicalCircuit, patch: int = 0,
                basis: str | None = None) -> MatchingGraph:
    """Build the matching graph of one patch from its memory-equivalent.

    ``logical`` may be any built experiment; the graph is always extracted
    from the memory-equivalent single-patch circuit (same total rounds, no
    CNOT layers), which shares per-patch detector indexing with the full
    experiment.
    """
    spec = logical.spec
    basis = basis or spec.basis
    if basis != spec.basis:
        raise ExtractionError(
            f"experiment prepared in basis {spec.basis}; cannot decode {basis}")
    from .builders import build_logical_circuit  # local to avoid cycle at import
    mem_spec = replace(spec.memory_equivalent(), num_patches=1, injections=())
    mem = build_logical_circuit(mem_spec)
    return extract_dem_from_memory(mem, basis)


def extract_dem_from_memory(mem: LogicalCircuit, basis: str) -> MatchingGraph:
    layout = mem.layout
    num_rows = mem.num_rows
    n_checks = mem.checks_per_basis(basis)
    det_ids = mem.detector_map[(0, basis)]
    node_of_det = {}
    for row in range(num_rows):
        for check in range(n_checks):
            gid = det_ids[row, check]
            if gid >= 0:
                node_of_det[int(gid)] = row * n_checks + check

    faults = _enumerate_faults(mem.circuit)
    graph = MatchingGraph(basis=basis, num_rows=num_rows, num_checks=n_checks,
                          layout=layout)
    if not faults:
        return graph
    dets, obs = _propagate_faults(mem.circuit, faults)

    # Merge: within one noise instruction the components are exclusive and
    # their probabilities add; across instructions they combine as
    # independent parity flips.
    per_instr: dict[tuple[tuple[int, ...], int], dict[int, float]] = {}
    for idx, fault in enumerate(faults):
        fired = np.flatnonzero(dets[idx])
        sig = tuple(sorted(node_of_det[int(g)] for g in fired
                           if int(g) in node_of_det))
        mask = int(obs[idx, 0]) if obs.shape[1] else 0
        if not sig:
            if mask:
                raise ExtractionError(
                    "elementary fault flips an observable without any "
                    "detector signature")
            continue
        bucket = per_instr.setdefault((sig, mask), {})
        bucket[fault.instr] = bucket.get(fault.instr, 0.0) + fault.probability

    signatures: list[FaultSignature] = []
    for (sig, mask), by_instr in sorted(per_instr.items()):
        p = 0.0
        for _, q in sorted(by_instr.items()):
            p = _merge_probability(p, q)
        signatures.append(FaultSignature(detectors=sig, observables=mask,
                                         probability=p))

    conflict = {}
    for fs in signatures:
        if fs.detectors in conflict and conflict[fs.detectors] != fs.observables:
            raise ExtractionError(
                f"signature {fs.detectors} carries conflicting observable masks")
        conflict[fs.detectors] = fs.observables

    primitives = [fs for fs in signatures if len(fs.detectors) <= 2]
    wide = [fs for fs in signatures if len(fs.detectors) > 2]

    edges: list[Edge] = []
    for fs in primitives:
        sig, mask = fs.detectors, fs.observables
        a, b = (BOUNDARY, sig[0]) if len(sig) == 1 else (sig[0], sig[1])
        kind, qubit, row, check = _classify(graph, layout, basis, sig, mask)
        edges.append(Edge(index=len(edges), node_a=a, node_b=b,
                          probability=fs.probability,
                          weight=edge_weight(fs.probability), kind=kind,
                          observables=mask, qubit=qubit, row=row, check=check))
    graph.edges = edges

    # Fold faults spanning more than two detectors into primitive edges.
    for fs in wide:
        members = _decompose_signature(graph, fs.detectors, fs.observables)
        for idx in members:
            e = graph.edges[idx]
            p_new = _merge_probability(e.probability, fs.probability)
            graph.edges[idx] = replace(e, probability=p_new,
                                       weight=edge_weight(p_new))

    # Attach decompositions to diagonal edges.
    for e in list(graph.edges):
        if e.kind == DIAGONAL:
            sig = tuple(n for n in e.endpoints if n != BOUNDARY)
            members = _decompose_signature(graph, sig, e.observables,
                                           exclude=e.index)
            graph.edges[e.index] = replace(e, decomposition=tuple(members))

    _check_boundary_connectivity(graph)
    return graph


def _classify(graph: MatchingGraph, layout: PatchLayout, basis: str,
              sig: tuple[int, ...], mask: int) -> tuple[str, int, int, int]:
    coords = [graph.node_coords(n) for n in sig]
    rows = {r for r, _ in coords}
    if len(sig) == 2 and coords[0][1] == coords[1][1] \
            and abs(coords[0][0] - coords[1][0]) == 1:
        row = min(coords[0][0], coords[1][0])
        return TEMPORAL, -1, row, coords[0][1]
    if len(rows) == 1:
        row = coords[0][0]
        checks = sorted(c for _, c in coords)
        support = frozenset(layout.logical_support(basis))
        by_qubit = layout.checks_containing(basis)
        for q in range(layout.num_data):
            if by_qubit[q] == checks and int(q in support) == mask:
                return SPATIAL, q, row, -1
    return DIAGONAL, -1, -1, -1


def _primitive_path(graph: MatchingGraph, u: int, v: int, parity: int,
                    exclude: int) -> tuple[float, tuple[int, ...]] | None:
    """Min-weight chain of non-diagonal edges u -> v flipping ``parity``
    observables, found by Dijkstra on the (node, parity) double cover."""
    adj = graph.adjacency()
    dist: dict[tuple[int, int], float] = {(u, 0): 0.0}
    back: dict[tuple[int, int], tuple[tuple[int, int], int]] = {}
    heap = [(0.0, (u, 0))]
    done: set[tuple[int, int]] = set()
    goal = (v, parity)
    while heap:
        d, state = heapq.heappop(heap)
        if state in done:
            continue
        done.add(state)
        if state == goal:
            break
        node, par = state
        for eidx in adj.get(node, ()):
            e = graph.edges[eidx]
            if eidx == exclude or e.kind == DIAGONAL:
                continue
            other = e.node_b if e.node_a == node else e.node_a
            nxt = (other, par ^ e.observables)
            nd = d + e.weight
            if nd < dist.get(nxt, math.inf) - 1e-15:
                dist[nxt] = nd
                back[nxt] = (state, eidx)
                heapq.heappush(heap, (nd, nxt))
    if goal not in dist or goal not in done:
        return None
    edges: list[int] = []
    cur = goal
    while cur != (u, 0):
        cur, eidx = back[cur]
        edges.append(eidx)
    return dist[goal], tuple(reversed(edges))


def _decompose_signature(graph: MatchingGraph, sig: tuple[int, ...],
                         mask: int, exclude: int = -1) -> tuple[int, ...]:
    """Minimum-weight primitive error chain XOR-ing to (sig, mask).

    Detectors are paired up (or matched to the boundary) and each pair is
    joined by a parity-constrained shortest chain of non-diagonal edges;
    the per-pair observable parities must combine to the fault's mask.
    """
    best: tuple[float, tuple[int, ...]] | None = None
    for pairing in _pairings(sig):
        for parities in _parity_splits(len(pairing), mask):
            total = 0.0
            members: list[int] = []
            ok = True
            for (a, b), par in zip(pairing, parities):
                found = _primitive_path(graph, a, b, par, exclude)
                if found is None:
                    ok = False
                    break
                w, edges = found
                total += w
                members.extend(edges)
            if ok:
                cand = (total, tuple(members))
                if best is None or cand < best:
                    best = cand
    if best is None:
        raise ExtractionError(
            f"fault signature {sig} (obs={mask}) cannot be decomposed into "
            f"primitive edges")
    return best[1]


def _pairings(sig: tuple[int, ...]):
    """All ways to split detectors into pairs and boundary-matched singles."""
    if not sig:
        yield ()
        return
    first, rest = sig[0], sig[1:]
    for tail in _pairings(rest):
        yield ((first, BOUNDARY),) + tail
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _pairings(remaining):
            yield ((first, other),) + tail


def _parity_splits(n: int, mask: int):
    """All per-pair observable parities XOR-ing to ``mask``."""
    for bits in itertools.product((0, 1), repeat=max(n - 1, 0)):
        last = mask
        for b in bits:
            last ^= b
        yield bits + (last,) if n > 0 else ()


def _check_boundary_connectivity(graph: MatchingGraph) -> None:
    if not graph.edges:
        return
    seen = {BOUNDARY}
    stack = [BOUNDARY]
    adj = graph.adjacency()
    while stack:
        v = stack.pop()
        for idx in adj[v]:
            e = graph.edges[idx]
            for n in e.endpoints:
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
    touched = {n for e in graph.edges for n in e.endpoints}
    missing = touched - seen
    if missing:
        raise ExtractionError(
            f"matching graph not connected through the boundary: {sorted(missing)}")


def decompose_edge(graph: MatchingGraph, edge: Edge) -> list[Edge]:
    """Primitive chain standing in for ``edge`` during frame propagation."""
    if edge.kind != DIAGONAL:
        return [edge]
    if not edge.decomposition:
        raise ExtractionError(f"diagonal edge {edge.index} lacks a decomposition")
    return [graph.edges[i] for i in edge.decomposition]
