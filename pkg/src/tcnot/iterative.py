"""Multi-pass per-patch decoding with frame propagation across CNOTs.

Each logical patch is decoded against its own memory-equivalent matching
graph.  Per-shot state is held in three bit tensors per patch:

* ``S[i][alpha]`` — detection events at SE row ``i``, check ``alpha``
  (row ``total_rounds`` is the final data-readout row);
* ``B[i][j]`` — decoded data errors attributed right before row ``i`` on
  data qubit ``j``; only spatial matched edges populate B;
* ``G[i][j]`` — errors propagated onto the patch by a CNOT firing right
  before row ``i``.

A sweep visits every CNOT in circuit order: the source patch's frame
accumulated before the CNOT, ``P = xor_{i<y}(B[i] ^ G[i])``, is turned into
a detector toggle on the destination's row ``y`` and recorded into
``G[y]``.  Per-CNOT caches hold the previous visit's toggle and frame so a
later sweep first undoes its own earlier propagation (XOR is its own
inverse).  Sweeps repeat until no detection events were toggled, the
frames repeat, or ``l_max`` is hit; a last per-patch decode then refreshes
any patch whose syndrome changed after its most recent matching.

For the Z-check problem errors flow from control to target; the X-check
problem swaps the roles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .builders import CnotEvent, LogicalCircuit
from .dem import DIAGONAL, SPATIAL, MatchingGraph
from .layout import PatchLayout
from .mwpm import Matching, decode

logger = logging.getLogger(__name__)

FRAMES_FIXED = "FRAMES_FIXED"
NO_TOGGLES = "NO_TOGGLES"
EITHER = "EITHER"


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class IterationConfig:
    l_max: int | None = None          # default: number of CNOTs + 1
    convergence: str = EITHER
    trace: bool = False

    def __post_init__(self):
        if self.l_max is not None and self.l_max < 1:
            raise ContractError("l_max must be >= 1")
        if self.convergence not in (FRAMES_FIXED, NO_TOGGLES, EITHER):
            raise ContractError(f"unknown convergence mode {self.convergence}")


@dataclass
class IterativeResult:
    frames_b: dict[int, np.ndarray]
    frames_g: dict[int, np.ndarray]
    predicted_flips: np.ndarray        # one bit per patch
    iterations_used: int
    converged: bool
    matchings: dict[int, Matching] = field(default_factory=dict)
    # Post-run syndromes and per-CNOT caches (toggle pattern, propagated
    # frame), kept for invariant checks and debugging.
    final_syndromes: dict[int, np.ndarray] = field(default_factory=dict)
    toggle_caches: tuple[np.ndarray, ...] = ()
    frame_caches: tuple[np.ndarray, ...] = ()


_incidence_cache: dict = {}


def check_incidence(layout: PatchLayout, basis: str) -> np.ndarray:
    """0/1 matrix: checks x data qubits for one basis."""
    key = (id(layout), basis)
    mat = _incidence_cache.get(key)
    if mat is None:
        plaquettes = layout.plaquettes(basis)
        mat = np.zeros((len(plaquettes), layout.num_data), dtype=np.uint8)
        for idx, plq in enumerate(plaquettes):
            for q in plq.support:
                mat[idx, q] = 1
        _incidence_cache[key] = mat
    return mat


def error_to_det(layout: PatchLayout, frame_row: np.ndarray,
                 basis: str) -> np.ndarray:
    """Checks toggled by a data-error row: odd-overlap stabilizers fire."""
    frame_row = np.asarray(frame_row, dtype=np.uint8)
    if frame_row.shape != (layout.num_data,):
        raise ContractError(
            f"frame row has length {frame_row.shape}, expected {layout.num_data}")
    return (check_incidence(layout, basis) @ frame_row) % 2


def spatial_frame_from_matching(graph: MatchingGraph, matching: Matching,
                                num_rows: int) -> np.ndarray:
    """B-tensor rows implied by a matching's expanded edges.

    Spatial edges set the bit of their qubit at their row; temporal edges
    contribute nothing; diagonal edges first decompose and contribute only
    their spatial members.
    """
    b = np.zeros((num_rows, graph.layout.num_data), dtype=np.uint8)
    for eidx in matching.expanded_edges:
        edge = graph.edges[eidx]
        members = (edge,) if edge.kind != DIAGONAL else tuple(
            graph.edges[i] for i in edge.decomposition)
        for m in members:
            if m.kind == SPATIAL:
                b[m.row, m.qubit] ^= 1
    return b


def flow_events(cnot_events: tuple[CnotEvent, ...], basis: str
                ) -> list[tuple[int, int, int]]:
    """(y, source, destination) per CNOT: X errors flow control->target,
    Z errors target->control."""
    out = []
    for ev in cnot_events:
        if basis == "Z":
            out.append((ev.y, ev.control, ev.target))
        else:
            out.append((ev.y, ev.target, ev.control))
    return out


def iterative_decode(s0: dict[int, np.ndarray],
                     cnot_events: tuple[CnotEvent, ...],
                     graphs: dict[int, MatchingGraph],
                     layout: PatchLayout,
                     basis: str = "Z",
                     cfg: IterationConfig = IterationConfig()) -> IterativeResult:
    """Run the multi-pass decoder on one shot's per-patch syndromes."""
    patches = sorted(s0)
    if not patches:
        raise ContractError("no patches to decode")
    num_rows = graphs[patches[0]].num_rows
    n_checks = graphs[patches[0]].num_checks
    for k in patches:
        if s0[k].shape != (num_rows, n_checks):
            raise ContractError(
                f"syndrome tensor for patch {k} has shape {s0[k].shape}, "
                f"expected {(num_rows, n_checks)}")

    events = flow_events(cnot_events, basis)
    m = len(events)
    l_max = cfg.l_max if cfg.l_max is not None else m + 1

    S = {k: s0[k].astype(np.uint8).copy() for k in patches}
    B = {k: np.zeros((num_rows, layout.num_data), dtype=np.uint8) for k in patches}
    G = {k: np.zeros((num_rows, layout.num_data), dtype=np.uint8) for k in patches}
    s_cache = [np.zeros(n_checks, dtype=np.uint8) for _ in range(m)]
    g_cache = [np.zeros(layout.num_data, dtype=np.uint8) for _ in range(m)]
    # needs_decode follows the raw propagated pattern (a patch is re-decoded
    # when the last CNOT aimed a nonzero toggle at it, even if the toggle
    # was an exact undo); stale tracks net syndrome changes and only drives
    # the final consistency decode.  Gating on the raw pattern is what
    # keeps alternating-CNOT instances from oscillating between degenerate
    # matchings.
    needs_decode = {k: True for k in patches}
    stale = {k: True for k in patches}
    matchings: dict[int, Matching] = {}

    def refresh(k: int) -> bool:
        matching = decode(graphs[k], np.flatnonzero(S[k].reshape(-1)))
        matchings[k] = matching
        new_b = spatial_frame_from_matching(graphs[k], matching, num_rows)
        changed = not np.array_equal(new_b, B[k])
        B[k] = new_b
        needs_decode[k] = False
        stale[k] = False
        return changed

    toggle_sweeps = 0
    converged = False
    for sweep in range(1, l_max + 1):
        toggled_any = False
        frames_changed = False
        toggle_count = 0
        for a, (y, src, dst) in enumerate(events):
            if needs_decode[src]:
                frames_changed |= refresh(src)
            p_frame = np.bitwise_xor.reduce(
                B[src][:y] ^ G[src][:y], axis=0) if y > 0 else \
                np.zeros(layout.num_data, dtype=np.uint8)
            s_prime = error_to_det(layout, p_frame, basis)
            net_s = s_prime ^ s_cache[a]
            if net_s.any():
                S[dst][y] ^= net_s
                s_cache[a] = s_prime
                stale[dst] = True
                toggled_any = True
                toggle_count += int(net_s.sum())
            if s_prime.any():
                needs_decode[dst] = True
            net_g = p_frame ^ g_cache[a]
            if net_g.any():
                G[dst][y] ^= net_g
                g_cache[a] = p_frame
                frames_changed = True
        if cfg.trace:
            weights = {k: int(B[k].sum() + G[k].sum()) for k in patches}
            logger.debug("sweep=%d toggled_des=%d frame_weights=%s",
                         sweep, toggle_count, weights)
        # An iteration is one sweep that actually toggled detection events;
        # a quiet sweep only confirms termination.  Frame refreshes that
        # trail the last toggle are folded into the final per-patch decode.
        if toggled_any:
            toggle_sweeps += 1
        stop_no_toggles = not toggled_any
        stop_frames = not frames_changed
        if (cfg.convergence == NO_TOGGLES and stop_no_toggles) or \
           (cfg.convergence == FRAMES_FIXED and stop_frames) or \
           (cfg.convergence == EITHER and (stop_no_toggles or stop_frames)):
            converged = True
            break

    for k in patches:
        if stale[k]:
            refresh(k)

    iterations_used = max(1, toggle_sweeps)
    support = sorted(layout.logical_support(basis))
    flips = np.zeros(len(patches), dtype=np.uint8)
    for i, k in enumerate(patches):
        total = np.bitwise_xor.reduce(B[k] ^ G[k], axis=0)
        flips[i] = int(total[support].sum() % 2)
    return IterativeResult(frames_b=B, frames_g=G, predicted_flips=flips,
                           iterations_used=iterations_used, converged=converged,
                           matchings=matchings, final_syndromes=S,
                           toggle_caches=tuple(s_cache),
                           frame_caches=tuple(g_cache))


def predict_observables(result: IterativeResult, layout: PatchLayout,
                        basis: str = "Z") -> np.ndarray:
    """Per-patch predicted observable flips from the final frames."""
    support = sorted(layout.logical_support(basis))
    patches = sorted(result.frames_b)
    flips = np.zeros(len(patches), dtype=np.uint8)
    for i, k in enumerate(patches):
        total = np.bitwise_xor.reduce(
            result.frames_b[k] ^ result.frames_g[k], axis=0)
        flips[i] = int(total[support].sum() % 2)
    return flips


def decode_shot(logical: LogicalCircuit, detection_events: np.ndarray,
                graph: MatchingGraph,
                cfg: IterationConfig = IterationConfig()) -> IterativeResult:
    """Convenience wrapper: slice a raw shot, run the iterative decoder."""
    spec = logical.spec
    s0 = {k: logical.syndrome_tensor(detection_events, k, spec.basis)
          for k in range(spec.num_patches)}
    graphs = {k: graph for k in range(spec.num_patches)}
    return iterative_decode(s0, logical.cnot_events, graphs, logical.layout,
                            basis=spec.basis, cfg=cfg)
