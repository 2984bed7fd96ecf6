"""Seeded Monte Carlo Pauli-frame sampling.

Shots are simulated in fixed-size blocks of ``BLOCK_SIZE`` lanes, vectorized
with numpy across the batch dimension.  Block ``b`` draws all of its
randomness from a counter-based Philox stream keyed by ``(seed, b)`` in a
fixed instruction order, so shot ``s`` of a given circuit and seed is
bit-reproducible no matter how shot ranges are partitioned across workers.

The frame convention: ``x[lane, q]`` / ``z[lane, q]`` hold the deviation of
lane ``lane`` from the ideal (noiseless) run.  Measurements record the
deviation of the outcome, detectors and observables XOR those records, so a
noiseless lane reports all zeros.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .circuit import Circuit

BLOCK_SIZE = 1024

# Depolarizing channel tables: channel index -> whether X / Z component
# flips.  Single-qubit channels are {X, Y, Z}; two-qubit channels are the 15
# non-identity products P1 x P2 with P in {I, X, Y, Z} encoded base 4.
_DEP1_X = np.array([1, 1, 0], dtype=np.uint8)
_DEP1_Z = np.array([0, 1, 1], dtype=np.uint8)
_P_X = np.array([0, 1, 1, 0], dtype=np.uint8)
_P_Z = np.array([0, 0, 1, 1], dtype=np.uint8)
_DEP2_X1 = np.array([_P_X[(k + 1) // 4] for k in range(15)], dtype=np.uint8)
_DEP2_Z1 = np.array([_P_Z[(k + 1) // 4] for k in range(15)], dtype=np.uint8)
_DEP2_X2 = np.array([_P_X[(k + 1) % 4] for k in range(15)], dtype=np.uint8)
_DEP2_Z2 = np.array([_P_Z[(k + 1) % 4] for k in range(15)], dtype=np.uint8)


@dataclass(frozen=True)
class ShotResult:
    detection_events: np.ndarray     # uint8 vector over detector ids
    observable_flips: np.ndarray     # uint8 vector over observable ids


class _CompiledCircuit:
    """Detector/observable record indices resolved to absolute positions."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.det_records: list[np.ndarray] = []
        self.obs_records: dict[int, list[int]] = {}
        m = 0
        for ins in circuit.instructions:
            if ins.op in ("MEASURE_Z", "MEASURE_FLIP"):
                m += len(ins.targets)
            elif ins.op == "DETECTOR":
                self.det_records.append(
                    np.array([m + off for off in ins.rec_offsets], dtype=np.int64))
            elif ins.op == "OBSERVABLE":
                recs = self.obs_records.setdefault(ins.observable_id, [])
                recs.extend(m + off for off in ins.rec_offsets)
        self.num_measurements = m


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(block)])
    return np.random.Generator(np.random.Philox(key=key))


def sample_block(circuit: Circuit, seed: int, block: int,
                 lanes: int = BLOCK_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Simulate one block; returns (detection_events, observable_flips).

    Shapes are (lanes, num_detectors) and (lanes, num_observables), uint8.
    """
    compiled = _CompiledCircuit(circuit)
    rng = _block_rng(seed, block)
    n = circuit.num_qubits
    x = np.zeros((lanes, n), dtype=np.uint8)
    z = np.zeros((lanes, n), dtype=np.uint8)
    records = np.zeros((lanes, compiled.num_measurements), dtype=np.uint8)
    m = 0
    for ins in circuit.instructions:
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
            out = x[:, q]
            if op == "MEASURE_FLIP":
                flips = rng.random((lanes, len(q))) < ins.probability
                out = out ^ flips
            records[:, m:m + len(q)] = out
            m += len(q)
        elif op == "X_ERROR":
            q = list(ins.targets)
            if ins.probability >= 1.0:
                x[:, q] ^= 1
            else:
                hits = rng.random((lanes, len(q))) < ins.probability
                x[:, q] ^= hits.astype(np.uint8)
        elif op == "DEPOLARIZE1":
            if ins.probability <= 0.0:
                continue
            q = list(ins.targets)
            u = rng.random((lanes, len(q)))
            hit = u < ins.probability
            chan = np.minimum((u * (3.0 / ins.probability)).astype(np.int64), 2)
            chan[~hit] = 0
            x[:, q] ^= (hit & (_DEP1_X[chan] == 1)).astype(np.uint8)
            z[:, q] ^= (hit & (_DEP1_Z[chan] == 1)).astype(np.uint8)
        elif op == "DEPOLARIZE2":
            if ins.probability <= 0.0:
                continue
            pairs = list(ins.target_pairs())
            q1 = [c for c, _ in pairs]
            q2 = [t for _, t in pairs]
            u = rng.random((lanes, len(pairs)))
            hit = u < ins.probability
            chan = np.minimum((u * (15.0 / ins.probability)).astype(np.int64), 14)
            chan[~hit] = 0
            x[:, q1] ^= (hit & (_DEP2_X1[chan] == 1)).astype(np.uint8)
            z[:, q1] ^= (hit & (_DEP2_Z1[chan] == 1)).astype(np.uint8)
            x[:, q2] ^= (hit & (_DEP2_X2[chan] == 1)).astype(np.uint8)
            z[:, q2] ^= (hit & (_DEP2_Z2[chan] == 1)).astype(np.uint8)
        elif op in ("TICK", "DETECTOR", "OBSERVABLE"):
            pass
        else:
            raise ValueError(f"unknown instruction {op}")

    dets = np.zeros((lanes, circuit.num_detectors), dtype=np.uint8)
    for i, recs in enumerate(compiled.det_records):
        if len(recs):
            dets[:, i] = np.bitwise_xor.reduce(records[:, recs], axis=1)
    obs = np.zeros((lanes, circuit.num_observables), dtype=np.uint8)
    for obs_id, recs in compiled.obs_records.items():
        if recs:
            obs[:, obs_id] = np.bitwise_xor.reduce(records[:, recs], axis=1)
    return dets, obs


def sample_arrays(circuit: Circuit, shots: int, seed: int,
                  first_shot: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample shots [first_shot, first_shot + shots) as dense bit arrays."""
    det_parts = []
    obs_parts = []
    s = first_shot
    end = first_shot + shots
    while s < end:
        block = s // BLOCK_SIZE
        lo = s - block * BLOCK_SIZE
        hi = min(BLOCK_SIZE, end - block * BLOCK_SIZE)
        dets, obs = sample_block(circuit, seed, block)
        det_parts.append(dets[lo:hi])
        obs_parts.append(obs[lo:hi])
        s = block * BLOCK_SIZE + hi
    return np.concatenate(det_parts, axis=0), np.concatenate(obs_parts, axis=0)


def sample(circuit: Circuit, shots: int, seed: int) -> Iterator[ShotResult]:
    """Stream per-shot results; reproducible for a given (circuit, seed)."""
    for start in range(0, shots, BLOCK_SIZE):
        count = min(BLOCK_SIZE, shots - start)
        dets, obs = sample_arrays(circuit, count, seed, first_shot=start)
        for i in range(count):
            yield ShotResult(detection_events=dets[i], observable_flips=obs[i])


_DUMP_MAGIC = b"TCNOTDE1"


def dump_detection_events(path: str, dets: np.ndarray) -> None:
    """Write detection events bit-packed into little-endian 64-bit words.

    Header: 8-byte magic, then detector count and shot count as u64-le.
    Each shot is padded to a whole number of words, least significant bit
    first.
    """
    shots, num_dets = dets.shape
    words_per_shot = (num_dets + 63) // 64
    packed = np.packbits(dets, axis=1, bitorder="little")
    row_bytes = np.zeros((shots, words_per_shot * 8), dtype=np.uint8)
    row_bytes[:, :packed.shape[1]] = packed
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<QQ", num_dets, shots))
        fh.write(row_bytes.tobytes())


def load_detection_events(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _DUMP_MAGIC:
            raise ValueError("not a detection-event dump")
        num_dets, shots = struct.unpack("<QQ", fh.read(16))
        words_per_shot = (num_dets + 63) // 64
        raw = np.frombuffer(fh.read(), dtype=np.uint8)
    rows = raw.reshape(shots, words_per_shot * 8)
    bits = np.unpackbits(rows, axis=1, bitorder="little")
    return bits[:, :num_dets]
