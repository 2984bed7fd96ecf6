"""Phaseless Pauli algebra on dense bit vectors.

A frame stores, for every physical qubit, one X bit and one Z bit.  Phases
are dropped throughout: only the support of an error matters for detectors
and logical observables, so frames form the abelian group (F_2^n x F_2^n, xor).
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class Pauli(Enum):
    I = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def x_bit(self) -> int:
        return 1 if self in (Pauli.X, Pauli.Y) else 0

    @property
    def z_bit(self) -> int:
        return 1 if self in (Pauli.Y, Pauli.Z) else 0

    def __mul__(self, other: "Pauli") -> "Pauli":
        # Composition mod phase: bitwise xor of (x, z) components.
        return _FROM_BITS[(self.x_bit ^ other.x_bit, self.z_bit ^ other.z_bit)]


_FROM_BITS = {
    (0, 0): Pauli.I,
    (1, 0): Pauli.X,
    (1, 1): Pauli.Y,
    (0, 1): Pauli.Z,
}


def pauli_from_bits(x_bit: int, z_bit: int) -> Pauli:
    return _FROM_BITS[(x_bit & 1, z_bit & 1)]


class FrameSizeError(ValueError):
    """Two frames with different qubit counts were combined."""


class InvalidGateError(ValueError):
    """A gate was applied with malformed targets (e.g. control == target)."""


class PauliFrame:
    """Phaseless Pauli operator on a fixed register of qubits.

    The qubit count is fixed at construction; all operations are
    index-checked.  Instances are treated as immutable values: mutating
    operations return new frames.
    """

    __slots__ = ("x_bits", "z_bits")

    def __init__(self, num_qubits: int | None = None, *,
                 x_bits: np.ndarray | None = None,
                 z_bits: np.ndarray | None = None):
        if x_bits is None:
            if num_qubits is None or num_qubits < 0:
                raise ValueError("num_qubits must be a non-negative integer")
            x_bits = np.zeros(num_qubits, dtype=np.uint8)
            z_bits = np.zeros(num_qubits, dtype=np.uint8)
        self.x_bits = np.asarray(x_bits, dtype=np.uint8)
        self.z_bits = np.asarray(z_bits, dtype=np.uint8)
        if self.x_bits.shape != self.z_bits.shape:
            raise FrameSizeError("x_bits and z_bits must have equal length")

    @classmethod
    def from_pauli(cls, num_qubits: int, qubit: int, pauli: Pauli) -> "PauliFrame":
        f = cls(num_qubits)
        f._check_index(qubit)
        f.x_bits[qubit] = pauli.x_bit
        f.z_bits[qubit] = pauli.z_bit
        return f

    @property
    def num_qubits(self) -> int:
        return int(self.x_bits.shape[0])

    def _check_index(self, q: int) -> None:
        if not (0 <= q < self.num_qubits):
            raise IndexError(f"qubit index {q} out of range [0, {self.num_qubits})")

    def pauli_at(self, q: int) -> Pauli:
        self._check_index(q)
        return _FROM_BITS[(int(self.x_bits[q]), int(self.z_bits[q]))]

    def is_identity(self) -> bool:
        return not self.x_bits.any() and not self.z_bits.any()

    def copy(self) -> "PauliFrame":
        return PauliFrame(x_bits=self.x_bits.copy(), z_bits=self.z_bits.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliFrame):
            return NotImplemented
        return (self.num_qubits == other.num_qubits
                and bool(np.array_equal(self.x_bits, other.x_bits))
                and bool(np.array_equal(self.z_bits, other.z_bits)))

    def __hash__(self):
        return hash((self.x_bits.tobytes(), self.z_bits.tobytes()))

    def __repr__(self) -> str:
        chars = "".join(self.pauli_at(q).name for q in range(self.num_qubits))
        return f"PauliFrame({chars})"


def frame_xor(a: PauliFrame, b: PauliFrame) -> PauliFrame:
    """Group product of two frames (componentwise xor, phases dropped)."""
    if a.num_qubits != b.num_qubits:
        raise FrameSizeError(
            f"frame sizes differ: {a.num_qubits} vs {b.num_qubits}")
    return PauliFrame(x_bits=a.x_bits ^ b.x_bits, z_bits=a.z_bits ^ b.z_bits)


def conjugate_through_cnot(f: PauliFrame, control: int, target: int) -> PauliFrame:
    """Push a frame through a CNOT: X spreads control->target, Z target->control."""
    if control == target:
        raise InvalidGateError("CNOT control and target must differ")
    f._check_index(control)
    f._check_index(target)
    out = f.copy()
    out.x_bits[target] ^= out.x_bits[control]
    out.z_bits[control] ^= out.z_bits[target]
    return out


def conjugate_through_h(f: PauliFrame, q: int) -> PauliFrame:
    """Push a frame through a Hadamard: swaps the X and Z bits on q."""
    f._check_index(q)
    out = f.copy()
    out.x_bits[q], out.z_bits[q] = f.z_bits[q], f.x_bits[q]
    return out
