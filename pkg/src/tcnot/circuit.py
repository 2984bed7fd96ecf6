"""Instruction-level circuit representation.

A circuit is a flat list of instructions over a fixed qubit register:
gates (RESET_Z, H, CNOT), measurements (MEASURE_Z, MEASURE_FLIP), noise
channels (DEPOLARIZE1, DEPOLARIZE2, X_ERROR), timing markers (TICK) and
classical declarations (DETECTOR, OBSERVABLE over measurement-record
offsets).  Circuits are immutable once built and serialize to a stable
line-oriented text format (one instruction per line, ``OP arg... #comment``);
the grammar is documented in docs/circuit_format.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

GATE_OPS = {"RESET_Z", "H", "CNOT", "MEASURE_Z", "TICK"}
NOISE_OPS = {"DEPOLARIZE1", "DEPOLARIZE2", "X_ERROR", "MEASURE_FLIP"}
ANNOTATION_OPS = {"DETECTOR", "OBSERVABLE"}

# Uniform channels over 3 or 15 non-identity Paulis cannot exceed these.
_MAX_PROB = {"DEPOLARIZE1": 0.75, "DEPOLARIZE2": 0.9375,
             "X_ERROR": 1.0, "MEASURE_FLIP": 1.0}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Instruction:
    op: str
    targets: tuple[int, ...] = ()
    probability: float | None = None
    rec_offsets: tuple[int, ...] = ()        # DETECTOR / OBSERVABLE only, negative
    observable_id: int | None = None
    comment: str = ""

    def __post_init__(self):
        if self.op in NOISE_OPS:
            p = self.probability
            if p is None or not (0.0 <= p <= _MAX_PROB[self.op]):
                raise CircuitError(
                    f"{self.op} needs probability in [0, {_MAX_PROB[self.op]}], got {p}")
        elif self.probability is not None:
            raise CircuitError(f"{self.op} takes no probability")
        if self.op in ("CNOT", "DEPOLARIZE2") and len(self.targets) % 2 != 0:
            raise CircuitError(f"{self.op} needs an even number of targets")
        if self.op == "CNOT":
            for c, t in self.target_pairs():
                if c == t:
                    raise CircuitError("CNOT control and target must differ")
        if self.op in ANNOTATION_OPS:
            if any(r >= 0 for r in self.rec_offsets):
                raise CircuitError(f"{self.op} record offsets must be negative")
        if self.op == "OBSERVABLE" and self.observable_id is None:
            raise CircuitError("OBSERVABLE needs an id")

    def target_pairs(self) -> Iterator[tuple[int, int]]:
        it = iter(self.targets)
        return zip(it, it)


class Circuit:
    """Immutable instruction list with measurement/detector bookkeeping."""

    def __init__(self, num_qubits: int, instructions: Iterable[Instruction]):
        self.num_qubits = num_qubits
        self.instructions: tuple[Instruction, ...] = tuple(instructions)
        self.num_measurements = 0
        self.num_detectors = 0
        self.num_observables = 0
        obs_ids: set[int] = set()
        for ins in self.instructions:
            if ins.op in ("MEASURE_Z", "MEASURE_FLIP"):
                self.num_measurements += len(ins.targets)
            for q in ins.targets:
                if not (0 <= q < num_qubits):
                    raise CircuitError(f"qubit index {q} out of range")
            if ins.op in ANNOTATION_OPS:
                for off in ins.rec_offsets:
                    if self.num_measurements + off < 0:
                        raise CircuitError(
                            f"{ins.op} references measurement before start of circuit")
                if ins.op == "DETECTOR":
                    self.num_detectors += 1
                else:
                    obs_ids.add(ins.observable_id)
        if obs_ids and obs_ids != set(range(len(obs_ids))):
            raise CircuitError("observable ids must be 0..k-1")
        self.num_observables = len(obs_ids)

    def __len__(self) -> int:
        return len(self.instructions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.num_qubits == other.num_qubits
                and self.instructions == other.instructions)

    def to_text(self) -> str:
        lines = [f"QUBITS {self.num_qubits}"]
        for ins in self.instructions:
            lines.append(_format_instruction(ins))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        num_qubits = None
        instructions = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line, _, comment = raw.partition("#")
            line = line.strip()
            if not line:
                continue
            try:
                parts = line.split()
                if parts[0] == "QUBITS":
                    num_qubits = int(parts[1])
                    continue
                instructions.append(_parse_instruction(parts, comment.strip()))
            except (ValueError, IndexError, KeyError) as exc:
                raise CircuitError(f"line {lineno}: cannot parse {raw!r}") from exc
        if num_qubits is None:
            raise CircuitError("missing QUBITS header line")
        return cls(num_qubits, instructions)


def _format_instruction(ins: Instruction) -> str:
    parts = [ins.op]
    if ins.probability is not None:
        parts[0] += f"({ins.probability:.12g})"
    if ins.op == "OBSERVABLE":
        parts.append(str(ins.observable_id))
    parts.extend(str(t) for t in ins.targets)
    parts.extend(f"rec[{off}]" for off in ins.rec_offsets)
    out = " ".join(parts)
    if ins.comment:
        out += f"  # {ins.comment}"
    return out


def _parse_instruction(parts: list[str], comment: str) -> Instruction:
    head = parts[0]
    prob = None
    if "(" in head:
        op, _, rest = head.partition("(")
        prob = float(rest.rstrip(")"))
    else:
        op = head
    args = parts[1:]
    obs_id = None
    if op == "OBSERVABLE":
        obs_id = int(args[0])
        args = args[1:]
    targets = []
    recs = []
    for a in args:
        if a.startswith("rec["):
            recs.append(int(a[4:-1]))
        else:
            targets.append(int(a))
    return Instruction(op=op, targets=tuple(targets), probability=prob,
                       rec_offsets=tuple(recs), observable_id=obs_id,
                       comment=comment)


@dataclass
class CircuitBuilder:
    """Mutable accumulator used by the experiment builders."""

    num_qubits: int
    instructions: list[Instruction] = field(default_factory=list)
    _num_measurements: int = 0
    # Absolute measurement index by (round marker, label); filled by builders.
    measurement_index: dict[object, int] = field(default_factory=dict)

    def append(self, op: str, targets: Iterable[int] = (), *,
               probability: float | None = None, comment: str = "") -> None:
        self.instructions.append(Instruction(
            op=op, targets=tuple(targets), probability=probability,
            comment=comment))
        if op in ("MEASURE_Z", "MEASURE_FLIP"):
            self._num_measurements += len(self.instructions[-1].targets)

    def measure(self, qubit: int, key: object, flip_probability: float) -> None:
        """Measure one qubit, remembering its absolute record index under key."""
        if flip_probability > 0.0:
            self.append("MEASURE_FLIP", [qubit], probability=flip_probability)
        else:
            self.append("MEASURE_Z", [qubit])
        self.measurement_index[key] = self._num_measurements - 1

    def detector(self, keys: Iterable[object], comment: str = "") -> None:
        offsets = tuple(sorted(
            self.measurement_index[k] - self._num_measurements for k in keys))
        self.instructions.append(Instruction(
            op="DETECTOR", rec_offsets=offsets, comment=comment))

    def observable(self, obs_id: int, keys: Iterable[object]) -> None:
        offsets = tuple(sorted(
            self.measurement_index[k] - self._num_measurements for k in keys))
        self.instructions.append(Instruction(
            op="OBSERVABLE", rec_offsets=offsets, observable_id=obs_id))

    def build(self) -> Circuit:
        return Circuit(self.num_qubits, self.instructions)
