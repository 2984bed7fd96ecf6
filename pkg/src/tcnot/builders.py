"""Experiment circuit builders.

All circuits are assembled by one parameterized routine: K logical patches
are prepared in a common basis, undergo ``sum(rounds_vector)`` rounds of
syndrome extraction with noiseless, instantaneous transversal CNOT layers
interleaved between rounds, and end with a transversal data readout in the
preparation basis.  A memory experiment is the special case with no CNOT
layers and a single patch.

Detectors compare each stabilizer against its previous measurement
(first-round checks of the preparation basis are compared against the fixed
prepared value, final checks against parities reconstructed from the data
readout).  Each patch contributes one logical observable: the readout-basis
logical operator measured at the end.  No detector or observable ever mixes
measurements from different patches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, CircuitBuilder
from .layout import PatchLayout, Plaquette, repetition_layout, surface_layout
from .pauli import Pauli

NOISE_MODELS = ("sd6", "phenomenological", "none")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class InjectedError:
    """Deterministic Pauli inserted right before SE round ``slice_index``.

    ``slice_index == sum(rounds_vector)`` places the error right before the
    final data readout.  Injections at a slice hosting a CNOT layer land
    after the layer.
    """
    patch: int
    slice_index: int
    qubit: int
    pauli: Pauli = Pauli.X


@dataclass(frozen=True)
class LogicalCircuitSpec:
    """Parameters of one multi-patch transversal-CNOT experiment."""

    kind: str                                   # "repetition" | "surface"
    distance: int
    num_patches: int = 1
    cnot_layers: tuple[tuple[tuple[int, int], ...], ...] = ()
    rounds_vector: tuple[int, ...] = (1,)
    basis: str = "Z"
    p: float = 0.0
    noise: str = "sd6"
    allow_zero_interior_rounds: bool = False
    injections: tuple[InjectedError, ...] = ()

    def __post_init__(self):
        if self.kind not in ("repetition", "surface"):
            raise SpecError(f"unknown code kind {self.kind!r}")
        if self.distance < 3 or self.distance % 2 == 0:
            raise SpecError(
                f"distance must be an odd integer >= 3, got {self.distance}")
        if self.basis not in ("Z", "X"):
            raise SpecError(f"basis must be Z or X, got {self.basis!r}")
        if self.kind == "repetition" and self.basis != "Z":
            raise SpecError("repetition code supports only the Z-basis problem")
        if self.noise not in NOISE_MODELS:
            raise SpecError(f"unknown noise model {self.noise!r}")
        if not (0.0 <= self.p <= 0.5):
            raise SpecError(f"physical error rate must be in [0, 0.5], got {self.p}")
        if len(self.rounds_vector) != len(self.cnot_layers) + 1:
            raise SpecError("rounds_vector must have one more entry than cnot_layers")
        if self.num_patches < 1:
            raise SpecError("need at least one patch")
        for i, x in enumerate(self.rounds_vector):
            interior = 0 < i < len(self.rounds_vector) - 1
            minimum = 0 if (interior and self.allow_zero_interior_rounds) else 1
            if x < minimum:
                raise SpecError(
                    f"rounds_vector[{i}] = {x} below minimum {minimum}")
        for layer in self.cnot_layers:
            used: set[int] = set()
            for c, t in layer:
                if c == t:
                    raise SpecError("CNOT control and target patches must differ")
                for k in (c, t):
                    if not (0 <= k < self.num_patches):
                        raise SpecError(f"patch index {k} out of range")
                    if k in used:
                        raise SpecError(
                            f"patch {k} used twice within one CNOT layer")
                    used.add(k)

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds_vector)

    def memory_equivalent(self) -> "LogicalCircuitSpec":
        """Same patches and total round count, CNOT layers removed."""
        return LogicalCircuitSpec(
            kind=self.kind, distance=self.distance,
            num_patches=self.num_patches, cnot_layers=(),
            rounds_vector=(self.total_rounds,), basis=self.basis,
            p=self.p, noise=self.noise)


@dataclass(frozen=True)
class CnotEvent:
    """One patch-to-patch CNOT in sweep order."""
    index: int          # position in sweep order
    layer: int
    y: int              # SE rounds executed before this CNOT fires
    control: int
    target: int


@dataclass
class LogicalCircuit:
    """A built experiment: the circuit plus the decoder-facing index maps."""

    spec: LogicalCircuitSpec
    layout: PatchLayout
    circuit: Circuit
    # (patch, basis) -> int array [row][check] of global detector ids
    # (-1 where a row does not exist for that basis).
    detector_map: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    cnot_events: tuple[CnotEvent, ...] = ()

    @property
    def num_rows(self) -> int:
        return self.spec.total_rounds + 1

    def checks_per_basis(self, basis: str) -> int:
        return len(self.layout.plaquettes(basis))

    def syndrome_tensor(self, detection_events: np.ndarray, patch: int,
                        basis: str) -> np.ndarray:
        """Slice one shot's detection events into the [row][check] grid."""
        ids = self.detector_map[(patch, basis)]
        out = np.zeros(ids.shape, dtype=np.uint8)
        valid = ids >= 0
        out[valid] = detection_events[ids[valid]]
        return out


def direction_vector_layers(directions: list[str]) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Two-patch CNOT layers from entries like "01" (control 0, target 1)."""
    layers = []
    for s in directions:
        if s == "01":
            layers.append(((0, 1),))
        elif s == "10":
            layers.append(((1, 0),))
        else:
            raise SpecError(f"direction entries must be '01' or '10', got {s!r}")
    return tuple(layers)


def build_repetition_memory(d: int, rounds: int, p: float, *,
                            noise: str = "phenomenological") -> LogicalCircuit:
    """Single-patch repetition-code memory experiment.

    ``rounds`` counts ancilla-assisted stabilizer rounds; a transversal data
    readout follows, so the circuit has ``rounds + 1`` detector rows per
    check column.
    """
    if rounds < 1:
        raise SpecError(f"rounds must be >= 1, got {rounds}")
    spec = LogicalCircuitSpec(kind="repetition", distance=d,
                              rounds_vector=(rounds,), p=p, noise=noise)
    return build_logical_circuit(spec)


def build_surface_memory(d: int, rounds: int, p: float, basis: str = "Z", *,
                         noise: str = "sd6") -> LogicalCircuit:
    """Single-patch rotated-surface-code memory experiment."""
    if rounds < 1:
        raise SpecError(f"rounds must be >= 1, got {rounds}")
    spec = LogicalCircuitSpec(kind="surface", distance=d,
                              rounds_vector=(rounds,), basis=basis, p=p,
                              noise=noise)
    return build_logical_circuit(spec)


def build_logical_circuit(spec: LogicalCircuitSpec) -> LogicalCircuit:
    """Assemble the full experiment circuit for ``spec``."""
    layout = (repetition_layout(spec.distance) if spec.kind == "repetition"
              else surface_layout(spec.distance))
    return _Assembler(spec, layout).run()


class _Assembler:
    def __init__(self, spec: LogicalCircuitSpec, layout: PatchLayout):
        self.spec = spec
        self.layout = layout
        self.K = spec.num_patches
        self.b = CircuitBuilder(num_qubits=self.K * layout.num_qubits)
        self.p = spec.p if spec.noise != "none" else 0.0
        self.sd6 = spec.noise == "sd6" and self.p > 0
        self.pheno = spec.noise == "phenomenological" and self.p > 0
        self.injections_by_slice: dict[int, list[InjectedError]] = {}
        for inj in spec.injections:
            if not (0 <= inj.slice_index <= spec.total_rounds):
                raise SpecError(f"injection slice {inj.slice_index} out of range")
            self.injections_by_slice.setdefault(inj.slice_index, []).append(inj)

    # -- qubit numbering ---------------------------------------------------
    def data(self, patch: int, q: int) -> int:
        return patch * self.layout.num_qubits + q

    def anc(self, patch: int, plq: Plaquette) -> int:
        return patch * self.layout.num_qubits + self.layout.num_data + plq.ancilla

    def all_data(self, patch: int) -> list[int]:
        return [self.data(patch, q) for q in range(self.layout.num_data)]

    # -- noise helpers -----------------------------------------------------
    def dep1(self, qubits: list[int]) -> None:
        if self.sd6 and qubits:
            self.b.append("DEPOLARIZE1", qubits, probability=self.p)

    def dep2(self, pairs: list[int]) -> None:
        if self.sd6 and pairs:
            self.b.append("DEPOLARIZE2", pairs, probability=self.p)

    # -- assembly ----------------------------------------------------------
    def run(self) -> LogicalCircuit:
        spec = self.spec
        self._prepare_data()
        layer_starts = {}
        y = 0
        for a, layer in enumerate(spec.cnot_layers):
            y += spec.rounds_vector[a]
            layer_starts.setdefault(y, []).append((a, layer))

        cnot_events: list[CnotEvent] = []
        for i in range(spec.total_rounds):
            for a, layer in layer_starts.get(i, []):
                self._transversal_layer(layer)
                for c, t in layer:
                    cnot_events.append(CnotEvent(
                        index=len(cnot_events), layer=a, y=i, control=c, target=t))
            self._inject(i)
            self._se_round(i)
        self._inject(spec.total_rounds)
        self._final_readout()
        det_map = self._detector_maps()
        return LogicalCircuit(spec=spec, layout=self.layout,
                              circuit=self.b.build(), detector_map=det_map,
                              cnot_events=tuple(cnot_events))

    def _prepare_data(self) -> None:
        for k in range(self.K):
            data = self.all_data(k)
            self.b.append("RESET_Z", data)
            if self.sd6:
                self.b.append("X_ERROR", data, probability=self.p)
            if self.spec.basis == "X":
                self.b.append("H", data)
                self.dep1(data)
        self.b.append("TICK")

    def _transversal_layer(self, layer: tuple[tuple[int, int], ...]) -> None:
        pairs: list[int] = []
        for c, t in layer:
            for q in range(self.layout.num_data):
                pairs.extend((self.data(c, q), self.data(t, q)))
        self.b.append("CNOT", pairs, comment="transversal layer")
        self.b.append("TICK")

    def _inject(self, slice_index: int) -> None:
        for inj in self.injections_by_slice.get(slice_index, []):
            q = self.data(inj.patch, inj.qubit)
            if inj.pauli in (Pauli.X, Pauli.Y):
                self.b.append("X_ERROR", [q], probability=1.0, comment="injected")
            if inj.pauli in (Pauli.Z, Pauli.Y):
                self.b.append("H", [q], comment="injected")
                self.b.append("X_ERROR", [q], probability=1.0, comment="injected")
                self.b.append("H", [q], comment="injected")

    def _se_round(self, t: int) -> None:
        if self.layout.kind == "repetition":
            self._repetition_round(t)
        else:
            self._surface_round(t)
        self._round_detectors(t)
        self.b.append("TICK")

    def _repetition_round(self, t: int) -> None:
        lay = self.layout
        for k in range(self.K):
            if self.pheno:
                self.b.append("X_ERROR", self.all_data(k), probability=self.p)
            self.dep1(self.all_data(k))  # start-of-round data depolarization
        for k in range(self.K):
            ancs = [self.anc(k, plq) for plq in lay.z_plaquettes]
            self.b.append("RESET_Z", ancs)
            if self.sd6:
                self.b.append("X_ERROR", ancs, probability=self.p)
        for step in range(2):
            for k in range(self.K):
                pairs: list[int] = []
                for plq in lay.z_plaquettes:
                    pairs.extend((self.data(k, plq.data[step]), self.anc(k, plq)))
                self.b.append("CNOT", pairs)
                self.dep2(pairs)
        for k in range(self.K):
            for plq in lay.z_plaquettes:
                self.b.measure(self.anc(k, plq), key=(k, t, "Z", plq.ancilla),
                               flip_probability=self.p if (self.sd6 or self.pheno) else 0.0)

    def _surface_round(self, t: int) -> None:
        lay = self.layout
        for k in range(self.K):
            if self.pheno:
                self.b.append("DEPOLARIZE1", self.all_data(k), probability=self.p)
            self.dep1(self.all_data(k))  # start-of-round data depolarization
        x_offset = len(lay.z_plaquettes)
        for k in range(self.K):
            ancs = [self.anc(k, plq)
                    for plq in lay.z_plaquettes + lay.x_plaquettes]
            self.b.append("RESET_Z", ancs)
            if self.sd6:
                self.b.append("X_ERROR", ancs, probability=self.p)
        for k in range(self.K):
            x_ancs = [self.anc(k, plq) for plq in lay.x_plaquettes]
            self.b.append("H", x_ancs)
            self.dep1(x_ancs)
        for step in range(4):
            for k in range(self.K):
                pairs: list[int] = []
                for plq in lay.x_plaquettes:
                    q = plq.data[step]
                    if q >= 0:
                        pairs.extend((self.anc(k, plq), self.data(k, q)))
                for plq in lay.z_plaquettes:
                    q = plq.data[step]
                    if q >= 0:
                        pairs.extend((self.data(k, q), self.anc(k, plq)))
                self.b.append("CNOT", pairs)
                self.dep2(pairs)
        for k in range(self.K):
            x_ancs = [self.anc(k, plq) for plq in lay.x_plaquettes]
            self.b.append("H", x_ancs)
            self.dep1(x_ancs)
        flip_p = self.p if (self.sd6 or self.pheno) else 0.0
        for k in range(self.K):
            for plq in lay.z_plaquettes:
                self.b.measure(self.anc(k, plq), key=(k, t, "Z", plq.ancilla),
                               flip_probability=flip_p)
            for plq in lay.x_plaquettes:
                self.b.measure(self.anc(k, plq),
                               key=(k, t, "X", plq.ancilla - x_offset),
                               flip_probability=flip_p)
            if self.sd6:
                self.dep1(self.all_data(k))

    def _round_detectors(self, t: int) -> None:
        lay = self.layout
        bases = ["Z"] if lay.kind == "repetition" else ["Z", "X"]
        for k in range(self.K):
            for basis in bases:
                n_checks = len(lay.plaquettes(basis))
                for alpha in range(n_checks):
                    if t == 0:
                        if basis != self.spec.basis:
                            continue
                        self.b.detector([(k, 0, basis, alpha)])
                    else:
                        self.b.detector([(k, t, basis, alpha),
                                         (k, t - 1, basis, alpha)])

    def _final_readout(self) -> None:
        spec, lay = self.spec, self.layout
        r = spec.total_rounds
        flip_p = self.p if self.sd6 else 0.0
        for k in range(self.K):
            data = self.all_data(k)
            if spec.basis == "X":
                self.b.append("H", data)
                self.dep1(data)
            if self.pheno:
                if lay.kind == "repetition":
                    self.b.append("X_ERROR", data, probability=self.p)
                else:
                    self.b.append("DEPOLARIZE1", data, probability=self.p)
            for q in range(lay.num_data):
                self.b.measure(self.data(k, q), key=(k, "data", q),
                               flip_probability=flip_p)
        basis = spec.basis
        x_offset = len(lay.z_plaquettes)
        for k in range(self.K):
            for idx, plq in enumerate(lay.plaquettes(basis)):
                alpha = idx if basis == "Z" else plq.ancilla - x_offset
                keys: list[object] = [(k, "data", q) for q in sorted(plq.support)]
                keys.append((k, r - 1, basis, alpha))
                self.b.detector(keys)
        for k in range(self.K):
            support = sorted(lay.logical_support(basis))
            self.b.observable(k, [(k, "data", q) for q in support])

    def _detector_maps(self) -> dict[tuple[int, str], np.ndarray]:
        spec, lay = self.spec, self.layout
        r = spec.total_rounds
        bases = ["Z"] if lay.kind == "repetition" else ["Z", "X"]
        maps = {(k, basis): -np.ones((r + 1, len(lay.plaquettes(basis))),
                                     dtype=np.int64)
                for k in range(self.K) for basis in bases}
        det_id = 0
        # Rounds 0..r-1 in emission order, then the final data row.
        for t in range(r):
            for k in range(self.K):
                for basis in bases:
                    for alpha in range(len(lay.plaquettes(basis))):
                        if t == 0 and basis != spec.basis:
                            continue
                        maps[(k, basis)][t, alpha] = det_id
                        det_id += 1
        for k in range(self.K):
            for alpha in range(len(lay.plaquettes(spec.basis))):
                maps[(k, spec.basis)][r, alpha] = det_id
                det_id += 1
        return maps
