import pytest

from tcnot.builders import (InjectedError, LogicalCircuitSpec, SpecError,
                            build_logical_circuit, build_repetition_memory,
                            build_surface_memory, direction_vector_layers)
from tcnot.circuit import Circuit, CircuitError, Instruction
from tcnot.pauli import Pauli


def test_instruction_probability_bounds():
    Instruction("DEPOLARIZE1", (0,), probability=0.75)
    with pytest.raises(CircuitError):
        Instruction("DEPOLARIZE1", (0,), probability=0.76)
    with pytest.raises(CircuitError):
        Instruction("DEPOLARIZE2", (0, 1), probability=0.94)
    with pytest.raises(CircuitError):
        Instruction("X_ERROR", (0,), probability=-0.1)


def test_instruction_cnot_validation():
    with pytest.raises(CircuitError):
        Instruction("CNOT", (1, 1))
    with pytest.raises(CircuitError):
        Instruction("CNOT", (0, 1, 2))


def test_detector_offsets_must_exist():
    with pytest.raises(CircuitError):
        Circuit(1, [Instruction("DETECTOR", rec_offsets=(-1,))])


def test_text_round_trip():
    lc = build_surface_memory(3, 2, 1e-3, "Z", noise="sd6")
    text = lc.circuit.to_text()
    parsed = Circuit.from_text(text)
    assert parsed == lc.circuit
    assert parsed.to_text() == text


def test_builders_are_deterministic():
    a = build_surface_memory(3, 3, 2e-3, "X").circuit.to_text()
    b = build_surface_memory(3, 3, 2e-3, "X").circuit.to_text()
    assert a == b


def test_repetition_memory_detector_count():
    # d=3, one ancilla round: 2 first-round checks + 2 final data checks.
    lc = build_repetition_memory(3, 1, 0.1)
    assert lc.circuit.num_detectors == 4


def test_repetition_memory_fig_grid():
    # d=5 with 3 ancilla rounds: 4 check columns x 4 detector rows.
    lc = build_repetition_memory(5, 3, 1e-3)
    assert lc.detector_map[(0, "Z")].shape == (4, 4)
    assert lc.circuit.num_detectors == 16


def test_surface_memory_stabilizer_count_per_round():
    # 24 stabilizers measured per round for d=5 (12 Z + 12 X).
    lc = build_surface_memory(5, 2, 1e-3, "Z")
    measured = sum(len(i.targets) for i in lc.circuit.instructions
                   if i.op in ("MEASURE_Z", "MEASURE_FLIP"))
    rounds, data = 2, 25
    assert measured == rounds * 24 + data


def test_bad_parameters_rejected():
    with pytest.raises(SpecError):
        build_repetition_memory(4, 2, 1e-3)
    with pytest.raises(SpecError):
        build_surface_memory(3, 0, 1e-3)
    with pytest.raises(SpecError):
        LogicalCircuitSpec(kind="surface", distance=3, num_patches=2,
                           cnot_layers=(((0, 1), (1, 0)),),
                           rounds_vector=(1, 1), p=1e-3)
    with pytest.raises(SpecError):
        LogicalCircuitSpec(kind="repetition", distance=3, basis="X")


def test_interior_zero_rounds_gated():
    layers = direction_vector_layers(["01", "10"])
    with pytest.raises(SpecError):
        LogicalCircuitSpec(kind="surface", distance=3, num_patches=2,
                           cnot_layers=layers, rounds_vector=(1, 0, 1), p=0.0,
                           noise="none")
    LogicalCircuitSpec(kind="surface", distance=3, num_patches=2,
                       cnot_layers=layers, rounds_vector=(1, 0, 1), p=0.0,
                       noise="none", allow_zero_interior_rounds=True)


def test_memory_equivalent_strips_layers():
    spec = LogicalCircuitSpec(kind="surface", distance=3, num_patches=2,
                              cnot_layers=direction_vector_layers(["01"]),
                              rounds_vector=(1, 2), p=1e-3)
    mem = spec.memory_equivalent()
    assert mem.cnot_layers == ()
    assert mem.total_rounds == spec.total_rounds == 3
    assert mem.num_patches == 2


def test_detector_map_is_complete_for_experiment_basis():
    spec = LogicalCircuitSpec(kind="surface", distance=3, num_patches=2,
                              cnot_layers=direction_vector_layers(["01"]),
                              rounds_vector=(1, 1), p=1e-3)
    lc = build_logical_circuit(spec)
    for k in range(2):
        ids = lc.detector_map[(k, "Z")]
        assert (ids >= 0).all()
    all_ids = sorted(int(i) for k in range(2)
                     for i in lc.detector_map[(k, "Z")].ravel())
    x_ids = sorted(int(i) for k in range(2)
                   for i in lc.detector_map[(k, "X")].ravel() if i >= 0)
    assert len(set(all_ids) | set(x_ids)) == lc.circuit.num_detectors


def test_injection_slice_bounds():
    with pytest.raises(SpecError):
        build_logical_circuit(LogicalCircuitSpec(
            kind="repetition", distance=3, rounds_vector=(1,), p=0.0,
            noise="none", injections=(InjectedError(0, 3, 0, Pauli.X),)))
