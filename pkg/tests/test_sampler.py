from dataclasses import replace

import numpy as np
import pytest

from tcnot.builders import (InjectedError, LogicalCircuitSpec,
                            build_logical_circuit, build_repetition_memory,
                            build_surface_memory)
from tcnot.pauli import Pauli
from tcnot.sampler import (BLOCK_SIZE, dump_detection_events,
                           load_detection_events, sample, sample_arrays)


def inject_and_sample(base, injections):
    spec = replace(base.spec, p=0.0, noise="none", injections=tuple(injections))
    lc = build_logical_circuit(spec)
    dets, obs = sample_arrays(lc.circuit, 1, seed=0)
    return lc, dets[0], obs[0]


def test_noiseless_circuits_are_silent():
    for lc in (build_repetition_memory(5, 3, 0.0, noise="none"),
               build_surface_memory(3, 2, 0.0, "Z", noise="none"),
               build_surface_memory(3, 2, 0.0, "X", noise="none")):
        dets, obs = sample_arrays(lc.circuit, 300, seed=9)
        assert not dets.any()
        assert not obs.any()


def test_noiseless_multi_patch_circuits_are_silent():
    # Transversal CNOT layers keep every detector and observable
    # deterministic for both preparation bases.
    from tcnot.experiments import cell_spec
    for basis in ("Z", "X"):
        spec = replace(cell_spec("Y_FACTORY", 3, 0.0, 1, 0, basis=basis),
                       noise="none")
        lc = build_logical_circuit(spec)
        dets, obs = sample_arrays(lc.circuit, 200, seed=3)
        assert not dets.any()
        assert not obs.any()


def test_repetition_two_qubit_error_matches_figure_pattern():
    # X on q0 and q1 before the first round leaves only the q1/q2 check hot.
    base = build_repetition_memory(5, 1, 0.0, noise="none")
    lc, det, obs = inject_and_sample(
        base, [InjectedError(0, 0, 0, Pauli.X), InjectedError(0, 0, 1, Pauli.X)])
    tensor = lc.syndrome_tensor(det, 0, "Z")
    assert tensor[0].tolist() == [0, 1, 0, 0]
    assert not tensor[1:].any()
    assert obs[0] == 1  # q0 is the logical-Z qubit


def test_repetition_single_qubit_error_fires_both_neighbors():
    base = build_repetition_memory(5, 1, 0.0, noise="none")
    lc, det, obs = inject_and_sample(base, [InjectedError(0, 0, 1, Pauli.X)])
    tensor = lc.syndrome_tensor(det, 0, "Z")
    assert tensor[0].tolist() == [1, 1, 0, 0]


def test_surface_bulk_error_fires_adjacent_plaquettes():
    base = build_surface_memory(3, 2, 0.0, "Z", noise="none")
    lay = base.layout
    bulk = [q for q, checks in lay.checks_containing("Z").items()
            if len(checks) == 2]
    q = bulk[0]
    lc, det, obs = inject_and_sample(base, [InjectedError(0, 1, q, Pauli.X)])
    tensor = lc.syndrome_tensor(det, 0, "Z")
    assert sorted(np.flatnonzero(tensor[1])) == lay.checks_containing("Z")[q]
    assert not tensor[0].any() and not tensor[2:].any()


def test_z_error_fires_x_checks_only():
    base = build_surface_memory(3, 2, 0.0, "Z", noise="none")
    lay = base.layout
    q = next(q for q, checks in lay.checks_containing("X").items()
             if len(checks) == 2)
    lc, det, obs = inject_and_sample(base, [InjectedError(0, 1, q, Pauli.Z)])
    assert not lc.syndrome_tensor(det, 0, "Z").any()
    x_tensor = lc.syndrome_tensor(det, 0, "X")
    assert sorted(np.flatnonzero(x_tensor[1])) == lay.checks_containing("X")[q]


def test_signature_linearity_over_fault_pairs():
    base = build_surface_memory(3, 2, 0.0, "Z", noise="none")
    rng = np.random.default_rng(4)
    for _ in range(20):
        qa, qb = rng.integers(0, base.layout.num_data, size=2)
        sa, sb = rng.integers(0, 3, size=2)
        fa = InjectedError(0, int(sa), int(qa), Pauli.X)
        fb = InjectedError(0, int(sb), int(qb), Pauli.X)
        _, da, oa = inject_and_sample(base, [fa])
        _, db, ob = inject_and_sample(base, [fb])
        _, dab, oab = inject_and_sample(base, [fa, fb])
        assert np.array_equal(dab, da ^ db)
        assert np.array_equal(oab, oa ^ ob)


def test_injected_rate_calibration():
    # One X_ERROR(0.1) location fires its signature at 0.1 within 3 sigma.
    from tcnot.circuit import CircuitBuilder
    b = CircuitBuilder(num_qubits=2)
    b.append("X_ERROR", [0], probability=0.1)
    b.measure(0, key="m", flip_probability=0.0)
    b.detector(["m"])
    circuit = b.build()
    shots = 100_000
    dets, _ = sample_arrays(circuit, shots, seed=17)
    rate = dets.mean()
    sigma = (0.1 * 0.9 / shots) ** 0.5
    assert abs(rate - 0.1) < 3 * sigma


def test_stream_matches_arrays_and_partitioning():
    lc = build_surface_memory(3, 1, 5e-3, "Z")
    shots = BLOCK_SIZE + 700
    dets, obs = sample_arrays(lc.circuit, shots, seed=31)
    # partitioned reads reproduce the same stream
    d1, o1 = sample_arrays(lc.circuit, 900, seed=31, first_shot=0)
    d2, o2 = sample_arrays(lc.circuit, shots - 900, seed=31, first_shot=900)
    assert np.array_equal(np.concatenate([d1, d2]), dets)
    assert np.array_equal(np.concatenate([o1, o2]), obs)
    # iterator agrees with the array API
    for i, shot in enumerate(sample(lc.circuit, 40, seed=31)):
        assert np.array_equal(shot.detection_events, dets[i])
        assert np.array_equal(shot.observable_flips, obs[i])


def test_different_seeds_differ():
    lc = build_surface_memory(3, 1, 5e-3, "Z")
    a, _ = sample_arrays(lc.circuit, 500, seed=1)
    b, _ = sample_arrays(lc.circuit, 500, seed=2)
    assert not np.array_equal(a, b)


def test_dump_round_trip(tmp_path):
    lc = build_surface_memory(3, 1, 5e-3, "Z")
    dets, _ = sample_arrays(lc.circuit, 300, seed=8)
    path = tmp_path / "events.bin"
    dump_detection_events(str(path), dets)
    assert np.array_equal(load_detection_events(str(path)), dets)


def test_dump_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a detection dump")
    with pytest.raises(ValueError):
        load_detection_events(str(path))
