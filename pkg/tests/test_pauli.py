import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcnot.pauli import (FrameSizeError, InvalidGateError, Pauli, PauliFrame,
                         conjugate_through_cnot, conjugate_through_h,
                         frame_xor, pauli_from_bits)


def single(n, q, p):
    return PauliFrame.from_pauli(n, q, p)


def test_composition_table_closed():
    for a, b in itertools.product(Pauli, repeat=2):
        c = a * b
        assert isinstance(c, Pauli)
    assert Pauli.X * Pauli.Z == Pauli.Y
    assert Pauli.Z * Pauli.X == Pauli.Y
    assert Pauli.Y * Pauli.Y == Pauli.I


def test_frame_xor_self_inverse():
    f = single(4, 0, Pauli.X)
    assert frame_xor(f, f).is_identity()


def test_frame_xor_group_law_x_z_gives_y():
    f = frame_xor(single(4, 0, Pauli.X), single(4, 0, Pauli.Z))
    assert f.pauli_at(0) == Pauli.Y


def test_frame_xor_disjoint_support():
    f = frame_xor(single(4, 1, Pauli.X), single(4, 3, Pauli.X))
    assert f.pauli_at(1) == Pauli.X
    assert f.pauli_at(3) == Pauli.X
    assert f.pauli_at(0) == Pauli.I


def test_frame_xor_size_mismatch():
    with pytest.raises(FrameSizeError):
        frame_xor(PauliFrame(3), PauliFrame(4))


def test_cnot_spreads_x_control_to_target():
    f = conjugate_through_cnot(single(2, 0, Pauli.X), 0, 1)
    assert f.pauli_at(0) == Pauli.X
    assert f.pauli_at(1) == Pauli.X


def test_cnot_spreads_z_target_to_control():
    f = conjugate_through_cnot(single(2, 1, Pauli.Z), 0, 1)
    assert f.pauli_at(0) == Pauli.Z
    assert f.pauli_at(1) == Pauli.Z


def test_cnot_leaves_x_on_target_alone():
    f = conjugate_through_cnot(single(2, 1, Pauli.X), 0, 1)
    assert f.pauli_at(0) == Pauli.I
    assert f.pauli_at(1) == Pauli.X


def test_cnot_rejects_equal_control_target():
    with pytest.raises(InvalidGateError):
        conjugate_through_cnot(PauliFrame(2), 1, 1)


def test_cnot_self_inverse_on_all_two_qubit_frames():
    for pa, pb in itertools.product(Pauli, repeat=2):
        f = frame_xor(single(2, 0, pa), single(2, 1, pb))
        g = conjugate_through_cnot(conjugate_through_cnot(f, 0, 1), 0, 1)
        assert g == f


def test_h_swaps_x_and_z():
    assert conjugate_through_h(single(2, 0, Pauli.X), 0).pauli_at(0) == Pauli.Z
    assert conjugate_through_h(single(2, 0, Pauli.Y), 0).pauli_at(0) == Pauli.Y
    assert conjugate_through_h(PauliFrame(2), 0).is_identity()


@st.composite
def frames(draw, n=4):
    paulis = draw(st.lists(st.sampled_from(list(Pauli)), min_size=n, max_size=n))
    x = np.array([p.x_bit for p in paulis], dtype=np.uint8)
    z = np.array([p.z_bit for p in paulis], dtype=np.uint8)
    return PauliFrame(x_bits=x, z_bits=z)


@given(frames(), frames())
def test_cnot_conjugation_is_group_homomorphism(a, b):
    lhs = conjugate_through_cnot(frame_xor(a, b), 0, 1)
    rhs = frame_xor(conjugate_through_cnot(a, 0, 1),
                    conjugate_through_cnot(b, 0, 1))
    assert lhs == rhs


@given(frames(), frames(), st.integers(min_value=0, max_value=3))
def test_h_conjugation_is_group_homomorphism(a, b, q):
    lhs = conjugate_through_h(frame_xor(a, b), q)
    rhs = frame_xor(conjugate_through_h(a, q), conjugate_through_h(b, q))
    assert lhs == rhs


def test_pauli_from_bits_round_trip():
    for p in Pauli:
        assert pauli_from_bits(p.x_bit, p.z_bit) == p
