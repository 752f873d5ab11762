"""
Tests
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import pytest
import numpy as np
import scipy.stats

from qpde_design import statevector as sv
from qpde_design.core_linalg import StateVector
from qpde_design.exceptions import RegisterSliceMismatch, AmplitudeVanished


def random_state(rng, num_qubits, layout=None):
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(v / np.linalg.norm(v), layout)


def embed(gate, targets, num_qubits):
    """
    Dense embedding of a gate on contiguous targets, qubit 0 most significant
    """
    before = 2 ** targets[0]
    after = 2 ** (num_qubits - targets[-1] - 1)
    return np.kron(np.kron(np.eye(before), gate), np.eye(after))


class TestActionNode:
    """
    This is a test class for the pytest module.
    It tests the node factories and apply against dense matrices
    """

    def test_zero_phases_identity(self):
        rng = np.random.default_rng(0)
        psi = random_state(rng, 3)
        out = sv.apply(sv.phase_diag((0, 1), np.zeros(4)), psi)
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-14)

    def test_cyclic_shift_basis(self):
        psi = StateVector.basis([("x", 3)], {"x": 5})
        out = sv.apply(sv.cyclic_shift((0, 1, 2), 1), psi)
        assert np.argmax(np.abs(out.amplitudes)) == 6
        out = sv.apply(sv.cyclic_shift((0, 1, 2), 1), StateVector.basis([("x", 3)], {"x": 7}))
        assert np.argmax(np.abs(out.amplitudes)) == 0

    def test_flip_most_significant(self):
        psi = StateVector.basis([("q", 2)], {"q": 0})
        out = sv.apply(sv.flip(0), psi)
        assert np.argmax(np.abs(out.amplitudes)) == 2

    def test_unitary_on_middle_qubits(self):
        rng = np.random.default_rng(1)
        gate = scipy.stats.unitary_group.rvs(4, random_state=3)
        node = sv.unitary((1, 2), gate)
        dense = embed(gate, (1, 2), 4)
        assert np.allclose(sv.node_matrix(node, 4), dense, atol=1e-12)
        psi = random_state(rng, 4)
        assert np.allclose(sv.apply(node, psi).amplitudes, dense @ psi.amplitudes, atol=1e-12)

    def test_random_composition(self):
        rng = np.random.default_rng(2)
        g1 = scipy.stats.unitary_group.rvs(4, random_state=5)
        g2 = scipy.stats.unitary_group.rvs(2, random_state=6)
        angles = rng.uniform(0, 2 * np.pi, 8)
        node = sv.compose(
            [
                sv.unitary((0, 1), g1),
                sv.phase_diag((3, 4, 5), angles),
                sv.controlled((0,), (1,), sv.unitary((2,), g2)),
                sv.cyclic_shift((4, 5), -1),
            ]
        )
        shift = np.roll(np.eye(4), -1, axis=0)
        # control on qubit 0, target on qubit 2, qubit 1 idle
        controlled = np.kron(np.diag([1.0, 0.0]), np.eye(4)) + np.kron(np.diag([0.0, 1.0]), np.kron(np.eye(2), g2))
        dense = (
            embed(shift, (4, 5), 6)
            @ embed(controlled, (0, 1, 2), 6)
            @ embed(np.diag(np.exp(1j * angles)), (3, 4, 5), 6)
            @ embed(g1, (0, 1), 6)
        )
        assert np.allclose(sv.node_matrix(node, 6), dense, atol=1e-10)

    def test_adjoint_inverts(self):
        rng = np.random.default_rng(3)
        node = sv.compose(
            [sv.unitary((0, 2), scipy.stats.unitary_group.rvs(4, random_state=7)), sv.cyclic_shift((1, 2), 3)]
        )
        psi = random_state(rng, 3)
        out = sv.apply(sv.adjoint(node), sv.apply(node, psi))
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-12)

    def test_select(self):
        g = [scipy.stats.unitary_group.rvs(2, random_state=s) for s in (8, 9)]
        node = sv.select((0,), [sv.unitary((1,), g[0]), sv.unitary((1,), g[1])])
        dense = np.kron(np.diag([1.0, 0.0]), g[0]) + np.kron(np.diag([0.0, 1.0]), g[1])
        assert np.allclose(sv.node_matrix(node, 2), dense, atol=1e-12)

    def test_reflection(self):
        dense = sv.node_matrix(sv.reflection((0, 1)), 2)
        assert np.allclose(dense, np.diag([1.0, -1.0, -1.0, -1.0]))
        mask = np.array([False, True, True, False])
        dense = sv.node_matrix(sv.reflection((0, 1), mask), 2)
        assert np.allclose(dense, np.diag([-1.0, 1.0, 1.0, -1.0]))

    def test_norm_and_linearity(self):
        rng = np.random.default_rng(4)
        node = sv.compose(
            [sv.unitary((0, 1, 2), scipy.stats.unitary_group.rvs(8, random_state=10)), sv.flip(3)]
        )
        psi, phi = random_state(rng, 4), random_state(rng, 4)
        a, b = 0.3 - 0.2j, 1.1 + 0.5j
        left = sv.apply_array(node, a * psi.amplitudes + b * phi.amplitudes, 4)
        right = a * sv.apply(node, psi).amplitudes + b * sv.apply(node, phi).amplitudes
        assert np.allclose(left, right, atol=1e-12)
        assert sv.apply(node, psi).norm() == pytest.approx(1.0, abs=1e-12)

    def test_partitioning_deterministic(self):
        rng = np.random.default_rng(5)
        node = sv.unitary((1, 2), scipy.stats.unitary_group.rvs(4, random_state=11))
        block = rng.normal(size=(16, 7)) + 0j
        single = sv.apply_array(node, block, 4)
        threaded = sv.apply_array(node, block, 4, workers=3)
        assert np.array_equal(single, threaded)

    def test_slice_outside(self):
        psi = StateVector.basis([("q", 2)], {})
        with pytest.raises(RegisterSliceMismatch):
            sv.apply(sv.flip(2), psi)

    def test_controls_overlap(self):
        with pytest.raises(RegisterSliceMismatch):
            sv.controlled((0,), (1,), sv.flip(0))


class TestProjectZeroAncilla:
    """
    This is a test class for the pytest module.
    It tests project_zero_ancilla probabilities and layouts
    """

    def test_already_zero(self):
        psi = StateVector.basis([("anc", 2), ("sys", 2)], {"sys": 3})
        out, prob = sv.project_zero_ancilla(psi, "anc")
        assert prob == pytest.approx(1.0)
        assert out.layout == [("sys", 2)]

    def test_uniform_ancilla(self):
        amplitudes = np.zeros(2**5, dtype=complex)
        # uniform over 3 ancilla qubits, system in |01>
        for a in range(8):
            amplitudes[(a << 2) | 1] = 1.0 / np.sqrt(8.0)
        psi = StateVector(amplitudes, [("anc", 3), ("sys", 2)])
        out, prob = sv.project_zero_ancilla(psi, "anc")
        assert prob == pytest.approx(2.0**-3)
        assert np.allclose(out.amplitudes, [0.0, 1.0, 0.0, 0.0])

    def test_random_matches_projector(self):
        rng = np.random.default_rng(6)
        psi = random_state(rng, 5, [("anc", 2), ("sys", 3)])
        projector = np.kron(np.diag([1.0, 0.0, 0.0, 0.0]), np.eye(8))
        expected = np.linalg.norm(projector @ psi.amplitudes) ** 2
        _, prob = sv.project_zero_ancilla(psi, "anc")
        assert prob == pytest.approx(expected, rel=1e-12)

    def test_vanished(self):
        psi = StateVector.basis([("anc", 1), ("sys", 1)], {"anc": 1})
        with pytest.raises(AmplitudeVanished):
            sv.project_zero_ancilla(psi, "anc")
