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
from numpy.polynomial import chebyshev as cheb

from qpde_design.block_encoding import (
    StatePreparationPair,
    identity_be,
    scalar_identity_be,
    dilation_be,
    extend_system,
    pad_ancillas,
    scale_phase,
    as_oracle,
    product,
    lcu,
    selector_offdiag,
    selector_offdiag_shared,
    selector_projector,
    adjoint,
    controlled,
    chebyshev,
    chebyshev_lcu,
    materialize_block,
    unitarity_deviation,
    verify,
    passes,
)
from qpde_design.exceptions import (
    ZeroSubnormalization,
    EmptyTermList,
    ZeroNormCoefficients,
    InvalidSelectorIndex,
    IncompatibleBlockEncodings,
    NonHermitianReference,
    DimensionMismatch,
    MaterializationTooLarge,
    VerificationFailure,
    EncodingParameterOutsideBoundaries,
)


def random_matrix(rng, n, hermitian=False):
    m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    return (m + m.conj().T) / 2 if hermitian else m


def random_encoding(rng, n, label="B", alpha=None):
    return dilation_be(random_matrix(rng, n), alpha=alpha, label=label)


class TestBlockEncoding:
    """
    This is a test class for the pytest module.
    It tests BlockEncoding properties and the elementary encodings
    """

    def test_identity(self):
        u = identity_be(2)
        assert u.triple == (1.0, 0, 0.0)
        assert np.allclose(materialize_block(u, method="circuit"), np.eye(4))

    def test_scalar_identity(self):
        u = scalar_identity_be(2, 0.25)
        assert u.alpha == pytest.approx(4.0)
        assert np.allclose(materialize_block(u, method="circuit"), np.eye(4), atol=1e-12)

    def test_alpha_zero(self):
        u = identity_be(1)
        with pytest.raises(ZeroSubnormalization):
            u.alpha = 0.0

    def test_alpha_wrong_type(self):
        u = identity_be(1)
        with pytest.raises(TypeError):
            u.alpha = "fd"

    def test_negative_eps(self):
        u = identity_be(1)
        with pytest.raises(EncodingParameterOutsideBoundaries):
            u.eps = -1.0

    def test_dilation(self):
        rng = np.random.default_rng(0)
        b = random_matrix(rng, 2)
        u = dilation_be(b)
        assert u.ancillas == 1 and u.eps == 0.0
        assert np.allclose(materialize_block(u, method="circuit"), b, atol=1e-10)
        assert unitarity_deviation(u) < 1e-10

    def test_dilation_alpha_too_small(self):
        with pytest.raises(EncodingParameterOutsideBoundaries):
            dilation_be(np.diag([2.0, 1.0]), alpha=1.0)

    def test_materialization_cap(self):
        with pytest.raises(MaterializationTooLarge):
            materialize_block(identity_be(4), cap=8)


class TestStructural:
    """
    This is a test class for the pytest module.
    It tests extend_system, pad_ancillas, scale_phase and as_oracle
    """

    def test_extend_system(self):
        rng = np.random.default_rng(1)
        b = random_matrix(rng, 1)
        u = extend_system(dilation_be(b), leading=1, trailing=1)
        assert u.sys_qubits == 3
        expected = np.kron(np.kron(np.eye(2), b), np.eye(2))
        assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-10)
        assert np.allclose(u.reference, expected)

    def test_pad_ancillas(self):
        rng = np.random.default_rng(2)
        b = random_matrix(rng, 1)
        u = pad_ancillas(dilation_be(b), 3)
        assert u.ancillas == 3
        assert np.allclose(materialize_block(u, method="circuit"), b, atol=1e-10)
        with pytest.raises(DimensionMismatch):
            pad_ancillas(u, 1)

    def test_scale_phase(self):
        rng = np.random.default_rng(3)
        b = random_matrix(rng, 1)
        u = scale_phase(dilation_be(b), -1j)
        assert np.allclose(materialize_block(u, method="circuit"), -1j * b, atol=1e-10)
        with pytest.raises(EncodingParameterOutsideBoundaries):
            scale_phase(dilation_be(b), 2.0)

    def test_as_oracle(self):
        u = as_oracle(identity_be(1), "U_test")
        assert u.counters == {"U_test": 1}


class TestProduct:
    """
    This is a test class for the pytest module.
    It tests product metadata and its block
    """

    def test_product_metadata(self):
        rng = np.random.default_rng(4)
        u_a = random_encoding(rng, 2, "A", alpha=3.0).replace(eps=0.01)
        u_b = random_encoding(rng, 2, "B", alpha=5.0).replace(eps=0.02)
        u = product(u_a, u_b)
        assert u.alpha == 15.0
        assert u.ancillas == 2
        assert u.eps == 3.0 * 0.02 + 5.0 * 0.01

    def test_product_block(self):
        rng = np.random.default_rng(5)
        a, b = random_matrix(rng, 2), random_matrix(rng, 2)
        u = product(dilation_be(a), dilation_be(b))
        assert np.allclose(materialize_block(u, method="circuit"), a @ b, atol=1e-9)
        assert np.allclose(materialize_block(u, method="projected"), a @ b, atol=1e-9)
        assert passes(u, a @ b)

    def test_product_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            product(identity_be(1), identity_be(2))


class TestLCU:
    """
    This is a test class for the pytest module.
    It tests StatePreparationPair and lcu metadata and blocks
    """

    def test_lcu_metadata(self):
        rng = np.random.default_rng(6)
        terms = [random_encoding(rng, 1, f"B{j}", alpha=2.0).replace(eps=0.001) for j in range(3)]
        y = [0.5, -1.0, 0.25]
        u = lcu(StatePreparationPair(y), terms)
        assert u.alpha == 2.0 * 1.75
        assert u.ancillas == 1 + 2
        assert u.eps == pytest.approx(0.001 * 1.75, rel=1e-15)

    def test_lcu_block(self):
        rng = np.random.default_rng(7)
        mats = [random_matrix(rng, 2) for _ in range(3)]
        y = [0.3, -0.7 + 0.2j, 1.1]
        u = lcu(StatePreparationPair(y), [dilation_be(m, alpha=20.0) for m in mats])
        expected = sum(c * m for c, m in zip(y, mats))
        assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-9)
        assert unitarity_deviation(u) < 1e-10

    def test_lcu_unequal_alpha(self):
        rng = np.random.default_rng(8)
        mats = [random_matrix(rng, 1) for _ in range(3)]
        terms = [dilation_be(m, alpha=a) for m, a in zip(mats, (4.0, 8.0, 16.0))]
        y = [1.0, 0.5, -2.0]
        u = lcu(StatePreparationPair(y), terms)
        assert u.alpha == 16.0 * 3.5
        expected = sum(c * m for c, m in zip(y, mats))
        assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-9)

    def test_lcu_empty(self):
        with pytest.raises(EmptyTermList):
            lcu(StatePreparationPair([1.0]), [])

    def test_prep_zero_norm(self):
        with pytest.raises(ZeroNormCoefficients):
            StatePreparationPair([0.0, 0.0])

    def test_prep_empty(self):
        with pytest.raises(EmptyTermList):
            StatePreparationPair([])

    def test_prep_products(self):
        prep = StatePreparationPair([1.0, -2.0, 1j])
        assert np.allclose(prep.products, np.array([1.0, -2.0, 1j]) / 4.0)
        assert np.allclose(prep.prep_left.conj().T @ prep.prep_left, np.eye(4), atol=1e-12)


class TestSelectors:
    """
    This is a test class for the pytest module.
    It tests selector_offdiag, selector_offdiag_shared and selector_projector
    """

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_offdiag_all_indices(self, k):
        rng = np.random.default_rng(10 + k)
        a1, a2 = random_matrix(rng, 1), random_matrix(rng, 1)
        u1, u2 = dilation_be(a1, alpha=10.0), dilation_be(a2, alpha=10.0)
        for j in range(1, 2**k):
            u = selector_offdiag(j, u1, u2, k)
            expected = np.zeros((2 ** (k + 1), 2 ** (k + 1)), dtype=complex)
            expected[0:2, 2 * j : 2 * j + 2] = a1
            expected[2 * j : 2 * j + 2, 0:2] = a2
            assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-10)
            assert u.toffolis == 4 * (4 * k - 2)

    def test_offdiag_unequal_alpha(self):
        with pytest.raises(IncompatibleBlockEncodings):
            selector_offdiag(1, dilation_be(np.eye(2), alpha=2.0), dilation_be(np.eye(2), alpha=3.0), 1)

    def test_offdiag_bad_index(self):
        u = identity_be(1)
        with pytest.raises(InvalidSelectorIndex):
            selector_offdiag(0, u, u, 2)
        with pytest.raises(InvalidSelectorIndex):
            selector_offdiag(4, u, u, 2)

    def test_offdiag_metadata(self):
        u1 = dilation_be(np.eye(2), alpha=2.0).replace(eps=0.1)
        u2 = pad_ancillas(dilation_be(np.eye(2), alpha=2.0), 2).replace(eps=0.2)
        u = selector_offdiag(1, u1, u2, 1)
        assert u.triple == (2.0, 2, 0.2)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_shared(self, sign):
        rng = np.random.default_rng(20)
        a = random_matrix(rng, 1)
        u = selector_offdiag_shared(2, dilation_be(a, alpha=10.0), 2, sign=sign)
        expected = np.zeros((8, 8), dtype=complex)
        expected[0:2, 4:6] = a
        expected[4:6, 0:2] = sign * a
        assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-10)
        assert u.counters == dilation_be(a).counters

    def test_projector(self):
        rng = np.random.default_rng(21)
        a = random_matrix(rng, 1)
        for j in range(4):
            u = selector_projector(j, dilation_be(a, alpha=10.0), 2)
            expected = np.zeros((8, 8), dtype=complex)
            expected[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = a
            assert np.allclose(materialize_block(u, method="circuit"), expected, atol=1e-10)


class TestAdjointControlled:
    """
    This is a test class for the pytest module.
    It tests adjoint and controlled encodings
    """

    def test_adjoint(self):
        rng = np.random.default_rng(30)
        b = random_matrix(rng, 2)
        u = adjoint(as_oracle(dilation_be(b), "U_b"))
        assert u.counters == {"U_b^dagger": 1}
        assert np.allclose(materialize_block(u, method="circuit"), b.conj().T, atol=1e-10)
        assert adjoint(u).counters == {"U_b": 1}

    def test_controlled(self):
        rng = np.random.default_rng(31)
        b = random_matrix(rng, 1)
        u = dilation_be(b, alpha=5.0)
        c = controlled(u)
        expected = np.kron(np.diag([1.0, 0.0]), 5.0 * np.eye(2)) + np.kron(np.diag([0.0, 1.0]), b)
        assert np.allclose(materialize_block(c, method="circuit"), expected, atol=1e-10)
        assert np.allclose(c.reference, expected)


class TestChebyshev:
    """
    This is a test class for the pytest module.
    It tests the Chebyshev iterates and their linear combination
    """

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5])
    def test_chebyshev_circuit(self, k):
        rng = np.random.default_rng(40)
        h = random_matrix(rng, 2, hermitian=True)
        u = dilation_be(h)
        t = chebyshev(u, k)
        evals, evecs = np.linalg.eigh(h / u.alpha)
        expected = (evecs * cheb.chebval(evals, [0] * k + [1])) @ evecs.conj().T
        assert np.allclose(materialize_block(t, method="circuit"), expected, atol=1e-9)
        assert np.allclose(materialize_block(t, method="projected"), expected, atol=1e-9)
        assert t.alpha == 1.0 and t.ancillas == u.ancillas + 1

    def test_chebyshev_counters(self):
        u = as_oracle(dilation_be(np.diag([0.5, -0.25])), "U_h")
        t = chebyshev(u, 5)
        assert t.counters == {"U_h": 3, "U_h^dagger": 2}

    def test_chebyshev_non_hermitian(self):
        with pytest.raises(NonHermitianReference):
            chebyshev(dilation_be(np.array([[0.0, 1.0], [0.0, 0.0]])), 2)

    def test_chebyshev_lcu(self):
        rng = np.random.default_rng(41)
        h = random_matrix(rng, 1, hermitian=True)
        u = dilation_be(h)
        coefficients = np.array([0.5, -0.25j, 0.125, 0.3])
        v = chebyshev_lcu(u, coefficients)
        evals, evecs = np.linalg.eigh(h / u.alpha)
        expected = (evecs * cheb.chebval(evals, coefficients)) @ evecs.conj().T
        assert np.allclose(materialize_block(v, method="projected"), expected, atol=1e-9)
        assert np.allclose(materialize_block(v, method="circuit"), expected, atol=1e-9)


class TestVerify:
    """
    This is a test class for the pytest module.
    It tests verify against references, strict failures and a randomized soundness suite
    """

    def test_verify_corrupted_alpha(self):
        rng = np.random.default_rng(50)
        b = random_matrix(rng, 2)
        u = dilation_be(b)
        assert verify(u) < 1e-10
        bad = u.replace(alpha=2.0 * u.alpha)
        assert not passes(bad)
        with pytest.raises(VerificationFailure):
            verify(bad, strict=True)

    def test_verify_without_reference(self):
        u = identity_be(1).replace(reference=None)
        with pytest.raises(VerificationFailure):
            verify(u)

    def test_random_soundness(self):
        rng = np.random.default_rng(51)
        selectors = set()
        for trial in range(250):
            n = int(rng.integers(1, 3))
            a = dilation_be(random_matrix(rng, n), alpha=8.0 * 2**n)
            b = dilation_be(random_matrix(rng, n), alpha=8.0 * 2**n)
            kind = trial % 5
            if kind == 0:
                u = product(a, b)
            elif kind == 1:
                u = lcu(StatePreparationPair(rng.normal(size=3)), [a, b, adjoint(a)])
            elif kind == 2:
                k = int(rng.integers(1, 4))
                j = int(rng.integers(1, 2**k))
                selectors.add((j, k))
                u = selector_offdiag(j, a, b, k)
            elif kind == 3:
                u = controlled(a)
            else:
                h = dilation_be(random_matrix(rng, n, hermitian=True))
                u = chebyshev(h, int(rng.integers(0, 5)))
            assert u.num_qubits <= 10
            assert verify(u, method="circuit") <= u.eps + 1e-10
        assert {k for _, k in selectors} == {1, 2, 3}
