"""
Tests
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import math

import pytest
import numpy as np
import scipy.special
from numpy.polynomial import chebyshev as cheb

from qpde_design.block_encoding import dilation_be
from qpde_design.core_linalg import StateVector, matexp
from qpde_design.design import gaussian_profile
from qpde_design.diagonal_encoding import diag_be_fourier
from qpde_design.fourier_series import fit_fourier
from qpde_design.hamiltonian_simulation import (
    bessel_sequence,
    plan_evolution,
    evolution_encoding,
    evolve_be,
    evolve_exact,
    check_anti_hermitian,
)
from qpde_design.pde_operators import wave_demo_grid, assemble_wave_A, wave_generator_matrix, prepare_initial
from qpde_design.exceptions import (
    EncodingParameterOutsideBoundaries,
    NonAntiHermitianGenerator,
    DimensionMismatch,
)


def skew_generator(seed, size=4):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    return m - m.conj().T


def random_state(seed, num_qubits):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(v / np.linalg.norm(v))


class TestBessel:
    """
    This is a test class for the pytest module.
    It tests the Bessel weights of the expansion
    """

    @pytest.mark.parametrize("z", [0.5, 5.0, 30.0])
    def test_sum_rules(self, z):
        values = bessel_sequence(z, 80)
        assert values[0] ** 2 + 2.0 * np.sum(values[1:] ** 2) == pytest.approx(1.0, abs=1e-12)
        assert values[0] + 2.0 * np.sum(values[2::2]) == pytest.approx(1.0, abs=1e-12)
        assert values[1] == pytest.approx(scipy.special.j1(z), abs=1e-14)

    def test_zero_argument(self):
        assert np.array_equal(bessel_sequence(0.0, 3), [1.0, 0.0, 0.0, 0.0])


class TestEvolutionPlan:
    """
    This is a test class for the pytest module.
    It tests EvolutionPlan class, the truncation order and the coefficients
    """

    def test_zero_time(self):
        plan = plan_evolution(3.0, 0.0, 1e-6)
        assert plan.R == 0
        assert plan.tail == 0.0
        assert np.allclose(plan.coefficients, [1.0])

    @pytest.mark.parametrize("alpha, t, eps", [(1.0, 1.0, 1e-6), (6.0, 2.5, 1e-8), (40.0, 0.5, 1e-4)])
    def test_order(self, alpha, t, eps):
        plan = plan_evolution(alpha, t, eps)
        z = alpha * t
        floor_order = math.ceil(math.e * z / 2.0)
        assert plan.R >= floor_order
        assert plan.tail <= eps
        if plan.R > floor_order:
            # one order less would exceed the target
            tail = 2.0 * np.sum(np.abs(scipy.special.jv(np.arange(plan.R, plan.R + 200), z)))
            assert tail > eps

    def test_jacobi_anger(self):
        plan = plan_evolution(2.0, 1.5, 1e-10)
        x = np.linspace(-1.0, 1.0, 101)
        approx = cheb.chebval(x, plan.coefficients)
        assert np.max(np.abs(approx - np.exp(-1j * plan.alpha_tau * x))) <= plan.tail + 1e-12

    def test_parameters_wrong(self):
        with pytest.raises(EncodingParameterOutsideBoundaries):
            plan_evolution(1.0, 1.0, 0.0)
        with pytest.raises(EncodingParameterOutsideBoundaries):
            plan_evolution(1.0, -1.0, 1e-6)
        with pytest.raises(EncodingParameterOutsideBoundaries):
            plan_evolution(0.0, 1.0, 1e-6)


class TestEvolve:
    """
    This is a test class for the pytest module.
    It tests evolve_be against the dense exponential
    """

    @pytest.mark.parametrize("method", ["projected", "circuit"])
    def test_small_generator(self, method):
        a = skew_generator(0)
        u = dilation_be(a)
        w0 = random_state(1, 2)
        plan = plan_evolution(u.alpha, 0.7, 1e-9)
        out, prob = evolve_be(u, w0, plan, method=method)
        exact = evolve_exact(a, w0, 0.7)
        assert exact.norm() == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(out.amplitudes - exact.amplitudes) <= 1e-6
        e = evolution_encoding(u, plan)
        assert prob == pytest.approx(1.0 / e.alpha**2, rel=1e-6)

    def test_evolution_encoding_metadata(self):
        u = dilation_be(skew_generator(2))
        plan = plan_evolution(u.alpha, 0.3, 1e-8)
        e = evolution_encoding(u, plan)
        assert e.alpha == pytest.approx(np.sum(np.abs(plan.coefficients)))
        assert e.sys_qubits == u.sys_qubits

    def test_zero_time_identity(self):
        u = dilation_be(skew_generator(3))
        w0 = random_state(4, 2)
        out, prob = evolve_be(u, w0, plan_evolution(u.alpha, 0.0, 1e-8), method="projected")
        assert np.allclose(out.amplitudes, w0.amplitudes, atol=1e-12)
        assert prob == pytest.approx(1.0)

    def test_wave_demo(self):
        grid = wave_demo_grid(2)
        series = fit_fourier(gaussian_profile(), (2, 2))
        u_a = assemble_wave_A(diag_be_fourier(series, grid.n), grid)
        plan = plan_evolution(u_a.alpha, 0.5, 1e-8)
        w0 = prepare_initial(grid)
        out, _ = evolve_be(u_a, w0, plan, method="projected")
        c_values = series.evaluate_grid(grid.points(0), grid.points(1))
        exact = evolve_exact(wave_generator_matrix(c_values, grid), w0, 0.5)
        assert np.linalg.norm(out.amplitudes - exact.amplitudes) <= 1e-6
        assert out.layout == w0.layout

    def test_wave_demo_reduced(self):
        grid = wave_demo_grid(3)
        series = fit_fourier(gaussian_profile(), (3, 3))
        u_a = assemble_wave_A(diag_be_fourier(series, grid.n), grid)
        plan = plan_evolution(u_a.alpha, 1.0, 1e-6)
        w0 = prepare_initial(grid)
        out, _ = evolve_be(u_a, w0, plan, method="projected")
        c_values = series.evaluate_grid(grid.points(0), grid.points(1))
        exact = evolve_exact(wave_generator_matrix(c_values, grid), w0, 1.0)
        assert np.linalg.norm(out.amplitudes - exact.amplitudes) <= 1.5e-6
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-9)

    def test_not_anti_hermitian(self):
        m = skew_generator(5)
        u = dilation_be(1j * m)
        with pytest.raises(NonAntiHermitianGenerator):
            check_anti_hermitian(u)
        with pytest.raises(NonAntiHermitianGenerator):
            evolve_be(u, random_state(6, 2), plan_evolution(u.alpha, 0.1, 1e-6))

    def test_alpha_mismatch(self):
        u = dilation_be(skew_generator(7))
        with pytest.raises(DimensionMismatch):
            evolve_be(u, random_state(8, 2), plan_evolution(2.0 * u.alpha, 0.1, 1e-6))

    def test_exact_matches_matexp(self):
        a = skew_generator(9)
        w0 = random_state(10, 2)
        assert np.allclose(evolve_exact(a, w0, 0.4).amplitudes, matexp(-a, 0.4) @ w0.amplitudes)
