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

from qpde_design.block_encoding import passes
from qpde_design.design import (
    gaussian_profile,
    DesignSpace,
    TargetRegion,
    ForwardPipeline,
    landscape,
    objective_be,
    objective_table,
    objective_value,
    front_position,
)
from qpde_design.fourier_series import FourierSeries, fit_fourier
from qpde_design.diagonal_encoding import diag_be_fourier
from qpde_design.hamiltonian_simulation import evolve_exact, evolve_be, plan_evolution
from qpde_design.pde_operators import wave_demo_grid, wave_generator_matrix, prepare_initial, assemble_wave_A
from qpde_design.exceptions import (
    EmptyRegion,
    InconsistentDesignLayout,
    DimensionMismatch,
    EncodingParameterOutsideBoundaries,
)


@pytest.fixture(scope="module")
def small_forward():
    grid = wave_demo_grid(2)
    series = fit_fourier(gaussian_profile(), (2, 2))
    space = DesignSpace([("xi_x", 1, 0.0, 1.0), ("xi_y", 1, 0.0, 1.0)])
    return ForwardPipeline(series, grid, space, 0.3, 1e-8)


class TestDesignSpace:
    """
    This is a test class for the pytest module.
    It tests DesignSpace class and its property
    """

    def test_table(self):
        space = DesignSpace([("xi_x", 2, 0.0, 1.0), ("xi_y", 1, -1.0, 1.0)])
        assert space.total_qubits == 3
        assert space.size == 8
        assert space.layout == (("xi_x", 2), ("xi_y", 1))
        table = space.table()
        assert list(table.columns) == ["xi_x", "xi_y"]
        assert len(table) == 8
        # first parameter is the most significant register
        assert table.iloc[1].tolist() == [0.0, 1.0]
        assert table.iloc[2].tolist() == pytest.approx([1.0 / 3.0, -1.0])
        assert np.allclose(space.register_values("xi_x"), [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])

    def test_empty_range(self):
        with pytest.raises(ValueError):
            DesignSpace([("xi_x", 2, 1.0, 1.0)])

    def test_repeated_names(self):
        with pytest.raises(ValueError):
            DesignSpace([("xi_x", 1, 0.0, 1.0), ("xi_x", 1, 0.0, 1.0)])

    def test_m_wrong(self):
        with pytest.raises(EncodingParameterOutsideBoundaries):
            DesignSpace([("xi_x", 0, 0.0, 1.0)])

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            DesignSpace([("xi_x", 1, 0.0, 1.0)]).register_values("xi_y")


class TestTargetRegion:
    """
    This is a test class for the pytest module.
    It tests TargetRegion class and its masks
    """

    def test_rectangle(self):
        grid = wave_demo_grid(2)
        region = TargetRegion.rectangle(grid, (0.0, 0.4), (0.5, 1.0))
        assert region.indices == [(0, 2), (0, 3), (1, 2), (1, 3)]
        assert region.mask(grid).sum() == 4
        mask = region.state_mask(grid)
        assert mask.size == 64
        assert mask[:16].sum() == 4 and mask[16:].sum() == 0

    def test_component(self):
        grid = wave_demo_grid(2)
        mask = TargetRegion([(0, 0)], component=2).state_mask(grid)
        assert np.nonzero(mask)[0].tolist() == [32]
        with pytest.raises(ValueError):
            TargetRegion([(0, 0)], component=4)

    def test_empty(self):
        with pytest.raises(EmptyRegion):
            TargetRegion([])

    def test_outside(self):
        with pytest.raises(DimensionMismatch):
            TargetRegion([(4, 0)]).mask(wave_demo_grid(2))


class TestFront:
    """
    This is a test class for the pytest module.
    It tests front_position on synthetic and evolved states
    """

    def test_synthetic(self):
        grid = wave_demo_grid(2)
        amplitudes = np.zeros((4, 4, 4), dtype=complex)
        amplitudes[0, 1, :] = 0.5
        front = front_position(amplitudes.reshape(-1), grid)
        assert np.allclose(front, 1.0 - 1.0 / 3.0)

    def test_initial_stripe(self):
        grid = wave_demo_grid(3)
        front = front_position(prepare_initial(grid), grid)
        assert np.allclose(front, 1.0 - (6.0 / 7.0 + 1.0) / 2.0)

    def test_size_wrong(self):
        with pytest.raises(DimensionMismatch):
            front_position(np.zeros(8), wave_demo_grid(2))

    def test_lag_near_center(self):
        grid = wave_demo_grid(3)
        xx, yy = np.meshgrid(grid.points(0), grid.points(1), indexing="ij")
        a = wave_generator_matrix(gaussian_profile()(xx, yy), grid)
        state = evolve_exact(a, prepare_initial(grid), 1.0)
        assert state.norm() == pytest.approx(1.0, abs=1e-9)
        front = front_position(state, grid)
        slowest = grid.points(1)[int(np.argmin(front))]
        assert 1.0 / 3.0 <= slowest <= 2.0 / 3.0

    def test_lag_block_encoded(self):
        grid = wave_demo_grid(3)
        series = fit_fourier(gaussian_profile(), (3, 3))
        u_a = assemble_wave_A(diag_be_fourier(series, grid.n), grid)
        state, _ = evolve_be(u_a, prepare_initial(grid), plan_evolution(u_a.alpha, 1.0, 1e-6), method="projected")
        assert state.norm() == pytest.approx(1.0, abs=1e-9)
        front = front_position(state, grid)
        slowest = grid.points(1)[int(np.argmin(front))]
        assert 1.0 / 3.0 <= slowest <= 2.0 / 3.0


class TestForwardPipeline:
    """
    This is a test class for the pytest module.
    It tests ForwardPipeline class, the objective encoding and the landscape
    """

    def test_layout(self, small_forward):
        assert small_forward.generator.sys_qubits == 2 + 2 + 4
        assert small_forward.generator.design_layout == (("xi_x", 1), ("xi_y", 1))
        assert small_forward.plan.alpha == small_forward.generator.alpha

    def test_coefficient_sectors(self, small_forward):
        # sector (1, 0): xi_x = 1 shifts x by 1/2 - 1
        values = small_forward.coefficient_values(2)
        grid = small_forward.grid
        expected = small_forward.series.shifted(-0.5, 0.5).evaluate_grid(grid.points(0), grid.points(1)).real
        assert np.allclose(values, expected, atol=1e-12)

    def test_modes_agree(self, small_forward):
        region = TargetRegion.rectangle(small_forward.grid, (0.0, 1.0), (0.0, 0.4))
        table = landscape(small_forward, region)
        assert list(table.columns) == ["xi_x", "xi_y", "F_matrix", "F_blockenc", "success_prob"]
        assert np.max(np.abs(table["F_matrix"] - table["F_blockenc"])) <= 1e-6
        alpha_for = small_forward.evolution.alpha
        assert np.allclose(table["success_prob"], 1.0 / alpha_for**2, rtol=1e-6)

    def test_objective_encoding(self, small_forward):
        region = TargetRegion.rectangle(small_forward.grid, (0.0, 0.4), (0.0, 1.0))
        u = objective_be(small_forward, region)
        assert u.alpha == 1.0
        assert u.sys_qubits == 2
        assert u.design_layout == (("xi_x", 1), ("xi_y", 1))
        assert np.all(np.abs(u.raw_diagonal) <= 1.0 + 1e-12)
        assert passes(u, method="projected")

    def test_objective_table(self, small_forward):
        region = TargetRegion.rectangle(small_forward.grid, (0.0, 0.4), (0.0, 1.0))
        table = objective_table(small_forward, region)
        f = landscape(small_forward, region, modes=["blockenc"])["F_blockenc"]
        assert np.allclose(table["G"], f**2)
        assert np.allclose(objective_value(table["diagonal"], small_forward.evolution.alpha), f)

    def test_flat_for_constant(self):
        grid = wave_demo_grid(2)
        coefficients = np.zeros((3, 3))
        coefficients[1, 1] = 1.0
        space = DesignSpace([("xi_x", 2, 0.0, 1.0)])
        forward = ForwardPipeline(FourierSeries(coefficients), grid, space, 0.4, 1e-8)
        region = TargetRegion.rectangle(grid, (0.0, 0.7), (0.0, 1.0))
        table = landscape(forward, region)
        assert np.ptp(table["F_matrix"]) <= 1e-12
        assert np.ptp(table["F_blockenc"]) <= 1e-9

    def test_unknown_parameter(self):
        grid = wave_demo_grid(2)
        series = fit_fourier(gaussian_profile(), (1, 1))
        with pytest.raises(InconsistentDesignLayout):
            ForwardPipeline(series, grid, DesignSpace([("rho", 1, 0.0, 1.0)]), 0.1, 1e-6)

    def test_unknown_mode(self, small_forward):
        region = TargetRegion([(0, 0)])
        with pytest.raises(ValueError):
            landscape(small_forward, region, modes=["sampling"])


class TestReducedLandscape:
    """
    This is a test class for the pytest module.
    It tests the 64-cell landscape of the reduced design at 3 qubits per axis
    """

    def test_modes_agree(self):
        grid = wave_demo_grid(3)
        series = fit_fourier(gaussian_profile(), (3, 3))
        # ranges without the xi = 0 / xi = 1 pair, whose even-extended fields coincide
        space = DesignSpace([("xi_x", 3, 0.25, 0.75), ("xi_y", 3, 0.25, 0.75)])
        eps_hs = 1e-6
        forward = ForwardPipeline(series, grid, space, 1.0, eps_hs)
        region = TargetRegion.rectangle(grid, (0.0, 0.4), (0.0, 1.0))
        table = landscape(forward, region)
        assert len(table) == 64
        assert np.max(np.abs(table["F_matrix"] - table["F_blockenc"])) <= 10 * eps_hs
        assert table["F_matrix"].idxmax() == table["F_blockenc"].idxmax()
