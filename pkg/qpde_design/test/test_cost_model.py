"""
Tests
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

from collections import Counter

import pytest
import numpy as np

from qpde_design.cost_model import (
    OracleTriple,
    squaring_alternatives,
    predict_A2nd,
    predict_A1st,
    reconcile,
    scaling_features,
    register_features,
    gate_sweep,
    gate_scaling_check,
    k_for_error,
)
from qpde_design.diagonal_encoding import diag_be_fourier
from qpde_design.fourier_series import FourierSeries, Analytic, Differentiable, truncation_degree
from qpde_design.pde_operators import GridSpec, CoefficientSet1st, assemble_A1st, diff_be
from qpde_design.exceptions import (
    DegenerateSweep,
    InvalidSmoothness,
    EncodingParameterOutsideBoundaries,
)


class TestPredictions:
    """
    This is a test class for the pytest module.
    It tests the closed-form cost expressions
    """

    def test_triple_wrong(self):
        with pytest.raises(EncodingParameterOutsideBoundaries):
            OracleTriple(0.0, 1, 0.0)
        with pytest.raises(EncodingParameterOutsideBoundaries):
            OracleTriple(1.0, 1, -1e-3)

    def test_A2nd_defaults(self):
        report = predict_A2nd({}, 2)
        assert report.predicted_triple == (4, 1, 0.0)
        assert report.query_counts["U_inv_sqrt_rho"] == 6
        assert report.query_counts["U_D+"] == 2

    def test_A2nd(self):
        meta = {
            "inv_sqrt_rho": (2.0, 1, 0.01),
            "sqrt_kappa": (3.0, 2, 0.02),
            "zeta": (1.5, 1, 0.0),
            "sqrt_gamma": (0.5, 1, 0.04),
            "D": OracleTriple(6.0, 1, 0.0),
        }
        alpha, ancillas, eps = predict_A2nd(meta, 2).predicted_triple
        assert alpha == pytest.approx(144.0)
        assert ancillas == 5
        assert eps == pytest.approx(4.8)

    def test_A1st(self):
        meta = {"kappa": (2.0, 1, 0.01), "beta": (1.0, 1, 0.02), "gamma": (0.5, 0, 0.03), "D": (4.0, 1, 0.0)}
        report = predict_A1st(meta, 1)
        alpha, ancillas, eps = report.predicted_triple
        assert alpha == pytest.approx(128.0)
        assert ancillas == 6
        assert eps == pytest.approx(0.64)
        assert report.query_counts == Counter(
            {"U_kappa": 2, "U_beta+": 1, "U_beta-": 1, "U_gamma": 1, "U_D+": 3, "U_D-": 3}
        )

    def test_squaring(self):
        table = squaring_alternatives((2.0, 1, 0.01), (1.5, 1, 0.02)).set_index("method")
        assert table.loc["singular_value", "ancillas"] == 2
        assert table.loc["singular_value", "eps"] == pytest.approx(0.8)
        assert table.loc["singular_value", "zeta_term_eps"] == pytest.approx(1.28)
        assert table.loc["product", "ancillas"] == 2
        assert table.loc["product", "eps"] == pytest.approx(0.04)
        assert table.loc["product", "zeta_term_eps"] == pytest.approx(0.14)
        assert (table["alpha"] == 4.0).all()


class TestReconcile:
    """
    This is a test class for the pytest module.
    It tests reconcile against the A1st construction
    """

    def build(self, with_beta=True):
        grid = GridSpec(1, 2, "periodic")
        kappa = diag_be_fourier(FourierSeries([0.1, 0.5, 0.1], dims=1), grid.n, label="C_kappa")
        gamma = diag_be_fourier(FourierSeries([0.0, 0.2, 0.0], dims=1), grid.n, label="C_gamma")
        beta_plus = diag_be_fourier(FourierSeries([0.0, 0.4, 0.0], dims=1), grid.n, label="C_beta+")
        beta_minus = diag_be_fourier(FourierSeries([0.0, -0.3, 0.0], dims=1), grid.n, label="C_beta-")
        if with_beta:
            coefficients = CoefficientSet1st(kappa, [beta_plus], [beta_minus], gamma)
        else:
            coefficients = CoefficientSet1st(kappa, gamma=gamma)
        meta = {
            "kappa": OracleTriple.from_encoding(kappa),
            "beta": OracleTriple.from_encoding(beta_plus),
            "gamma": OracleTriple.from_encoding(gamma),
            "D": OracleTriple.from_encoding(diff_be(0, "+", grid, alpha=2.0 / grid.h[0])),
        }
        return assemble_A1st(coefficients, grid), meta

    def test_counts_match(self):
        a, meta = self.build()
        report = reconcile(predict_A1st(meta, 1), a)
        assert report.counts_match
        assert report.construction_triple[0] == pytest.approx(report.predicted_triple[0])
        assert report.construction_triple[1] == report.predicted_triple[1]
        assert report.gate_count == a.gate_count
        frame = report.to_frame()
        assert list(frame.columns) == ["quantity", "predicted", "measured", "note"]
        assert "queries U_kappa" in frame["quantity"].tolist()

    def test_counts_differ(self):
        a, meta = self.build(with_beta=False)
        report = reconcile(predict_A1st(meta, 1), a)
        assert not report.counts_match

    def test_not_reconciled(self):
        assert not predict_A1st({}, 1).counts_match


class TestGateScaling:
    """
    This is a test class for the pytest module.
    It tests the gate sweep and its fit
    """

    def test_features(self):
        features = scaling_features([2], [1], [6])
        assert np.allclose(features, [[2.0, 12.0 * np.log2(3.0), 36.0]])
        exact = register_features([2], [1], [6])
        assert np.allclose(exact, [[1.0, 18.0, 24.0, 36.0]])

    def test_fit_passes(self):
        sweep = gate_sweep(seed=3)
        assert len(sweep) == 2 * 4 * 4
        fit = gate_scaling_check(sweep)
        assert fit["d"].tolist() == [1, 2]
        assert fit["passed"].all()
        assert (fit[["a1", "a2", "a3"]].values >= 0).all()
        assert (fit["residual"] <= 0.10).all()

    def test_degenerate(self):
        sweep = gate_sweep(ds=(1,), Ks=(1,), ns=(2, 3))
        with pytest.raises(DegenerateSweep):
            gate_scaling_check(sweep)


class TestDegree:
    """
    This is a test class for the pytest module.
    It tests k_for_error
    """

    def test_analytic(self):
        choice = k_for_error(Analytic(1.0, 1.0), 1e-3, 1, 4)
        assert choice.h == pytest.approx(1.0 / 15.0)
        assert choice.alpha_D == pytest.approx(45.0)
        assert choice.eps_kappa == pytest.approx(1e-3 / (4 * 45.0**2))
        assert choice.K == truncation_degree(Analytic(1.0, 1.0), choice.eps_kappa)
        assert choice.gate_bound > 0.0

    def test_differentiable(self):
        loose = k_for_error(Differentiable(2, 1.0), 1e-2, 2, 6)
        tight = k_for_error(Differentiable(2, 1.0), 1e-4, 2, 6)
        assert tight.K > loose.K
        assert tight.gate_bound > loose.gate_bound

    def test_nu_wrong(self):
        with pytest.raises(InvalidSmoothness):
            k_for_error(Differentiable(0.5, 1.0), 1e-3, 1, 4)

    def test_eps_wrong(self):
        with pytest.raises(EncodingParameterOutsideBoundaries):
            k_for_error(Analytic(1.0, 1.0), 0.0, 1, 4)
