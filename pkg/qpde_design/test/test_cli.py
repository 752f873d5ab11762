"""
Tests
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import os
import copy

import pytest
import numpy as np
import pandas as pd
import yaml

from qpde_design.cli import main, build_parser, EXIT_OK, EXIT_CONFIG, EXIT_VERIFICATION
from qpde_design.report_writers import read_pgm

SMALL_RUN = {
    "grid": {"d": 2, "n": 2},
    "coefficient": {"function": "gaussian", "degree": 2},
    "evolution": {"t": 0.3, "eps_hs": 1e-8, "method": "projected"},
    "design": {
        "params": [{"name": "xi_x", "m": 1, "lo": 0.25, "hi": 0.75}, {"name": "xi_y", "m": 1, "lo": 0.0, "hi": 0.5}]
    },
    "region": {"x": [0.0, 0.4], "y": [0.0, 1.0]},
    "verify": {"n": 2},
    "cost": {"sweep": {"d": [1], "K": [1, 2, 3], "n": [2, 3, 4]}},
}


def run(tmp_path, subcommand, changes=None, drop=None):
    data = copy.deepcopy(SMALL_RUN)
    for section, values in (changes or {}).items():
        data.setdefault(section, {}).update(values)
    for section, key in drop or []:
        del data[section][key]
    path = os.path.join(tmp_path, "run.yaml")
    with open(path, "w") as f:
        yaml.safe_dump(data, f)
    out = os.path.join(tmp_path, "out")
    return main([subcommand, "--config", path, "--out", out]), out


class TestParser:
    """
    This is a test class for the pytest module.
    It tests the argument parser
    """

    def test_flags(self):
        args = build_parser().parse_args(["forward", "--config", "c.yaml", "--threads", "3", "--seed", "7"])
        assert (args.subcommand, args.config, args.threads, args.seed, args.out) == ("forward", "c.yaml", 3, 7, None)

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["optimize", "--config", "c.yaml"])


class TestCommands:
    """
    This is a test class for the pytest module.
    It tests the subcommands end to end on a small run
    """

    def test_fit_fourier(self, tmp_path):
        code, out = run(tmp_path, "fit-fourier")
        assert code == EXIT_OK
        coefficients = pd.read_csv(os.path.join(out, "fourier_coefficients.csv"))
        assert list(coefficients.columns) == ["k", "l", "re", "im"]
        assert len(coefficients) == 25
        report = pd.read_csv(os.path.join(out, "fourier_residual.csv"))
        assert report.loc[0, "ancillas"] == 6
        assert 0.0 < report.loc[0, "residual"] < 1.0
        assert report.loc[0, "scan_residual"] == pytest.approx(report.loc[0, "residual"], rel=0.5)
        assert os.path.isfile(os.path.join(out, "qpde_design.log"))

    def test_unknown_key(self, tmp_path):
        code, _ = run(tmp_path, "fit-fourier", {"grid": {"size": 4}})
        assert code == EXIT_CONFIG

    def test_missing_key(self, tmp_path):
        code, _ = run(tmp_path, "forward", drop=[("evolution", "t")])
        assert code == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert main(["verify-be", "--config", os.path.join(tmp_path, "none.yaml")]) == EXIT_CONFIG

    def test_verify_be(self, tmp_path):
        code, out = run(tmp_path, "verify-be")
        assert code == EXIT_OK
        table = pd.read_csv(os.path.join(out, "verify_be.csv"))
        assert table["passed"].all()
        assert set(table["case"]) >= {"C_f", "D+_0", "D-_1", "A_wave", "exp(-A t)"}

    def test_verify_be_corrupted(self, tmp_path):
        code, out = run(tmp_path, "verify-be", {"verify": {"corrupt_alpha": 0.5}})
        assert code == EXIT_VERIFICATION
        table = pd.read_csv(os.path.join(out, "verify_be.csv")).set_index("case")
        assert not table.loc["C_f corrupted alpha", "passed"]
        assert not table.loc["C_f corrupted alpha", "expected"]
        assert table.drop("C_f corrupted alpha")["passed"].all()

    def test_forward(self, tmp_path):
        code, out = run(tmp_path, "forward")
        assert code == EXIT_OK
        summary = pd.read_csv(os.path.join(out, "forward_summary.csv"))
        assert summary.loc[0, "norm"] == pytest.approx(1.0, abs=1e-9)
        assert summary.loc[0, "deviation"] <= 1e-6
        state = pd.read_csv(os.path.join(out, "forward_state.csv"))
        assert len(state) == 64
        assert state["abs2"].sum() == pytest.approx(1.0, abs=1e-9)
        assert read_pgm(os.path.join(out, "forward_w1.pgm")).shape == (4, 4)
        front = pd.read_csv(os.path.join(out, "forward_front.csv"))
        assert list(front.columns) == ["y", "front"]

    def test_forward_initial_stripe(self, tmp_path):
        code, out = run(tmp_path, "forward", {"evolution": {"t": 0.0}})
        assert code == EXIT_OK
        image = read_pgm(os.path.join(out, "forward_w1.pgm"))
        # two rightmost x columns lit, all rows
        assert (image[:, 2:] == 255).all() and (image[:, :2] == 0).all()

    def test_landscape(self, tmp_path):
        code, out = run(tmp_path, "landscape")
        assert code == EXIT_OK
        table = pd.read_csv(os.path.join(out, "landscape.csv"))
        assert list(table.columns) == ["xi_x", "xi_y", "F_matrix", "F_blockenc", "success_prob"]
        assert len(table) == 4
        assert np.max(np.abs(table["F_matrix"] - table["F_blockenc"])) <= 1e-6
        assert table["F_matrix"].idxmax() == table["F_blockenc"].idxmax()
        diagonal = pd.read_csv(os.path.join(out, "objective_diagonal.csv"))
        assert list(diagonal.columns) == ["xi_x", "xi_y", "G", "diagonal"]
        for mode in ("matrix", "blockenc"):
            assert read_pgm(os.path.join(out, f"landscape_{mode}.pgm")).shape == (2, 2)

    def test_landscape_flat(self, tmp_path):
        code, out = run(tmp_path, "landscape", {"coefficient": {"function": "constant", "value": 1.0, "degree": 1}})
        assert code == EXIT_OK
        table = pd.read_csv(os.path.join(out, "landscape.csv"))
        assert np.ptp(table["F_matrix"]) <= 1e-12

    @pytest.mark.parametrize("generator", ["A1st", "A2nd"])
    def test_cost_report(self, tmp_path, generator):
        code, out = run(tmp_path, "cost-report", {"cost": {"generator": generator}})
        assert code == EXIT_OK
        report = pd.read_csv(os.path.join(out, "cost_report.csv"))
        assert list(report.columns) == ["quantity", "predicted", "measured", "note"]
        queries = report[report["quantity"].str.startswith("queries")]
        assert (queries["predicted"] == queries["measured"]).all()
        assert pd.read_csv(os.path.join(out, "gate_scaling.csv"))["passed"].all()
        assert os.path.isfile(os.path.join(out, "k_for_error.csv"))
        ledger = pd.read_csv(os.path.join(out, "qubit_ledger.csv")).set_index("register")
        assert ledger.loc["system", "construction"] == 6
        assert os.path.isfile(os.path.join(out, "squaring_alternatives.csv")) == (generator == "A2nd")

    def test_cost_report_unknown_generator(self, tmp_path):
        code, _ = run(tmp_path, "cost-report", {"cost": {"generator": "A3rd"}})
        assert code == EXIT_CONFIG
