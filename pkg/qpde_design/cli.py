"""
Command-line entry point: one YAML configuration drives the Fourier fit, the
block-encoding verification suite, the forward wave run, the design landscape and
the cost report. Exit codes: 0 success, 2 configuration error, 3 verification
failure, 4 materialization cap exceeded.
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from qpde_design import logs
from qpde_design.block_encoding import verify, scale_phase
from qpde_design.config import RunConfig
from qpde_design.core_linalg import matexp
from qpde_design.cost_model import (
    OracleTriple,
    predict_A1st,
    predict_A2nd,
    reconcile,
    squaring_alternatives,
    gate_sweep,
    gate_scaling_check,
    k_for_error,
)
from qpde_design.design import ForwardPipeline, landscape, objective_table, front_position
from qpde_design.diagonal_encoding import diag_be_fourier
from qpde_design.exceptions import ConfigError, VerificationFailure, MaterializationTooLarge
from qpde_design.hamiltonian_simulation import plan_evolution, evolution_encoding, evolve_be, evolve_exact
from qpde_design.pde_operators import (
    GridSpec,
    CoefficientSet1st,
    CoefficientSet2nd,
    assemble_A1st,
    assemble_A2nd,
    assemble_wave_A,
    diff_be,
    diff_matrix,
    prepare_initial,
    wave_generator_matrix,
)
from qpde_design.report_writers import write_csv, write_pgm, field_image
from qpde_design.units import limits

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFICATION = 3
EXIT_MATERIALIZATION = 4

SUBCOMMANDS = ("fit-fourier", "verify-be", "forward", "landscape", "cost-report")


def _coefficient_values(series, grid: GridSpec) -> np.ndarray:
    return series.evaluate_grid(grid.points(0), grid.points(1)).real


# %% fit-fourier


def cmd_fit_fourier(config: RunConfig) -> dict:
    """
    Fit the configured coefficient and write its coefficients and residual report
    """
    d = int(config.section("grid")["d"])
    series = config.series(d)
    out = config.out_dir
    paths = {"coefficients": write_csv(series.to_frame(), os.path.join(out, "fourier_coefficients.csv"))}
    # independent sup-norm scan of the truncation on a grid finer than the fit check
    scan = np.linspace(0.0, 1.0, 257)
    f = config.source_function(d)
    if f is not None:
        exact = f(scan) if d == 1 else f(*np.meshgrid(scan, scan, indexing="ij"))
        approx = series.evaluate_grid(scan, scan).real
        scan_residual = float(np.max(np.abs(np.asarray(exact) - approx)))
    else:
        scan_residual = np.nan
    report = pd.DataFrame(
        [
            {
                "degrees": "x".join(str(k) for k in series.degrees[:d]),
                "terms": series.coefficients.size,
                "l1_norm": series.l1_norm,
                "residual": series.residual,
                "scan_residual": scan_residual,
                "ancillas": diag_be_fourier(series, [2] * d).ancillas,
            }
        ]
    )
    paths["residual"] = write_csv(report, os.path.join(out, "fourier_residual.csv"))
    logging.info(f"cmd_fit_fourier: {series}")
    return paths


# %% verify-be


def _verify_cases(config: RunConfig) -> list:
    """
    (name, encoding, reference, expected to pass) for every construction of the run
    """
    values = config.section("verify")
    evolution = config.section("evolution")
    grid = config.grid(values["n"])
    series = config.series(grid.d)
    c_be = diag_be_fourier(series, grid.n, label="C_f")
    if grid.d == 1:
        c_values = series.evaluate_grid(grid.points(0))
    else:
        c_values = series.evaluate_grid(grid.points(0), grid.points(1)).reshape(-1)
    cases = [("C_f", c_be, np.diag(c_values), True)]
    for axis in range(grid.d):
        for direction in ("+", "-"):
            u = diff_be(axis, direction, grid, evolution["backend"])
            cases.append((f"D{direction}_{axis}", u, np.asarray(diff_matrix(axis, direction, grid)), True))
    if grid.d == 2:
        a_be = assemble_wave_A(c_be, grid, evolution["backend"])
        a_matrix = np.asarray(wave_generator_matrix(_coefficient_values(series, grid), grid))
        cases.append(("A_wave", a_be, a_matrix, True))
        plan = plan_evolution(a_be.alpha, float(evolution["t"]), float(values["eps_hs"]))
        e = evolution_encoding(a_be, plan)
        e = e.replace(eps=e.eps + plan.tail)
        cases.append(("exp(-A t)", e, matexp(-a_matrix, plan.t), True))
    if values["corrupt_alpha"] is not None:
        corrupted = c_be.replace(label="C_f corrupted", alpha=float(values["corrupt_alpha"]))
        cases.append(("C_f corrupted alpha", corrupted, cases[0][2], False))
    return cases


def cmd_verify_be(config: RunConfig) -> pd.DataFrame:
    """
    Verify every construction against its independent dense reference and write the
    pass/fail table

    Raises
    ------
    VerificationFailure
        if any case fails, the corrupted-alpha control included
    """
    cases = _verify_cases(config)

    def run(case):
        name, u, reference, expected = case
        deviation = verify(u, reference)
        return {
            "case": name,
            "alpha": u.alpha,
            "ancillas": u.ancillas,
            "eps": u.eps,
            "deviation": deviation,
            "passed": bool(deviation <= u.eps + 1e-10),
            "expected": expected,
        }

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        rows = list(pool.map(run, cases))
    table = pd.DataFrame(rows)
    write_csv(table, os.path.join(config.out_dir, "verify_be.csv"))
    failed = table.loc[~table["passed"], "case"].tolist()
    if failed:
        raise VerificationFailure(f"verify-be: failed cases {failed}")
    return table


# %% forward


def cmd_forward(config: RunConfig) -> pd.DataFrame:
    """
    Evolve the wave initial state to time t with the block-encoded evolution and, when
    the generator fits the dense cap, with the matrix exponential. Writes the state table,
    a heatmap of |w_1|^2, the front position per y and a summary.
    """
    evolution = config.section("evolution")
    grid = config.grid()
    if grid.d != 2:
        raise ConfigError("forward needs a two-dimensional grid")
    series = config.series(2)
    t, eps_hs = float(evolution["t"]), float(evolution["eps_hs"])
    c_values = _coefficient_values(series, grid)
    a_be = assemble_wave_A(diag_be_fourier(series, grid.n, label="C_f"), grid, evolution["backend"])
    plan = plan_evolution(a_be.alpha, t, eps_hs)
    w0 = prepare_initial(grid)
    state, prob = evolve_be(a_be, w0, plan, evolution["method"])
    summary = {"t": t, "eps_hs": eps_hs, "alpha": a_be.alpha, "R": plan.R, "success_prob": prob}
    if 4 * grid.size <= limits["materialization_cap"]:
        exact = evolve_exact(wave_generator_matrix(c_values, grid), w0, t)
        summary["matrix_norm"] = float(np.linalg.norm(exact.amplitudes))
        summary["deviation"] = float(np.linalg.norm(exact.amplitudes - state.amplitudes))
    summary["norm"] = float(np.linalg.norm(state.amplitudes))

    nx, ny = 2 ** grid.n[0], 2 ** grid.n[1]
    sel, ix, iy = np.meshgrid(np.arange(4), np.arange(nx), np.arange(ny), indexing="ij")
    amplitudes = state.amplitudes
    table = pd.DataFrame(
        {
            "component": sel.reshape(-1),
            "ix": ix.reshape(-1),
            "iy": iy.reshape(-1),
            "x": grid.points(0)[ix.reshape(-1)],
            "y": grid.points(1)[iy.reshape(-1)],
            "re": amplitudes.real,
            "im": amplitudes.imag,
            "abs2": np.abs(amplitudes) ** 2,
        }
    )
    out = config.out_dir
    write_csv(table, os.path.join(out, "forward_state.csv"))
    write_pgm(field_image(amplitudes, (nx, ny)), os.path.join(out, "forward_w1.pgm"), title=f"|w_1|^2 at t = {t}")
    front = pd.DataFrame({"y": grid.points(1), "front": front_position(state, grid)})
    write_csv(front, os.path.join(out, "forward_front.csv"))
    summary = pd.DataFrame([summary])
    write_csv(summary, os.path.join(out, "forward_summary.csv"))
    return summary


# %% landscape


def cmd_landscape(config: RunConfig) -> pd.DataFrame:
    """
    F(xi) over the design grid in matrix and block-encoded modes, the encoded objective
    diagonal and one heatmap per mode
    """
    evolution = config.section("evolution")
    grid = config.grid()
    space = config.design_space()
    region = config.region(grid)
    center = config.section("coefficient")["center"]
    forward = ForwardPipeline(
        config.series(2), grid, space, float(evolution["t"]), float(evolution["eps_hs"]),
        backend=evolution["backend"], center=center,
    )
    modes = ("matrix", "blockenc") if 4 * grid.size <= limits["materialization_cap"] else ("blockenc",)
    table = landscape(forward, region, modes, workers=config.threads)
    out = config.out_dir
    write_csv(table, os.path.join(out, "landscape.csv"))
    write_csv(objective_table(forward, region, workers=config.threads), os.path.join(out, "objective_diagonal.csv"))
    if len(space.names) == 2:
        shape = [2**m for _, m in space.layout]
        for mode, column in (("matrix", "F_matrix"), ("blockenc", "F_blockenc")):
            if mode in modes:
                # rows xi_y (top row the largest), columns xi_x
                image = table[column].values.reshape(shape).T[::-1]
                write_pgm(image, os.path.join(out, f"landscape_{mode}.pgm"), title=f"{column}(xi_x, xi_y)")
    return table


# %% cost-report


def _cost_encodings(config: RunConfig, grid: GridSpec):
    """
    Generator encoding and oracle triples for the configured generator; every coefficient
    oracle is the Fourier encoding of the configured coefficient
    """
    values = config.section("cost")
    generator = values["generator"]
    backend = config.section("evolution")["backend"] if config.has_section("evolution") else "auto"
    series = config.series(grid.d)

    def oracle(label):
        return diag_be_fourier(series, grid.n, label=label)

    d_triple = OracleTriple.from_encoding(diff_be(0, "+", grid, backend, alpha=2.0 / grid.h[0]))
    if generator == "A1st":
        kappa, gamma, beta = oracle("C_kappa"), oracle("C_gamma"), oracle("C_beta")
        beta_minus = scale_phase(beta, -1.0, label="C_beta-")
        coefficients = CoefficientSet1st(kappa, [beta] * grid.d, [beta_minus] * grid.d, gamma)
        encoding = assemble_A1st(coefficients, grid, backend)
        meta = {
            "kappa": OracleTriple.from_encoding(kappa),
            "beta": OracleTriple.from_encoding(beta),
            "gamma": OracleTriple.from_encoding(gamma),
            "D": d_triple,
        }
        return predict_A1st(meta, grid.d), encoding, None
    if generator == "A2nd":
        rho, kappa = oracle("C_inv_sqrt_rho"), oracle("C_sqrt_kappa")
        zeta, gamma = oracle("C_zeta"), oracle("C_sqrt_gamma")
        encoding = assemble_A2nd(CoefficientSet2nd(rho, kappa, zeta, gamma), grid, backend)
        meta = {
            "inv_sqrt_rho": OracleTriple.from_encoding(rho),
            "sqrt_kappa": OracleTriple.from_encoding(kappa),
            "zeta": OracleTriple.from_encoding(zeta),
            "sqrt_gamma": OracleTriple.from_encoding(gamma),
            "D": d_triple,
        }
        alternatives = squaring_alternatives(meta["inv_sqrt_rho"], meta["zeta"])
        return predict_A2nd(meta, grid.d), encoding, alternatives
    raise ConfigError(f"cost.generator must be A1st or A2nd: {generator}")


def _qubit_ledger(config: RunConfig) -> pd.DataFrame:
    """
    Qubits of the forward run: ours and the generator-plus-two count
    """
    evolution = config.section("evolution")
    grid = config.grid()
    series = config.series(2)
    a_be = assemble_wave_A(diag_be_fourier(series, grid.n, label="C_f"), grid, evolution["backend"])
    e = evolution_encoding(a_be, plan_evolution(a_be.alpha, float(evolution["t"]), float(evolution["eps_hs"])))
    system = a_be.sys_qubits
    rows = [
        ("system", system, system),
        ("generator_ancillas", a_be.ancillas, a_be.ancillas),
        ("evolution_ancillas", e.ancillas, a_be.ancillas + 2),
        ("work", e.work_qubits, 0),
        ("total", system + e.ancillas + e.work_qubits, system + a_be.ancillas + 2),
    ]
    return pd.DataFrame(rows, columns=["register", "construction", "generator_plus_two"])


def cmd_cost_report(config: RunConfig) -> pd.DataFrame:
    """
    Predicted against constructed resources, the gate-scaling fit and the Fourier degree
    for the configured target error

    Raises
    ------
    VerificationFailure
        if the query counts differ from the prediction or the scaling fit fails
    """
    values = config.section("cost")
    out = config.out_dir
    grid = config.grid()
    report, encoding, alternatives = _cost_encodings(config, grid)
    report = reconcile(report, encoding)
    frame = report.to_frame()
    write_csv(frame, os.path.join(out, "cost_report.csv"))
    with open(os.path.join(out, "cost_report.txt"), "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{report.label} on {grid}\n\n")
        f.write(frame.to_string(index=False))
        f.write("\n")
    if alternatives is not None:
        write_csv(alternatives, os.path.join(out, "squaring_alternatives.csv"))

    sweep_values = values["sweep"]
    sweep = gate_sweep(sweep_values["d"], sweep_values["K"], sweep_values["n"], seed=config.seed)
    write_csv(sweep, os.path.join(out, "gate_sweep.csv"))
    fit = gate_scaling_check(sweep)
    write_csv(fit, os.path.join(out, "gate_scaling.csv"))

    choice = k_for_error(config.smoothness(), float(values["eps"]), grid.d, grid.total_qubits)
    write_csv(pd.DataFrame([vars(choice)]), os.path.join(out, "k_for_error.csv"))

    if grid.d == 2 and config.has_section("evolution"):
        write_csv(_qubit_ledger(config), os.path.join(out, "qubit_ledger.csv"))

    problems = []
    if not report.counts_match:
        problems.append("query counts differ from the prediction")
    if not fit["passed"].all():
        problems.append(f"gate-scaling residual above tolerance for d = {fit.loc[~fit['passed'], 'd'].tolist()}")
    if problems:
        raise VerificationFailure(f"cost-report: {'; '.join(problems)}")
    return frame


COMMANDS = {
    "fit-fourier": cmd_fit_fourier,
    "verify-be": cmd_verify_be,
    "forward": cmd_forward,
    "landscape": cmd_landscape,
    "cost-report": cmd_cost_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpde-design", description="Block-encoded PDE design runs")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", default=None, help="output directory, overrides output.dir")
    parser.add_argument("--threads", type=int, default=None, help="worker threads, overrides limits.threads")
    parser.add_argument("--seed", type=int, default=None, help="seed of randomized checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.read_yaml(args.config)
        config.override(args.out, args.threads, args.seed)
        logs.configure(config.out_dir)
        config.apply_limits()
        logging.info(f"main: {args.subcommand} with {config}")
        COMMANDS[args.subcommand](config)
    except ConfigError as e:
        logging.error(f"main: configuration error: {e}")
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as e:
        logging.error(f"main: {e}")
        print(f"verification failure: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except MaterializationTooLarge as e:
        logging.error(f"main: {e}")
        print(f"materialization cap exceeded: {e}", file=sys.stderr)
        return EXIT_MATERIALIZATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
