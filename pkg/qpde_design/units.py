"""
List of quantities with their unit, numerical tolerances, limits and gate-cost conventions
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

units = {
    "length": "[-]",
    "time": "[-]",
    "qubits": "[qubits]",
    "subnormalization": "[-]",
    "error": "[-]",
    "degree": "[-]",
    "coefficient": "[-]",
    "gates": "[two-qubit gates]",
}

tolerances = {
    "hermitian": 1e-12,  # flag check on ComplexMatrix
    "unitarity": 1e-10,
    "verify_slack": 1e-10,
    "anti_hermitian_generator": 1e-8,
    "normalization": 1e-12,
    "spectral_norm": 1e-8,
}

limits = {
    # Dense materialization, rows of the materialized matrix
    "materialization_cap": 2**14,
    # Circuit simulation, amplitudes = 2^(total qubits) * columns
    "circuit_amplitude_cap": 2**22,
    "success_floor": 1e-12,
    "max_threads": 64,
    # dense reference checks (Hermiticity) are skipped above this dimension
    "reference_check_cap": 2**10,
}

grid_limits = {
    "dimension": [1, 2],
    "qubits_per_axis": [1, 12],
}

encoding_limits = {
    "alpha": [0.0, 1e12],
    "eps": [0.0, 1e12],
    "ancillas": [0, 64],
    "fourier_degree": [0, 256],
    "design_qubits": [1, 12],
}

# Two-qubit gate equivalents used by the counters
gate_costs = {
    "toffoli": 6,
    "controlled_phase": 2,
    "cnot": 1,
    "swap": 3,
    # per selector qubit of SWAP_{0,j}
    "selector_swap_per_qubit": 2,
    # generic dense unitary on q qubits costs dense_unitary_base ** q
    "dense_unitary_base": 4,
}

boundary_conditions = ("periodic", "dirichlet", "neumann")
