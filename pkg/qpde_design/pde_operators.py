"""
This module includes the finite-difference operators with boundary conditions as
block-encodings and the assembly of the PDE generators: the second-order form A^(2nd),
the first-order form A^(1st), the acoustic-wave generator and their design-parameter
dependent versions
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
from dataclasses import dataclass, field

import numpy as np

from qpde_design import statevector as sv
from qpde_design._circuit_auxiliary_functions import ceil_log2
from qpde_design._stencil_auxiliary_functions import check_boundary, shift_matrix, stencil_1d
from qpde_design.block_encoding import (
    BlockEncoding,
    StatePreparationPair,
    identity_be,
    lcu,
    product,
    adjoint,
    selector_offdiag,
    selector_offdiag_shared,
    selector_projector,
    dilation_be,
    embed_system,
    extend_system,
    as_oracle,
    rescale_alpha,
)
from qpde_design.core_linalg import ComplexMatrix, StateVector, check_cap, kron
from qpde_design.exceptions import (
    GridParameterOutsideBoundaries,
    UnsupportedBoundaryCondition,
    InconsistentDesignLayout,
    DimensionMismatch,
)
from qpde_design.units import units, grid_limits

AXIS_NAMES = ("x", "y")

# demo boundary conditions: x dirichlet-left / neumann-right, y periodic
WAVE_DEMO_BC = (("dirichlet", "neumann"), ("periodic", "periodic"))


class GridSpec:
    """
    Uniform grid on the unit hypercube with 2^n_mu points per axis, spacing
    h_mu = 1/(2^n_mu - 1), and per-side boundary conditions.
    The grid register is (x | y), x most significant.

    ...

    Attributes
    ----------
    d : int
        spatial dimension
    n : list of int
        qubits per axis
    bc : list of (str, str)
        (left, right) boundary conditions per axis
    h : list of float
        grid spacings
    total_qubits : int
        sum of n
    """

    def __init__(self, d: int, n, bc=None):
        self.d = d
        self.n = n
        self.bc = bc

    @property
    def d(self) -> int:
        return self._d

    @d.setter
    def d(self, value: int):
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise TypeError(f"GridSpec, d is not an int: {value}")
        if value < grid_limits["dimension"][0] or value > grid_limits["dimension"][1]:
            raise GridParameterOutsideBoundaries(
                "GridSpec", "d", lim=grid_limits["dimension"], unit=units["length"], value=value
            )
        self._d = value

    @property
    def n(self) -> list:
        return self._n

    @n.setter
    def n(self, value):
        if np.isscalar(value):
            value = [value] * self._d
        value = [int(v) for v in value]
        if len(value) != self._d:
            raise DimensionMismatch(f"GridSpec, {len(value)} axis sizes for d = {self._d}")
        for v in value:
            if v < grid_limits["qubits_per_axis"][0] or v > grid_limits["qubits_per_axis"][1]:
                raise GridParameterOutsideBoundaries(
                    "GridSpec", "n", lim=grid_limits["qubits_per_axis"], unit=units["qubits"], value=v
                )
        self._n = value

    @property
    def bc(self) -> list:
        return self._bc

    @bc.setter
    def bc(self, value):
        if value is None:
            value = "periodic"
        if isinstance(value, str):
            value = [(value, value)] * self._d
        value = [(side, side) if isinstance(side, str) else tuple(side) for side in value]
        if len(value) != self._d:
            raise DimensionMismatch(f"GridSpec, {len(value)} boundary specifications for d = {self._d}")
        self._bc = [check_boundary(*side) for side in value]

    @property
    def h(self) -> list:
        return [1.0 / (2**v - 1) for v in self._n]

    @property
    def total_qubits(self) -> int:
        return sum(self._n)

    @property
    def size(self) -> int:
        return 2**self.total_qubits

    def positions(self, axis: int) -> list:
        start = sum(self._n[:axis])
        return list(range(start, start + self._n[axis]))

    def points(self, axis: int) -> np.ndarray:
        return np.arange(2 ** self._n[axis]) * self.h[axis]

    def is_periodic(self, axis: int) -> bool:
        return self._bc[axis][0] == "periodic"

    def __repr__(self):
        return f"GridSpec(d={self._d}, n={self._n}, bc={self._bc})"


def wave_demo_grid(n: int) -> GridSpec:
    return GridSpec(2, n, WAVE_DEMO_BC)


# %% Difference operators


def diff_matrix(axis: int, direction: str, grid: GridSpec) -> ComplexMatrix:
    """
    D_mu^+ or D_mu^- on the full grid register, boundary rows folded in

    Parameters
    ----------
    axis : int
        0 for x, 1 for y
    direction : str
        "+" (forward) or "-" (backward)
    grid : GridSpec
        grid

    Returns
    -------
    ComplexMatrix
    """
    if axis < 0 or axis >= grid.d:
        raise DimensionMismatch(f"diff_matrix, axis {axis} outside d = {grid.d}")
    stencil = stencil_1d(grid.n[axis], direction, *grid.bc[axis])
    before = 2 ** sum(grid.n[:axis])
    after = 2 ** sum(grid.n[axis + 1 :])
    return ComplexMatrix(kron(kron(np.eye(before), stencil), np.eye(after)))


def _cyclic_shift_be(n: int, shift: int = -1) -> BlockEncoding:
    size = 2**n
    return BlockEncoding(
        "S" if shift < 0 else "S^dagger",
        1.0,
        0,
        0.0,
        n,
        action=lambda: sv.cyclic_shift(tuple(range(n)), shift, label="S"),
        projected=lambda x: np.roll(x, shift, axis=0),
        projected_adjoint=lambda x: np.roll(x, -shift, axis=0),
        gate_count=n**2,
        reference=lambda: shift_matrix(size, shift),
    )


def diff_be(axis: int, direction: str, grid: GridSpec, backend: str = "auto", alpha: float = None) -> BlockEncoding:
    """
    Block-encoding of a difference operator on the full grid register.
    shift_lcu (periodic axes only): D+ = (S - I)/h, D- = (I - S^dagger)/h as two-term LCUs,
    alpha = 2/h, one ancilla. dilation: unitary completion of the folded stencil on the axis
    register, alpha = spectral norm (1 + 1e-6) unless given. Counted as one query of
    U_D+ or U_D-.

    Parameters
    ----------
    axis : int
        0 for x, 1 for y
    direction : str
        "+" or "-"
    grid : GridSpec
        grid
    backend : str
        "shift_lcu", "dilation" or "auto" (shift_lcu on periodic axes)
    alpha : float
        requested sub-normalization

    Returns
    -------
    BlockEncoding

    Raises
    ------
    UnsupportedBoundaryCondition
        if shift_lcu is requested on a non-periodic axis
    """
    if axis < 0 or axis >= grid.d:
        raise DimensionMismatch(f"diff_be, axis {axis} outside d = {grid.d}")
    if direction not in ("+", "-"):
        raise ValueError(f"diff_be, direction must be '+' or '-': {direction}")
    if backend == "auto":
        backend = "shift_lcu" if grid.is_periodic(axis) else "dilation"
    n = grid.n[axis]
    h = grid.h[axis]
    if backend == "shift_lcu":
        if not grid.is_periodic(axis):
            raise UnsupportedBoundaryCondition(
                f"diff_be, shift_lcu needs a periodic axis, axis {axis} has {grid.bc[axis]}"
            )
        if direction == "+":
            local = lcu(StatePreparationPair([1.0 / h, -1.0 / h]), [_cyclic_shift_be(n, -1), identity_be(n)])
        else:
            local = lcu(StatePreparationPair([1.0 / h, -1.0 / h]), [identity_be(n), _cyclic_shift_be(n, 1)])
        if alpha is not None and alpha > local.alpha:
            local = rescale_alpha(local, alpha)
    elif backend == "dilation":
        local = dilation_be(stencil_1d(n, direction, *grid.bc[axis]), alpha=alpha, label=f"D{direction}")
    else:
        raise ValueError(f"diff_be, unknown backend {backend}")
    label = f"U_D{direction}"
    logging.debug(f"diff_be: axis {AXIS_NAMES[axis]}, {direction}, backend {backend}, alpha {local.alpha}")
    return as_oracle(embed_system(local, grid.total_qubits, grid.positions(axis)), label)


# %% Coefficient sets


@dataclass
class CoefficientSet2nd:
    """
    Encodings of C_rho^(-1/2), C_kappa^(1/2), C_zeta and C_gamma^(1/2); zeta and gamma
    may be None to drop their terms
    """

    inv_sqrt_rho: BlockEncoding
    sqrt_kappa: BlockEncoding
    zeta: BlockEncoding = None
    sqrt_gamma: BlockEncoding = None


@dataclass
class CoefficientSet1st:
    """
    Encodings of C_kappa, C_beta_mu^+ >= 0, C_beta_mu^- <= 0 per axis and C_gamma;
    None drops a term
    """

    kappa: BlockEncoding
    beta_plus: list = field(default_factory=list)
    beta_minus: list = field(default_factory=list)
    gamma: BlockEncoding = None


def split_beta(beta):
    """
    beta^+ = max(beta, 0), beta^- = min(beta, 0)
    """
    beta = np.asarray(beta, dtype=float)
    return np.maximum(beta, 0.0), np.minimum(beta, 0.0)


def _design_qubits(grid: GridSpec, encodings) -> int:
    encodings = [e for e in encodings if e is not None]
    extra = {e.sys_qubits - grid.total_qubits for e in encodings}
    if len(extra) != 1 or min(extra) < 0:
        raise DimensionMismatch(
            f"Coefficient encodings act on {sorted(e.sys_qubits for e in encodings)} qubits, grid has "
            f"{grid.total_qubits}"
        )
    layouts = {e.design_layout for e in encodings}
    if len(layouts) > 1:
        raise InconsistentDesignLayout(f"Coefficient design layouts differ: {layouts}")
    return extra.pop()


def _difference_pair(axis, grid, design, backend):
    alpha = 2.0 / grid.h[axis]
    plus = extend_system(diff_be(axis, "+", grid, backend, alpha=alpha), leading=design)
    minus = extend_system(diff_be(axis, "-", grid, backend, alpha=alpha), leading=design)
    return plus, minus


# %% Assemblies


def assemble_A2nd(coefficients: CoefficientSet2nd, grid: GridSpec, backend: str = "auto") -> BlockEncoding:
    """
    A^(2nd) = |0><0| x C_rho^-1 C_zeta
              - sum_mu (|0><mu+1| x C_rho^-1/2 D_mu^+ C_kappa^1/2 + |mu+1><0| x C_kappa^1/2 D_mu^- C_rho^-1/2)
              + |0><d+1| x C_rho^-1/2 C_gamma^1/2 - |d+1><0| x C_rho^-1/2 C_gamma^1/2
    on a ceil(log2(d + 2))-qubit block selector, combined by one LCU with
    y = (+1, -1 (d times), +1)

    Parameters
    ----------
    coefficients : CoefficientSet2nd
        diagonal encodings on (design | grid)
    grid : GridSpec
        grid
    backend : str
        difference-operator backend

    Returns
    -------
    BlockEncoding
        system (selector | design | grid)
    """
    c = coefficients
    design = _design_qubits(grid, [c.inv_sqrt_rho, c.sqrt_kappa, c.zeta, c.sqrt_gamma])
    d = grid.d
    k = ceil_log2(d + 2)
    u_rho = as_oracle(c.inv_sqrt_rho, "U_inv_sqrt_rho")
    u_kappa = as_oracle(c.sqrt_kappa, "U_sqrt_kappa")
    terms, y = [], []
    if c.zeta is not None:
        u_zeta = as_oracle(c.zeta, "U_zeta")
        terms.append(selector_projector(0, product(product(u_rho, adjoint(u_rho)), u_zeta), k))
        y.append(1.0)
    for mu in range(d):
        d_plus, d_minus = _difference_pair(mu, grid, design, backend)
        terms.append(
            selector_offdiag(
                mu + 1,
                product(product(u_rho, d_plus), u_kappa),
                product(product(u_kappa, d_minus), u_rho),
                k,
            )
        )
        y.append(-1.0)
    if c.sqrt_gamma is not None:
        u_gamma = as_oracle(c.sqrt_gamma, "U_sqrt_gamma")
        terms.append(selector_offdiag_shared(d + 1, product(u_rho, u_gamma), k, sign=-1))
        y.append(1.0)
    a = lcu(StatePreparationPair(y), terms).replace(label="A2nd")
    logging.info(f"assemble_A2nd: d={d}, alpha={a.alpha}, ancillas={a.ancillas}, eps={a.eps}")
    return a


def assemble_A1st(coefficients: CoefficientSet1st, grid: GridSpec, backend: str = "auto") -> BlockEncoding:
    """
    A^(1st) = -( 1/2 sum_mu (D_mu^+ C_kappa D_mu^- + D_mu^- C_kappa D_mu^+)
                 + sum_mu (C_beta_mu^+ D_mu^- + C_beta_mu^- D_mu^+) + C_gamma )
    as one LCU of 4d + 1 products, ||y||_1 = 3d + 1

    Parameters
    ----------
    coefficients : CoefficientSet1st
        diagonal encodings on (design | grid)
    grid : GridSpec
        grid
    backend : str
        difference-operator backend

    Returns
    -------
    BlockEncoding
        system (design | grid)
    """
    c = coefficients
    d = grid.d
    beta_plus = list(c.beta_plus) + [None] * (d - len(c.beta_plus))
    beta_minus = list(c.beta_minus) + [None] * (d - len(c.beta_minus))
    design = _design_qubits(grid, [c.kappa, c.gamma] + beta_plus + beta_minus)
    u_kappa = as_oracle(c.kappa, "U_kappa")
    terms, y = [], []
    for mu in range(d):
        d_plus, d_minus = _difference_pair(mu, grid, design, backend)
        terms.append(product(product(d_plus, u_kappa), d_minus))
        terms.append(product(product(d_minus, u_kappa), d_plus))
        y += [-0.5, -0.5]
        if beta_plus[mu] is not None:
            terms.append(product(as_oracle(beta_plus[mu], "U_beta+"), d_minus))
            y.append(-1.0)
        if beta_minus[mu] is not None:
            terms.append(product(as_oracle(beta_minus[mu], "U_beta-"), d_plus))
            y.append(-1.0)
    if c.gamma is not None:
        terms.append(as_oracle(c.gamma, "U_gamma"))
        y.append(-1.0)
    a = lcu(StatePreparationPair(y), terms).replace(label="A1st")
    logging.info(f"assemble_A1st: d={d}, alpha={a.alpha}, ancillas={a.ancillas}, eps={a.eps}")
    return a


def assemble_wave_A(c_be: BlockEncoding, grid: GridSpec, backend: str = "auto") -> BlockEncoding:
    """
    Acoustic generator on w = (C^-1 du/dt, grad_x u, grad_y u, 0):
    A = -( |0><1| x C D_x^+ + |1><0| x D_x^- C + |0><2| x C D_y^+ + |2><0| x D_y^- C )
    as an LCU of two selector blocks on a 2-qubit selector

    Parameters
    ----------
    c_be : BlockEncoding
        encoding of diag c(x, y) on (design | grid)
    grid : GridSpec
        two-dimensional grid
    backend : str
        difference-operator backend

    Returns
    -------
    BlockEncoding
        system (selector | design | grid)
    """
    if grid.d != 2:
        raise DimensionMismatch(f"assemble_wave_A needs d = 2, got {grid.d}")
    design = _design_qubits(grid, [c_be])
    u_c = as_oracle(c_be, "U_c")
    terms = []
    for mu in range(2):
        d_plus, d_minus = _difference_pair(mu, grid, design, backend)
        terms.append(selector_offdiag(mu + 1, product(u_c, d_plus), product(d_minus, u_c), 2))
    a = lcu(StatePreparationPair([-1.0, -1.0]), terms).replace(label="A_wave")
    logging.info(f"assemble_wave_A: alpha={a.alpha}, ancillas={a.ancillas}, eps={a.eps}")
    return a


def wave_generator_matrix(c_values, grid: GridSpec) -> ComplexMatrix:
    """
    Dense acoustic generator on (sel | x | y) for coefficient values c(x_i, y_j) given as an
    array of shape (2^n_x, 2^n_y)
    """
    if grid.d != 2:
        raise DimensionMismatch(f"wave_generator_matrix needs d = 2, got {grid.d}")
    c = np.asarray(c_values, dtype=complex).reshape(-1)
    if c.size != grid.size:
        raise DimensionMismatch(f"wave_generator_matrix: {c.size} coefficient values for {grid.size} points")
    check_cap(4 * grid.size)
    c_diag = np.diag(c)
    a = np.zeros((4 * grid.size, 4 * grid.size), dtype=complex)
    blocks = slice(0, grid.size)
    for mu in range(2):
        d_plus = np.asarray(diff_matrix(mu, "+", grid))
        d_minus = np.asarray(diff_matrix(mu, "-", grid))
        row = slice((mu + 1) * grid.size, (mu + 2) * grid.size)
        a[blocks, row] = -c_diag @ d_plus
        a[row, blocks] = -d_minus @ c_diag
    return ComplexMatrix(a)


GENERATORS = {
    "A2nd": assemble_A2nd,
    "A1st": assemble_A1st,
    "wave": assemble_wave_A,
}


def assemble_param(generator: str, coefficients, grid: GridSpec, backend: str = "auto") -> BlockEncoding:
    """
    Encoding of sum_xi |xi><xi| x A(xi) from parameterized diagonal encodings.
    The design registers sit between the selector and the grid and are only touched by
    the coefficient encodings.

    Parameters
    ----------
    generator : str
        "A2nd", "A1st" or "wave"
    coefficients : CoefficientSet2nd, CoefficientSet1st or BlockEncoding
        parameterized coefficient encodings sharing one design layout
    grid : GridSpec
        grid
    backend : str
        difference-operator backend

    Returns
    -------
    BlockEncoding

    Raises
    ------
    InconsistentDesignLayout
        if the coefficient encodings carry different design layouts
    """
    if generator not in GENERATORS:
        raise ValueError(f"assemble_param, unknown generator {generator}, choose among {list(GENERATORS)}")
    if isinstance(coefficients, BlockEncoding):
        encodings = [coefficients]
    else:
        encodings = [v for v in vars(coefficients).values() if isinstance(v, BlockEncoding)]
        for v in vars(coefficients).values():
            if isinstance(v, list):
                encodings += [e for e in v if e is not None]
    layouts = {e.design_layout for e in encodings}
    if len(layouts) != 1 or None in layouts:
        raise InconsistentDesignLayout(
            f"assemble_param: coefficients need one shared design layout, got {layouts}"
        )
    a = GENERATORS[generator](coefficients, grid, backend)
    return a.replace(label=f"{a.label}(xi)")


# %% Initial state


WAVE_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def wave_layout(grid: GridSpec, design_layout=None) -> list:
    layout = [("sel", 2)]
    if design_layout:
        layout += [(name, m) for name, m in design_layout]
    return layout + [(AXIS_NAMES[axis], grid.n[axis]) for axis in range(grid.d)]


def prepare_initial(grid: GridSpec) -> StateVector:
    """
    Wave initial state: the first component is uniform on the two rightmost x columns,
    value 1/sqrt(2 * 2^n_y), all others zero (2^-5/2 at n = 4 per axis)

    Returns
    -------
    StateVector
        layout (sel | x | y)
    """
    if grid.d != 2:
        raise DimensionMismatch(f"prepare_initial needs d = 2, got {grid.d}")
    nx, ny = grid.n
    amplitudes = np.zeros((4, 2**nx, 2**ny), dtype=complex)
    amplitudes[0, -2:, :] = 1.0 / np.sqrt(2.0 * 2**ny)
    return StateVector(amplitudes.reshape(-1), wave_layout(grid))


def initial_state_circuit(grid: GridSpec) -> sv.ActionNode:
    """
    Circuit preparing prepare_initial(grid) from |0...0>: X on the top n_x - 1 bits of x,
    H on the least significant x bit and on every y bit
    """
    nx, ny = grid.n
    x0 = 2
    steps = [sv.flip(x0 + i) for i in range(nx - 1)]
    steps.append(sv.unitary((x0 + nx - 1,), WAVE_HADAMARD, label="H"))
    steps += [sv.unitary((x0 + nx + i,), WAVE_HADAMARD, label="H") for i in range(ny)]
    return sv.compose(steps, label="prepare_initial")


