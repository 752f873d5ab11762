"""
This module includes the design-parameter dependent wave simulation: the Gaussian
coefficient profile, the design space and target region, the forward pipeline over all
design sectors, the objective block-encoding and the landscape tables
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from qpde_design import statevector as sv
from qpde_design._circuit_auxiliary_functions import and_ladder_toffolis, state_completion
from qpde_design.block_encoding import BlockEncoding, adjoint
from qpde_design.core_linalg import StateVector
from qpde_design.diagonal_encoding import param_diag_be_shift, register_value_map
from qpde_design.exceptions import (
    EmptyRegion,
    InconsistentDesignLayout,
    DimensionMismatch,
    ZeroSubnormalization,
    EncodingParameterOutsideBoundaries,
)
from qpde_design.fourier_series import FourierSeries
from qpde_design.hamiltonian_simulation import plan_evolution, evolution_encoding, evolve_exact
from qpde_design.pde_operators import (
    GridSpec,
    assemble_param,
    prepare_initial,
    initial_state_circuit,
    wave_generator_matrix,
    wave_layout,
)
from qpde_design.units import units, encoding_limits, gate_costs, limits

# Gaussian widths of the demo sound-speed profile
SIGMA_X = 1.0 / 20.0
SIGMA_Y = 1.0 / 5.0
DEFAULT_CENTER = (0.5, 0.5)

# design parameters understood by the wave pipeline, in register order
SHIFT_PARAMETERS = ("xi_x", "xi_y")


def gaussian_profile(xi=None):
    """
    c(x, y; xi) = 1 - exp(-((x - xi_x)^2 / (2 sigma_x^2) + (y - xi_y)^2 / (2 sigma_y^2)))

    Parameters
    ----------
    xi : tuple of float
        center, default (1/2, 1/2)

    Returns
    -------
    callable
        c(x, y) broadcasting over arrays
    """
    xi_x, xi_y = DEFAULT_CENTER if xi is None else (float(xi[0]), float(xi[1]))

    def profile(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 1.0 - np.exp(-((x - xi_x) ** 2 / (2 * SIGMA_X**2) + (y - xi_y) ** 2 / (2 * SIGMA_Y**2)))

    return profile


# %% Design space and region


class DesignSpace:
    """
    Ordered design registers, each an m-qubit register mapped affinely on [lo, hi].
    The first parameter is the most significant register.

    ...

    Attributes
    ----------
    params : list of (str, int, float, float)
        (name, m, lo, hi)
    total_qubits : int
        sum of m
    size : int
        number of design sectors
    layout : tuple of (str, int)
        register names and widths
    """

    def __init__(self, params):
        self.params = params

    @property
    def params(self) -> list:
        return self._params

    @params.setter
    def params(self, value):
        checked = []
        for item in value:
            try:
                name, m, lo, hi = item
                m, lo, hi = int(m), float(lo), float(hi)
            except (TypeError, ValueError):
                raise TypeError(f"DesignSpace, parameters must be (name, m, lo, hi): {item}")
            if m < encoding_limits["design_qubits"][0] or m > encoding_limits["design_qubits"][1]:
                raise EncodingParameterOutsideBoundaries(
                    "DesignSpace", name, lim=encoding_limits["design_qubits"], unit=units["qubits"], value=m
                )
            if not hi > lo:
                raise ValueError(f"DesignSpace, parameter {name} has an empty range [{lo}, {hi}]")
            checked.append((str(name), m, lo, hi))
        if not checked:
            raise ValueError("DesignSpace, at least one design parameter is needed")
        names = [p[0] for p in checked]
        if len(set(names)) != len(names):
            raise ValueError(f"DesignSpace, repeated parameter names: {names}")
        self._params = checked

    @property
    def names(self) -> list:
        return [p[0] for p in self._params]

    @property
    def total_qubits(self) -> int:
        return sum(p[1] for p in self._params)

    @property
    def size(self) -> int:
        return 2**self.total_qubits

    @property
    def layout(self) -> tuple:
        return tuple((name, m) for name, m, _, _ in self._params)

    def register_values(self, name: str) -> np.ndarray:
        for p_name, m, lo, hi in self._params:
            if p_name == name:
                return register_value_map(m, lo, hi)
        raise KeyError(f"DesignSpace, unknown parameter {name}")

    def table(self) -> pd.DataFrame:
        """
        One row per design sector in register order, one column per parameter value
        """
        values = [register_value_map(m, lo, hi) for _, m, lo, hi in self._params]
        rows = list(itertools.product(*values))
        return pd.DataFrame(rows, columns=self.names)

    def __repr__(self):
        return f"DesignSpace({self._params})"


class TargetRegion:
    """
    Set of grid points (ix, iy) of one component of the wave state

    ...

    Attributes
    ----------
    indices : list of (int, int)
        grid indices, sorted
    component : int
        selector value of the component (0 is C^-1 du/dt)
    """

    def __init__(self, indices, component: int = 0):
        self.indices = indices
        self.component = component

    @property
    def indices(self) -> list:
        return self._indices

    @indices.setter
    def indices(self, value):
        value = sorted({(int(i), int(j)) for i, j in value})
        if not value:
            raise EmptyRegion("TargetRegion, the region has no grid points")
        self._indices = value

    @property
    def component(self) -> int:
        return self._component

    @component.setter
    def component(self, value: int):
        value = int(value)
        if value < 0 or value > 3:
            raise ValueError(f"TargetRegion, component must be in 0..3: {value}")
        self._component = value

    @classmethod
    def rectangle(cls, grid: GridSpec, x_range, y_range, component: int = 0):
        """
        All grid points with x in x_range and y in y_range (closed intervals)
        """
        xs = np.nonzero((grid.points(0) >= x_range[0] - 1e-12) & (grid.points(0) <= x_range[1] + 1e-12))[0]
        ys = np.nonzero((grid.points(1) >= y_range[0] - 1e-12) & (grid.points(1) <= y_range[1] + 1e-12))[0]
        return cls(itertools.product(xs, ys), component)

    def mask(self, grid: GridSpec) -> np.ndarray:
        """
        Boolean array of shape (2^n_x, 2^n_y)

        Raises
        ------
        DimensionMismatch
            if an index lies outside the grid
        """
        nx, ny = 2 ** grid.n[0], 2 ** grid.n[1]
        out = np.zeros((nx, ny), dtype=bool)
        for i, j in self._indices:
            if i < 0 or i >= nx or j < 0 or j >= ny:
                raise DimensionMismatch(f"TargetRegion, point ({i}, {j}) outside a {nx} x {ny} grid")
            out[i, j] = True
        return out

    def state_mask(self, grid: GridSpec) -> np.ndarray:
        """
        Mask over the (sel | x | y) amplitudes
        """
        out = np.zeros((4, grid.size), dtype=bool)
        out[self._component] = self.mask(grid).reshape(-1)
        return out.reshape(-1)

    def __repr__(self):
        return f"TargetRegion({len(self._indices)} points, component {self._component})"


# %% Forward pipeline


class ForwardPipeline:
    """
    Design-dependent wave evolution: c(x, y; xi) from a Fourier series shifted by
    1/2 - xi per axis, the parameterized generator, its evolution plan and encoding

    ...

    Attributes
    ----------
    series : FourierSeries
        coefficient series at the default center
    grid : GridSpec
        two-dimensional grid
    space : DesignSpace
        design registers, names among xi_x, xi_y
    t : float
        evolution time
    eps_hs : float
        evolution error target
    coefficient : BlockEncoding
        parameterized coefficient encoding
    generator : BlockEncoding
        parameterized wave generator on (sel | design | x | y)
    plan : EvolutionPlan
        truncation for generator.alpha and t
    evolution : BlockEncoding
        encoding of exp(-A t), built on first access
    initial : StateVector
        initial state on (sel | x | y)
    """

    def __init__(self, series: FourierSeries, grid: GridSpec, space: DesignSpace, t: float, eps_hs: float,
                 backend: str = "auto", center=DEFAULT_CENTER):
        if grid.d != 2 or series.dims != 2:
            raise DimensionMismatch("ForwardPipeline needs a two-dimensional grid and series")
        if space.names != [name for name in SHIFT_PARAMETERS if name in space.names]:
            raise InconsistentDesignLayout(
                f"ForwardPipeline, design parameters must be an ordered subset of {SHIFT_PARAMETERS}: {space.names}"
            )
        self.series = series
        self.grid = grid
        self.space = space
        self.t = t
        self.eps_hs = eps_hs
        widths, maps = [], []
        for axis, name in enumerate(SHIFT_PARAMETERS):
            if name in space.names:
                _, m, lo, hi = space.params[space.names.index(name)]
                widths.append(m)
                maps.append(self._shift_map(m, lo, hi, center[axis]))
            else:
                widths.append(0)
                maps.append(None)
        self.coefficient = param_diag_be_shift(series, grid.n, widths, shift_map=maps, label="C(xi)")
        if self.coefficient.design_layout != space.layout:
            raise InconsistentDesignLayout(
                f"ForwardPipeline, coefficient layout {self.coefficient.design_layout} != {space.layout}"
            )
        self.generator = assemble_param("wave", self.coefficient, grid, backend)
        self.plan = plan_evolution(self.generator.alpha, t, eps_hs)
        self._evolution = None
        self._sectors = None
        self.initial = prepare_initial(grid)
        logging.info(
            f"ForwardPipeline: {space.size} design sectors, generator alpha {self.generator.alpha:.6g}, R = {self.plan.R}"
        )

    @staticmethod
    def _shift_map(m, lo, hi, center):
        values = register_value_map(m, lo, hi)
        return lambda b: center - values[np.asarray(b, dtype=np.int64)]

    @property
    def evolution(self) -> BlockEncoding:
        if self._evolution is None:
            self._evolution = evolution_encoding(self.generator, self.plan)
        return self._evolution

    def coefficient_values(self, sector: int) -> np.ndarray:
        """
        c^F on the grid for one design sector, shape (2^n_x, 2^n_y)
        """
        size = self.grid.size
        values = self.coefficient.alpha * self.coefficient.raw_diagonal[sector * size : (sector + 1) * size]
        return values.real.reshape(2 ** self.grid.n[0], 2 ** self.grid.n[1])

    def matrix_state(self, sector: int) -> StateVector:
        """
        exp(-A(xi) t) w0 for one sector by dense matrix exponential
        """
        a = wave_generator_matrix(self.coefficient_values(sector), self.grid)
        return evolve_exact(a, self.initial, self.t)

    def _sector_inputs(self, sectors) -> np.ndarray:
        w0 = self.initial.amplitudes.reshape(4, self.grid.size)
        columns = np.zeros((4, self.space.size, self.grid.size, len(sectors)), dtype=complex)
        for col, b in enumerate(sectors):
            columns[:, b, :, col] = w0
        return columns.reshape(-1, len(sectors))

    def blockenc_sectors(self, workers: int = None):
        """
        Projected evolution block applied to w0 in every design sector.

        Returns
        -------
        (numpy.ndarray, numpy.ndarray)
            vectors of shape (sectors, 4 * grid size), unnormalized, and the success
            probabilities (their squared norms)
        """
        if self._sectors is not None:
            return self._sectors
        sectors = np.arange(self.space.size)
        e = self.evolution
        workers = 1 if workers is None else max(1, min(int(workers), limits["max_threads"]))
        chunks = np.array_split(sectors, min(workers, sectors.size))

        def run(chunk):
            out = e.apply_projected(self._sector_inputs(chunk))
            out = out.reshape(4, self.space.size, self.grid.size, len(chunk))
            return np.stack([out[:, b, :, col].reshape(-1) for col, b in enumerate(chunk)])

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run, chunks))
        else:
            parts = [run(c) for c in chunks]
        vectors = np.concatenate(parts, axis=0)
        probs = np.sum(np.abs(vectors) ** 2, axis=1)
        logging.info(f"blockenc_sectors: success probabilities in [{probs.min():.3e}, {probs.max():.3e}]")
        self._sectors = (vectors, probs)
        return self._sectors

    def matrix_sectors(self, workers: int = None) -> np.ndarray:
        """
        Dense evolved states of every sector, shape (sectors, 4 * grid size)
        """
        sectors = range(self.space.size)
        workers = 1 if workers is None else max(1, min(int(workers), limits["max_threads"]))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                states = list(pool.map(self.matrix_state, sectors))
        else:
            states = [self.matrix_state(b) for b in sectors]
        return np.stack([s.amplitudes for s in states])


# %% Objective


def objective_be(forward: ForwardPipeline, region: TargetRegion, initial: StateVector = None,
                 workers: int = None) -> BlockEncoding:
    """
    Diagonal encoding on the design register of (2 / alpha_for^2) G(xi) - 1, with
    G(xi) = sum over the region of |w(t, x, y; xi)|^2 and alpha_for the sub-normalization
    of the evolution encoding. The circuit is V^dagger (2 Pi_S - I) V, V the initial
    preparation followed by the evolution, Pi_S the projector on zero ancillas and the region.

    Parameters
    ----------
    forward : ForwardPipeline
        design-dependent evolution
    region : TargetRegion
        target region
    initial : StateVector
        initial state on (sel | x | y), default forward.initial
    workers : int
        threads over design sectors

    Returns
    -------
    BlockEncoding
        (1, ancillas, eps) encoding, raw_diagonal holds the objective values

    Raises
    ------
    EmptyRegion
        if the region is empty
    ZeroSubnormalization
        if alpha_for is zero
    """
    grid = forward.grid
    e = forward.evolution
    alpha_for = e.alpha
    if alpha_for == 0.0:
        raise ZeroSubnormalization("objective_be: the forward encoding has alpha = 0")
    mask = region.state_mask(grid)
    if initial is not None and initial.amplitudes.size != 4 * grid.size:
        raise DimensionMismatch(f"objective_be: initial state of size {initial.amplitudes.size}")
    if initial is None or np.allclose(initial.amplitudes, forward.initial.amplitudes):
        vectors, _ = forward.blockenc_sectors(workers)
        custom = None
    else:
        custom = initial
        inputs = np.zeros((4, forward.space.size, grid.size, forward.space.size), dtype=complex)
        for b in range(forward.space.size):
            inputs[:, b, :, b] = initial.amplitudes.reshape(4, grid.size)
        out = e.apply_projected(inputs.reshape(-1, forward.space.size))
        out = out.reshape(4, forward.space.size, grid.size, forward.space.size)
        vectors = np.stack([out[:, b, :, b].reshape(-1) for b in range(forward.space.size)])
    scaled = np.sum(np.abs(vectors[:, mask]) ** 2, axis=1)
    raw = 2.0 * scaled - 1.0

    md = forward.space.total_qubits
    base = e.work_qubits + e.ancillas
    state_qubits = 2 + grid.total_qubits
    total = base + state_qubits + md
    # E is laid out (work | anc | sel | design | x | y), the objective (work | anc sel x y | design)
    mapping = list(range(base + 2)) + list(range(total - md, total)) + list(range(base + 2, base + state_qubits))
    state_targets = list(range(base, base + state_qubits))

    def build():
        if custom is None:
            prep = initial_state_circuit(grid).remap([base + q for q in range(state_qubits)])
        else:
            prep = sv.prepare(state_targets, state_completion(custom.amplitudes), label="PREP_w0")
        v = sv.compose([prep, e.action.remap(mapping)], label="V")
        if base > 0:
            reflect = sv.compose(
                [
                    sv.controlled(range(base), (0,) * base, sv.reflection(state_targets, mask)),
                    sv.reflection(list(range(base))),
                ],
                label="2Pi_S-I",
            )
        else:
            reflect = sv.reflection(state_targets, mask, label="2Pi_S-I")
        return sv.compose([v, reflect, sv.adjoint(v)], label="objective")

    delta = e.eps + forward.plan.tail
    eps = 2.0 * (2.0 + delta) * delta / alpha_for**2
    extra_toffolis = and_ladder_toffolis(base + state_qubits) + (and_ladder_toffolis(base) if base > 1 else 0)

    def reference():
        states = forward.matrix_sectors(workers)
        g = np.sum(np.abs(states[:, mask]) ** 2, axis=1)
        return np.diag(2.0 * g / alpha_for**2 - 1.0)

    u = BlockEncoding(
        "objective",
        1.0,
        e.ancillas + state_qubits,
        eps,
        md,
        action=build,
        projected=lambda x: raw[:, None] * x,
        projected_adjoint=lambda x: raw[:, None] * x,
        work_qubits=e.work_qubits,
        counters=e.counters + adjoint(e).counters,
        gate_count=2 * e.gate_count + gate_costs["toffoli"] * extra_toffolis,
        toffolis=2 * e.toffolis + extra_toffolis,
        oracle_gates=2 * e.oracle_gates,
        reference=reference if custom is None else None,
        raw_diagonal=raw.astype(complex),
        design_layout=forward.space.layout,
    )
    logging.info(f"objective_be: {forward.space.size} sectors, alpha_for {alpha_for:.6g}, eps {eps:.3e}")
    return u


def objective_value(diagonal, alpha_for: float) -> np.ndarray:
    """
    F(xi) = sqrt(G(xi)) from the encoded diagonal (2 / alpha_for^2) G - 1
    """
    g = alpha_for**2 * (np.asarray(diagonal, dtype=float) + 1.0) / 2.0
    return np.sqrt(np.clip(g, 0.0, None))


# %% Landscape


LANDSCAPE_MODES = ("matrix", "blockenc")


def landscape(forward: ForwardPipeline, region: TargetRegion, modes=LANDSCAPE_MODES, workers: int = None) -> pd.DataFrame:
    """
    F(xi) over every design sector

    Parameters
    ----------
    forward : ForwardPipeline
        design-dependent evolution
    region : TargetRegion
        target region
    modes : iterable of str
        "matrix" (dense exponential per sector) and/or "blockenc" (objective encoding)
    workers : int
        threads over design sectors

    Returns
    -------
    pandas.DataFrame
        one row per sector in register order: the design values, F_matrix, F_blockenc,
        success_prob (NaN for modes not requested)
    """
    modes = tuple(modes)
    for mode in modes:
        if mode not in LANDSCAPE_MODES:
            raise ValueError(f"landscape, unknown mode {mode}, choose among {LANDSCAPE_MODES}")
    table = forward.space.table()
    nan = np.full(forward.space.size, np.nan)
    table["F_matrix"] = nan
    table["F_blockenc"] = nan
    table["success_prob"] = nan
    mask = region.state_mask(forward.grid)
    if "matrix" in modes:
        states = forward.matrix_sectors(workers)
        table["F_matrix"] = np.sqrt(np.sum(np.abs(states[:, mask]) ** 2, axis=1))
    if "blockenc" in modes:
        objective = objective_be(forward, region, workers=workers)
        table["F_blockenc"] = objective_value(objective.raw_diagonal.real, forward.evolution.alpha)
        table["success_prob"] = forward.blockenc_sectors(workers)[1]
    logging.info(f"landscape: modes {modes}, {forward.space.size} cells")
    return table


def objective_table(forward: ForwardPipeline, region: TargetRegion, workers: int = None) -> pd.DataFrame:
    """
    Design values with G(xi) and the raw encoded diagonal (2 / alpha_for^2) G - 1
    """
    objective = objective_be(forward, region, workers=workers)
    table = forward.space.table()
    diagonal = objective.raw_diagonal.real
    table["G"] = objective_value(diagonal, forward.evolution.alpha) ** 2
    table["diagonal"] = diagonal
    return table


def front_position(state, grid: GridSpec, component: int = 0) -> np.ndarray:
    """
    Distance travelled from the right edge by the selected component, per y row:
    1 - (amplitude-weighted mean of x), weights |w|^2 along x

    Parameters
    ----------
    state : StateVector or array-like
        state on (sel | x | y)
    grid : GridSpec
        two-dimensional grid
    component : int
        selector value

    Returns
    -------
    numpy.ndarray
        one value per y grid point
    """
    amplitudes = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if amplitudes.size != 4 * grid.size:
        raise DimensionMismatch(f"front_position: state of size {amplitudes.size} for {wave_layout(grid)}")
    weights = np.abs(amplitudes.reshape(4, 2 ** grid.n[0], 2 ** grid.n[1])[component]) ** 2
    totals = weights.sum(axis=0)
    x = grid.points(0)
    mean_x = np.divide(x @ weights, totals, out=np.ones_like(totals), where=totals > 0)
    return 1.0 - mean_x
