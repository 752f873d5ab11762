"""
This module includes the diagonal block-encodings of spatially varying coefficients:
the Fourier LCU encoder and its design-shifted variant, the register-value (probability
oracle) encoder, the comparator flag and the piecewise encoder with adjustable intervals
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
from collections import Counter

import numpy as np

from qpde_design import statevector as sv
from qpde_design._circuit_auxiliary_functions import ceil_log2, multiplexed_ry
from qpde_design.block_encoding import (
    BlockEncoding,
    StatePreparationPair,
    rescale_alpha,
    pad_ancillas,
    extend_system,
)
from qpde_design.exceptions import (
    GridParameterOutsideBoundaries,
    EncodingParameterOutsideBoundaries,
    ZeroSubnormalization,
    InvalidRange,
    OverlappingFlagPatterns,
    DimensionMismatch,
)
from qpde_design.fourier_series import FourierSeries
from qpde_design.units import units, grid_limits, encoding_limits, gate_costs

AXIS_NAMES = ("x", "y")


class DiagonalSpec:
    """
    Coordinate register of one axis: n qubits, grid points x_j = j / (2^n - 1)

    ...

    Attributes
    ----------
    n : int
        qubits
    size : int
        2^n
    points : numpy.ndarray
        coordinates in [0, 1]
    h : float
        grid spacing
    """

    def __init__(self, n: int):
        self.n = n

    @property
    def n(self) -> int:
        return self._n

    @n.setter
    def n(self, value: int):
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise TypeError(f"DiagonalSpec, n is not an int: {value}")
        if value < grid_limits["qubits_per_axis"][0] or value > grid_limits["qubits_per_axis"][1]:
            raise GridParameterOutsideBoundaries(
                "DiagonalSpec", "n", lim=grid_limits["qubits_per_axis"], unit=units["qubits"], value=value
            )
        self._n = value

    @property
    def size(self) -> int:
        return 2**self._n

    @property
    def h(self) -> float:
        return 1.0 / (self.size - 1)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.size) * self.h

    def __repr__(self):
        return f"DiagonalSpec(n={self._n})"


def _as_specs(specs, dims):
    if isinstance(specs, (int, np.integer, DiagonalSpec)):
        specs = [specs]
    specs = [s if isinstance(s, DiagonalSpec) else DiagonalSpec(s) for s in specs]
    if len(specs) != dims:
        raise DimensionMismatch(f"{len(specs)} axis specifications for a {dims}-dimensional series")
    return specs


def default_shift_map(m: int):
    """
    Register value b -> b / (2^m - 1)
    """
    return lambda b: np.asarray(b, dtype=float) / (2**m - 1)


def _fourier_encoding(series: FourierSeries, specs, design_qubits, shift_maps, label):
    """
    Shared builder: LCU over e^{i pi k x} phase unitaries, optionally with design phases
    e^{i pi k delta(b)} on per-axis design registers placed ahead of the coordinates.
    """
    dims = series.dims
    specs = _as_specs(specs, dims)
    alpha = series.l1_norm
    if alpha == 0.0:
        raise ZeroSubnormalization(f"{label}: all Fourier coefficients are zero")
    degrees = series.degrees[:dims]
    widths = [ceil_log2(2 * k + 1) for k in degrees]
    ms = list(design_qubits)
    anc = sum(widths)
    sys_n = sum(ms) + sum(s.n for s in specs)

    padded = np.zeros([2**w for w in widths], dtype=complex)
    if dims == 1:
        padded[: 2 * degrees[0] + 1] = series.coefficients[:, 0]
    else:
        padded[: 2 * degrees[0] + 1, : 2 * degrees[1] + 1] = series.coefficients
    prep = StatePreparationPair(padded.reshape(-1))

    anc_regs, start = [], 0
    for w in widths:
        anc_regs.append(list(range(start, start + w)))
        start += w
    design_regs = []
    for m in ms:
        design_regs.append(list(range(start, start + m)))
        start += m
    coord_regs = []
    for s in specs:
        coord_regs.append(list(range(start, start + s.n)))
        start += s.n

    def phase_table(k, w, values):
        v = np.arange(2**w)
        freq = np.where(v <= 2 * k, v - k, 0)
        return np.pi * np.outer(freq, values).reshape(-1)

    def build():
        steps = [sv.prepare(list(range(anc)), prep.prep_right, label="PREP_R")]
        for axis in range(dims):
            if widths[axis] == 0:
                continue
            steps.append(
                sv.phase_diag(
                    anc_regs[axis] + coord_regs[axis],
                    phase_table(degrees[axis], widths[axis], specs[axis].points),
                    label=f"U_{AXIS_NAMES[axis]}",
                )
            )
            if ms[axis] > 0:
                deltas = shift_maps[axis](np.arange(2 ** ms[axis]))
                steps.append(
                    sv.phase_diag(
                        anc_regs[axis] + design_regs[axis],
                        phase_table(degrees[axis], widths[axis], deltas),
                        label=f"U_xi_{AXIS_NAMES[axis]}",
                    )
                )
        steps.append(sv.adjoint(sv.prepare(list(range(anc)), prep.prep_left, label="PREP_L")))
        return sv.compose(steps)

    # encoded values per design sector, design registers most significant
    sectors = [np.arange(2**m) for m in ms]
    shifts = [
        shift_maps[axis](sectors[axis]) if ms[axis] > 0 else np.zeros(1) for axis in range(dims)
    ]
    grid = [s.points for s in specs]
    values, exact = [], []
    for index in np.ndindex(*[len(d) for d in shifts]):
        delta = [shifts[axis][index[axis]] for axis in range(dims)]
        shifted = series.shifted(*delta)
        values.append(shifted.evaluate_grid(*grid).reshape(-1))
        if series.source is not None:
            if dims == 1:
                exact.append(series.source_values(grid[0] + delta[0]).reshape(-1))
            else:
                xx, yy = np.meshgrid(grid[0] + delta[0], grid[1] + delta[1], indexing="ij")
                exact.append(series.source_values(xx, yy).reshape(-1))
    values = np.concatenate(values)
    exact = np.concatenate(exact) if exact else None
    eps = series.residual
    if exact is not None:
        eps = max(eps, float(np.max(np.abs(exact - values))))
    raw = values / alpha
    target = exact if exact is not None else values

    gates = prep.gate_count + gate_costs["controlled_phase"] * sum(
        w * (m + s.n) for w, m, s in zip(widths, ms, specs)
    )
    layout = tuple((f"xi_{AXIS_NAMES[a]}", ms[a]) for a in range(dims) if ms[a] > 0) or None
    u = BlockEncoding(
        label,
        alpha,
        anc,
        eps,
        sys_n,
        action=build,
        projected=lambda x: raw[:, None] * x,
        projected_adjoint=lambda x: np.conj(raw)[:, None] * x,
        gate_count=gates,
        reference=lambda: np.diag(target),
        raw_diagonal=raw,
        design_layout=layout,
    )
    logging.debug(f"Built {u.label}: alpha={u.alpha}, a={u.ancillas}, eps={u.eps}, n={u.sys_qubits}")
    return u


def diag_be_fourier(series: FourierSeries, specs, label: str = "C_f") -> BlockEncoding:
    """
    (sum |c|, sum_axes ceil(log2(2K + 1)), residual)-block-encoding of diag(f^F(x_j, y_l))

    Parameters
    ----------
    series : FourierSeries
        truncated series; its residual is the error bound
    specs : DiagonalSpec, int or list of them
        coordinate register per axis
    label : str
        name

    Returns
    -------
    BlockEncoding
    """
    return _fourier_encoding(series, specs, [0] * series.dims, [None] * series.dims, label)


def param_diag_be_shift(
    series: FourierSeries, specs, m, shift_map=None, label: str = "C_f(xi)"
) -> BlockEncoding:
    """
    Encoding of sum_xi |xi><xi| x diag(f^F(x + delta_x(xi_x), y + delta_y(xi_y))) with per-axis
    design registers ahead of the coordinate registers, and the same ancillas as
    diag_be_fourier

    Parameters
    ----------
    series : FourierSeries
        truncated series
    specs : DiagonalSpec, int or list of them
        coordinate register per axis
    m : int or list of int
        design qubits per axis, 0 leaves the axis unshifted
    shift_map : callable or list of callables
        register value -> shift delta per axis, default b / (2^m - 1)
    label : str
        name

    Returns
    -------
    BlockEncoding
    """
    dims = series.dims
    ms = [int(m)] * dims if np.isscalar(m) else [int(v) for v in m]
    if len(ms) != dims:
        raise DimensionMismatch(f"param_diag_be_shift: {len(ms)} design widths for {dims} axes")
    for v in ms:
        if v != 0 and (v < encoding_limits["design_qubits"][0] or v > encoding_limits["design_qubits"][1]):
            raise EncodingParameterOutsideBoundaries(
                label, "design_qubits", lim=encoding_limits["design_qubits"], unit=units["qubits"], value=v
            )
    if shift_map is None or callable(shift_map):
        maps = [shift_map or default_shift_map(v) for v in ms]
    else:
        maps = list(shift_map)
    return _fourier_encoding(series, specs, ms, maps, label)


def register_value_map(m: int, lo: float, hi: float) -> np.ndarray:
    return lo + (hi - lo) * np.arange(2**m) / (2**m - 1)


def diag_be_register_value(m: int, lo: float = 0.0, hi: float = 1.0, name: str = "xi") -> BlockEncoding:
    """
    (1, 1, 0)-block-encoding of sum_b v(b)|b><b|, v affine from lo (b = 0) to hi (b = 2^m - 1).
    A multiplexed R_y loads p(b) = (1 + v(b)) / 2 on one ancilla, W = U^dagger Z U has
    <0|W|0> = 2p - 1 = v.

    Raises
    ------
    InvalidRange
        if the range leaves [-1, 1] or hi <= lo
    """
    m = int(m)
    if m < encoding_limits["design_qubits"][0] or m > encoding_limits["design_qubits"][1]:
        raise EncodingParameterOutsideBoundaries(
            name, "design_qubits", lim=encoding_limits["design_qubits"], unit=units["qubits"], value=m
        )
    if not (-1.0 <= lo < hi <= 1.0):
        raise InvalidRange(f"diag_be_register_value: range [{lo}, {hi}] must satisfy -1 <= lo < hi <= 1")
    values = register_value_map(m, lo, hi)
    thetas = 2.0 * np.arccos(np.sqrt(np.clip((1.0 + values) / 2.0, 0.0, 1.0)))
    register = list(range(1, m + 1))

    def build():
        load = multiplexed_ry(register, 0, thetas)
        return sv.compose([load, sv.phase_diag((0,), [0.0, np.pi], label="Z"), sv.adjoint(load)])

    return BlockEncoding(
        f"V_{name}",
        1.0,
        1,
        0.0,
        m,
        action=build,
        projected=lambda x: values[:, None] * x,
        projected_adjoint=lambda x: values[:, None] * x,
        gate_count=2 * gate_costs["cnot"] * 2**m,
        reference=np.diag(values),
        raw_diagonal=values,
        design_layout=((name, m),),
    )


# %% Comparator and piecewise encoder


def comparator_toffolis(n: int, m: int) -> int:
    # ripple comparator
    return 2 * max(int(n), int(m))


def comparator_flag(n: int, m: int, x_qubits=None, xi_qubits=None, flag: int = None) -> sv.ActionNode:
    """
    |x>|xi>|f> -> |x>|xi>|f XOR [x >= xi]> on integer register values (threshold inclusive).
    Default layout: x on qubits 0..n-1, xi on n..n+m-1, flag on n+m.

    Parameters
    ----------
    n, m : int
        widths of the coordinate and threshold registers
    x_qubits, xi_qubits : list of int
        placement of the registers
    flag : int
        flag qubit

    Returns
    -------
    ActionNode
        self-inverse permutation
    """
    n, m = int(n), int(m)
    x_qubits = list(range(n)) if x_qubits is None else list(x_qubits)
    xi_qubits = list(range(n, n + m)) if xi_qubits is None else list(xi_qubits)
    flag = n + m if flag is None else int(flag)
    if len(x_qubits) != n or len(xi_qubits) != m:
        raise DimensionMismatch(f"comparator_flag: register placement does not match n={n}, m={m}")
    index = np.arange(2 ** (n + m + 1))
    x = index >> (m + 1)
    xi = (index >> 1) & (2**m - 1)
    image = index ^ (x >= xi).astype(np.int64)
    return sv.permutation(x_qubits + xi_qubits + [flag], image, label=">=")


def piecewise_diag_be(pieces, specs, m: int, label: str = "C_pw") -> BlockEncoding:
    """
    Diagonal encoding of a piecewise coefficient: piece i replaces the previous ones where
    x >= xi_i, with xi_i held in a threshold register of m qubits. Flags are computed by
    comparators on the x coordinate, piece i acts when its flag is 1 and all later flags
    are 0, flags are then uncomputed.

    Parameters
    ----------
    pieces : list of (FourierSeries, str or None)
        series and threshold register name; the first piece has no threshold
    specs : DiagonalSpec, int or list of them
        coordinate registers
    m : int
        qubits per threshold register
    label : str
        name

    Returns
    -------
    BlockEncoding
        system (threshold registers | x | y), alpha the largest piece alpha

    Raises
    ------
    OverlappingFlagPatterns
        if the threshold registers do not give each piece its own flag pattern
    """
    pieces = list(pieces)
    if not pieces:
        raise OverlappingFlagPatterns(f"{label}: at least one piece is needed")
    thresholds = [t for _, t in pieces]
    if thresholds[0] is not None:
        raise OverlappingFlagPatterns(f"{label}: the first piece cannot have a threshold")
    if any(t is None for t in thresholds[1:]) or len(set(thresholds[1:])) != len(thresholds) - 1:
        raise OverlappingFlagPatterns(f"{label}: every later piece needs its own threshold register")
    m = int(m)
    encodings = [diag_be_fourier(s, specs, label=f"{label}[{i}]") for i, (s, _) in enumerate(pieces)]
    n_sys = encodings[0].sys_qubits
    specs = _as_specs(specs, pieces[0][0].dims)
    nx = specs[0].n
    if len(pieces) == 1:
        return encodings[0].replace(label=label)

    alpha = max(e.alpha for e in encodings)
    scaled = [rescale_alpha(e, alpha) for e in encodings]
    a = max(e.ancillas for e in scaled)
    t_count = len(thresholds) - 1
    lead = t_count * m
    embedded = [extend_system(pad_ancillas(e, a), leading=lead) for e in scaled]
    work = t_count
    sys_start = work + a
    flags = list(range(t_count))
    x_qubits = [sys_start + lead + i for i in range(nx)]

    def comparators():
        return [
            comparator_flag(
                nx, m, x_qubits=x_qubits, xi_qubits=[sys_start + t * m + i for i in range(m)], flag=flags[t]
            )
            for t in range(t_count)
        ]

    def build():
        steps = comparators()
        for i, e in enumerate(embedded):
            mapping = list(range(work, work + a + e.sys_qubits))
            child = e.action.remap(mapping)
            controls = [flags[t] for t in range(i, t_count)]
            values = [0] * len(controls)
            if i > 0:
                controls = [flags[i - 1]] + controls
                values = [1] + values
            steps.append(sv.controlled(controls, values, child) if controls else child)
        return sv.compose(steps + comparators())

    total = lead + n_sys
    t_values = [sv.register_values(range(t * m, (t + 1) * m), total) for t in range(t_count)]
    coord = sv.register_values(range(lead, lead + nx), total)
    rest = sv.register_values(range(lead, total), total)
    active = np.zeros(2**total, dtype=np.int64)
    for t in range(t_count):
        active = np.where(coord >= t_values[t], t + 1, active)
    piece_raw = np.stack([e.raw_diagonal for e in scaled])
    raw = piece_raw[active, rest]

    def reference():
        piece_ref = np.stack([np.diag(e.reference) for e in encodings])
        return np.diag(piece_ref[active, rest])

    counters = sum((e.counters for e in embedded), Counter())
    toffolis = 2 * t_count * comparator_toffolis(nx, m) + sum(e.toffolis for e in embedded)
    gates = (
        sum(e.gate_count for e in embedded)
        + gate_costs["toffoli"] * 2 * t_count * comparator_toffolis(nx, m)
        + gate_costs["toffoli"] * len(embedded) * max(t_count - 1, 0)
    )
    u = BlockEncoding(
        label,
        alpha,
        a,
        max(e.eps for e in scaled),
        total,
        action=build,
        projected=lambda x: raw[:, None] * x,
        projected_adjoint=lambda x: np.conj(raw)[:, None] * x,
        work_qubits=work,
        counters=counters,
        gate_count=gates,
        toffolis=toffolis,
        oracle_gates=sum(e.oracle_gates for e in embedded),
        reference=reference,
        raw_diagonal=raw,
        design_layout=tuple((name, m) for name in thresholds[1:]),
    )
    logging.debug(f"Built {u.label}: alpha={u.alpha}, a={u.ancillas}, eps={u.eps}, n={u.sys_qubits}")
    return u
