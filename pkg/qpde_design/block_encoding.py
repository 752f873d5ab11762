"""
This module includes the block-encoding calculus: the BlockEncoding class with its
(alpha, ancillas, eps) bookkeeping, and the constructions combining encodings
(product, linear combination, selector blocks, adjoint, controlled, Chebyshev iterates),
their materialization and verification.

Every encoding carries two equivalent descriptions of the same unitary U:
a circuit (ActionNode over work | ancilla | system qubits, built lazily) and the exact
projected block x -> (<0| x I) U (|0> x I) x with its adjoint. Circuits are simulated
when small enough, the projected maps are used beyond that.
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
from collections import Counter

import numpy as np
import scipy.linalg

from qpde_design import statevector as sv
from qpde_design._circuit_auxiliary_functions import (
    ceil_log2,
    and_ladder_toffolis,
    state_completion,
    prep_amplitudes,
    flag_on_value,
    ry,
)
from qpde_design.core_linalg import (
    as_matrix,
    check_cap,
    max_abs,
    spectral_norm,
    unitarity_deviation as _matrix_unitarity_deviation,
)
from qpde_design.exceptions import (
    EncodingParameterOutsideBoundaries,
    ZeroSubnormalization,
    DimensionMismatch,
    EmptyTermList,
    ZeroNormCoefficients,
    InvalidSelectorIndex,
    IncompatibleBlockEncodings,
    NonHermitianReference,
    InconsistentDesignLayout,
    MaterializationTooLarge,
    VerificationFailure,
    InvalidMatrix,
)
from qpde_design.units import units, encoding_limits, gate_costs, limits, tolerances


def _as_columns(x, rows):
    x = np.asarray(x, dtype=complex)
    if x.shape[0] != rows:
        raise DimensionMismatch(f"Expected {rows} rows, got {x.shape[0]}")
    return x.reshape(rows, -1), x.ndim == 1


def _merge_design_layouts(*encodings):
    layouts = {tuple(e.design_layout) for e in encodings if e.design_layout is not None}
    if len(layouts) > 1:
        raise InconsistentDesignLayout(f"Design register layouts differ: {sorted(layouts)}")
    return layouts.pop() if layouts else None


def _dagger_label(label: str) -> str:
    suffix = "^dagger"
    return label[: -len(suffix)] if label.endswith(suffix) else label + suffix


class BlockEncoding:
    """
    A unitary U on (work | ancilla | system) qubits whose top-left block, with work and
    ancilla qubits in |0>, equals A / alpha within eps

    ...

    Attributes
    ----------
    label : str
        name used in logs and counters
    alpha : float
        sub-normalization
    ancillas : int
        ancilla count a
    eps : float
        error bound
    sys_qubits : int
        system qubits n
    work_qubits : int
        clean work qubits, returned to |0> by the circuit and shared between constructions
    counters : collections.Counter
        oracle label -> number of queries
    gate_count : int
        two-qubit gate estimate
    toffolis : int
        Toffoli gates included in gate_count
    oracle_gates : int
        two-qubit gates spent inside oracle queries
    design_layout : tuple of (str, int) or None
        design registers carried by the system register

    Methods
    -------
    action
        the circuit (ActionNode), built on first access
    apply_projected(x), apply_projected_adjoint(x)
        raw block (without alpha) and its adjoint applied to columns of x
    apply_circuit(x)
        raw block computed by simulating the circuit
    reference
        the encoded operator when attached (dense, evaluated lazily)
    """

    def __init__(
        self,
        label: str,
        alpha: float,
        ancillas: int,
        eps: float,
        sys_qubits: int,
        action,
        projected,
        projected_adjoint,
        work_qubits: int = 0,
        counters=None,
        gate_count: int = 0,
        toffolis: int = 0,
        oracle_gates: int = 0,
        reference=None,
        raw_diagonal=None,
        design_layout=None,
    ):
        self.label = str(label)
        self.alpha = alpha
        self.ancillas = ancillas
        self.eps = eps
        self.sys_qubits = sys_qubits
        self.work_qubits = work_qubits
        self._action = action
        self._projected = projected
        self._projected_adjoint = projected_adjoint
        self.counters = Counter(counters or {})
        self.gate_count = int(gate_count)
        self.toffolis = int(toffolis)
        self.oracle_gates = int(oracle_gates)
        self.reference = reference
        self.raw_diagonal = None if raw_diagonal is None else np.asarray(raw_diagonal, dtype=complex)
        self.design_layout = None if design_layout is None else tuple(
            (str(name), int(m)) for name, m in design_layout
        )

    @property
    def alpha(self) -> float:
        return self._alpha

    @alpha.setter
    def alpha(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"BlockEncoding {self.label}, alpha is not a float: {value}")
        if value == 0.0:
            raise ZeroSubnormalization(f"BlockEncoding {self.label} has alpha = 0")
        if value < encoding_limits["alpha"][0] or value > encoding_limits["alpha"][1]:
            raise EncodingParameterOutsideBoundaries(
                self.label,
                "alpha",
                lim=encoding_limits["alpha"],
                unit=units["subnormalization"],
                value=value,
            )
        self._alpha = value

    @property
    def ancillas(self) -> int:
        return self._ancillas

    @ancillas.setter
    def ancillas(self, value: int):
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise TypeError(f"BlockEncoding {self.label}, ancillas is not an int: {value}")
        if value < encoding_limits["ancillas"][0] or value > encoding_limits["ancillas"][1]:
            raise EncodingParameterOutsideBoundaries(
                self.label,
                "ancillas",
                lim=encoding_limits["ancillas"],
                unit=units["qubits"],
                value=value,
            )
        self._ancillas = value

    @property
    def eps(self) -> float:
        return self._eps

    @eps.setter
    def eps(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"BlockEncoding {self.label}, eps is not a float: {value}")
        if not value >= encoding_limits["eps"][0] or value > encoding_limits["eps"][1]:
            raise EncodingParameterOutsideBoundaries(
                self.label,
                "eps",
                lim=encoding_limits["eps"],
                unit=units["error"],
                value=value,
            )
        self._eps = value

    @property
    def sys_qubits(self) -> int:
        return self._sys_qubits

    @sys_qubits.setter
    def sys_qubits(self, value: int):
        value = int(value)
        if value < 0:
            raise DimensionMismatch(f"BlockEncoding {self.label}, negative system size {value}")
        self._sys_qubits = value

    @property
    def work_qubits(self) -> int:
        return self._work_qubits

    @work_qubits.setter
    def work_qubits(self, value: int):
        value = int(value)
        if value < 0:
            raise DimensionMismatch(f"BlockEncoding {self.label}, negative work qubits {value}")
        self._work_qubits = value

    @property
    def reference(self):
        if callable(self._reference):
            self._reference = as_matrix(self._reference())
        return self._reference

    @reference.setter
    def reference(self, value):
        if value is not None and not callable(value):
            value = as_matrix(value)
        self._reference = value

    @property
    def has_reference(self) -> bool:
        return self._reference is not None

    @property
    def action(self) -> sv.ActionNode:
        if callable(self._action):
            self._action = self._action()
        return self._action

    @property
    def num_qubits(self) -> int:
        return self._work_qubits + self._ancillas + self._sys_qubits

    @property
    def dim(self) -> int:
        return 2**self._sys_qubits

    def work_indices(self) -> list:
        return list(range(self._work_qubits))

    def ancilla_indices(self) -> list:
        return list(range(self._work_qubits, self._work_qubits + self._ancillas))

    def system_indices(self) -> list:
        start = self._work_qubits + self._ancillas
        return list(range(start, start + self._sys_qubits))

    @property
    def triple(self) -> tuple:
        return (self._alpha, self._ancillas, self._eps)

    def apply_projected(self, x) -> np.ndarray:
        x, vector = _as_columns(x, self.dim)
        out = self._projected(x)
        return out.reshape(-1) if vector else out

    def apply_projected_adjoint(self, x) -> np.ndarray:
        x, vector = _as_columns(x, self.dim)
        out = self._projected_adjoint(x)
        return out.reshape(-1) if vector else out

    def circuit_feasible(self, columns: int = 1) -> bool:
        return 2**self.num_qubits * columns <= limits["circuit_amplitude_cap"]

    def apply_circuit(self, x, inverse: bool = False) -> np.ndarray:
        """
        Raw block applied to x by simulating the full circuit on |0_work 0_anc> x
        """
        x, vector = _as_columns(x, self.dim)
        if not self.circuit_feasible(x.shape[1]):
            raise MaterializationTooLarge(
                f"Circuit of {self.label} needs 2^{self.num_qubits} x {x.shape[1]} amplitudes"
            )
        full = np.zeros((2**self.num_qubits, x.shape[1]), dtype=complex)
        full[: self.dim] = x
        out = sv.apply_array(self.action, full, self.num_qubits, inverse=inverse)[: self.dim]
        return out.reshape(-1) if vector else out

    def replace(self, **changes):
        """
        Copy with some fields replaced
        """
        fields = dict(
            label=self.label,
            alpha=self._alpha,
            ancillas=self._ancillas,
            eps=self._eps,
            sys_qubits=self._sys_qubits,
            action=self._action,
            projected=self._projected,
            projected_adjoint=self._projected_adjoint,
            work_qubits=self._work_qubits,
            counters=self.counters,
            gate_count=self.gate_count,
            toffolis=self.toffolis,
            oracle_gates=self.oracle_gates,
            reference=self._reference,
            raw_diagonal=self.raw_diagonal,
            design_layout=self.design_layout,
        )
        fields.update(changes)
        return BlockEncoding(**fields)

    def __repr__(self):
        return (
            f"BlockEncoding({self.label}: alpha={self._alpha:.6g}, a={self._ancillas}, "
            f"eps={self._eps:.3g}, n={self._sys_qubits}, work={self._work_qubits})"
        )


def _log_construction(u: BlockEncoding) -> BlockEncoding:
    logging.debug(
        f"Built {u.label}: alpha={u.alpha}, a={u.ancillas}, eps={u.eps}, n={u.sys_qubits}"
    )
    return u


# %% Elementary encodings


def identity_be(n: int) -> BlockEncoding:
    """
    (1, 0, 0)-block-encoding of the identity on n qubits
    """
    n = int(n)
    if n < 1:
        raise DimensionMismatch(f"identity_be needs at least one qubit, got {n}")
    return BlockEncoding(
        "I",
        1.0,
        0,
        0.0,
        n,
        action=sv.compose([]),
        projected=lambda x: x.copy(),
        projected_adjoint=lambda x: x.copy(),
        reference=lambda: np.eye(2**n, dtype=complex),
        raw_diagonal=np.ones(2**n),
    )


def scalar_identity_be(n: int, scale: float) -> BlockEncoding:
    """
    (1/scale, 1, 0)-block-encoding of the identity: one ancilla rotated so that the
    block is scale * I, 0 < scale <= 1
    """
    scale = float(scale)
    if not 0.0 < scale <= 1.0:
        raise EncodingParameterOutsideBoundaries(
            "scalar_identity_be", "scale", lim=[0.0, 1.0], unit=units["coefficient"], value=scale
        )
    theta = 2.0 * np.arccos(scale)
    return BlockEncoding(
        f"scale({scale:.6g})",
        1.0 / scale,
        1,
        0.0,
        n,
        action=lambda: sv.unitary((0,), ry(theta), label="Ry"),
        projected=lambda x: scale * x,
        projected_adjoint=lambda x: scale * x,
        gate_count=0,
        reference=lambda: np.eye(2**n, dtype=complex),
        raw_diagonal=np.full(2**n, scale),
    )


def dilation_be(matrix, alpha: float = None, label: str = "dilation") -> BlockEncoding:
    """
    (alpha, 1, 0)-block-encoding of a dense matrix B by the unitary completion
    [[B/alpha, sqrt(I - BB^dagger/alpha^2)], [sqrt(I - B^dagger B/alpha^2), -B^dagger/alpha]]

    Parameters
    ----------
    matrix : array-like
        square matrix of size 2^n
    alpha : float
        sub-normalization, at least the spectral norm; default spectral norm * (1 + 1e-6)
    label : str
        name

    Returns
    -------
    BlockEncoding
    """
    b = as_matrix(matrix)
    size = b.shape[0]
    n = ceil_log2(size)
    if b.shape != (size, size) or 2**n != size:
        raise InvalidMatrix(f"dilation_be needs a square matrix of size 2^n, got {b.shape}")
    norm = float(scipy.linalg.svdvals(b)[0]) if b.size else 0.0
    if alpha is None:
        alpha = norm * (1.0 + 1e-6) if norm > 0 else 1.0
    elif alpha < norm * (1.0 - 1e-12):
        raise EncodingParameterOutsideBoundaries(
            label, "alpha", lim=[norm, None], unit=units["subnormalization"], value=alpha
        )
    bs = b / alpha

    def psd_sqrt(m):
        evals, evecs = scipy.linalg.eigh((m + m.conj().T) / 2)
        return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T

    def build():
        eye = np.eye(size)
        full = np.block(
            [
                [bs, psd_sqrt(eye - bs @ bs.conj().T)],
                [psd_sqrt(eye - bs.conj().T @ bs), -bs.conj().T],
            ]
        )
        return sv.unitary(tuple(range(n + 1)), full, label=label)

    gates = gate_costs["dense_unitary_base"] ** (n + 1)
    return _log_construction(
        BlockEncoding(
            label,
            alpha,
            1,
            0.0,
            n,
            action=build,
            projected=lambda x: bs @ x,
            projected_adjoint=lambda x: bs.conj().T @ x,
            gate_count=gates,
            reference=b,
            raw_diagonal=np.diag(bs).copy() if max_abs(b - np.diag(np.diag(b))) == 0 else None,
        )
    )


# %% Structural transformations


def embed_system(u: BlockEncoding, total: int, positions) -> BlockEncoding:
    """
    Act with u on the given positions of a larger system register, identity elsewhere
    """
    positions = [int(p) for p in positions]
    if len(positions) != u.sys_qubits or len(set(positions)) != len(positions):
        raise DimensionMismatch(f"embed_system: {len(positions)} positions for {u.sys_qubits} qubits")
    if positions and (min(positions) < 0 or max(positions) >= total):
        raise DimensionMismatch(f"embed_system: positions {positions} outside {total} qubits")
    w, a = u.work_qubits, u.ancillas
    mapping = list(range(w + a)) + [w + a + p for p in positions]

    def lift(fn):
        def mapped(x):
            return sv._on_targets(x, positions, total, lambda v: fn(v.reshape(2**u.sys_qubits, -1)).reshape(v.shape))

        return mapped

    others = [p for p in range(total) if p not in positions]

    def reference():
        # permute a kron(ref, I) into place
        ref = np.kron(u.reference, np.eye(2 ** len(others)))
        order = positions + others
        perm = sv.register_values(order, total)
        return ref[np.ix_(perm, perm)]

    raw_diagonal = None
    if u.raw_diagonal is not None:
        raw_diagonal = u.raw_diagonal[sv.register_values(positions, total)]
    return BlockEncoding(
        u.label,
        u.alpha,
        a,
        u.eps,
        total,
        action=lambda: u.action.remap(mapping),
        projected=lift(u._projected),
        projected_adjoint=lift(u._projected_adjoint),
        work_qubits=w,
        counters=u.counters,
        gate_count=u.gate_count,
        toffolis=u.toffolis,
        oracle_gates=u.oracle_gates,
        reference=reference if u.has_reference else None,
        raw_diagonal=raw_diagonal,
        design_layout=u.design_layout,
    )


def extend_system(u: BlockEncoding, leading: int = 0, trailing: int = 0) -> BlockEncoding:
    """
    Add idle system qubits before (more significant) and after the system register
    """
    total = leading + u.sys_qubits + trailing
    return embed_system(u, total, range(leading, leading + u.sys_qubits))


def pad_ancillas(u: BlockEncoding, ancillas: int) -> BlockEncoding:
    """
    Add leading idle ancillas up to the requested count
    """
    extra = int(ancillas) - u.ancillas
    if extra < 0:
        raise DimensionMismatch(f"pad_ancillas: {u.label} already has {u.ancillas} ancillas")
    if extra == 0:
        return u
    w = u.work_qubits
    mapping = list(range(w)) + [w + extra + i for i in range(u.ancillas + u.sys_qubits)]
    return u.replace(ancillas=u.ancillas + extra, action=lambda: u.action.remap(mapping))


def scale_phase(u: BlockEncoding, phase: complex, label: str = None) -> BlockEncoding:
    """
    Multiply the encoded operator by a unit-modulus phase (global phase on the circuit)
    """
    phase = complex(phase)
    if abs(abs(phase) - 1.0) > 1e-12:
        raise EncodingParameterOutsideBoundaries(
            u.label, "phase", lim=[1.0, 1.0], unit=units["coefficient"], value=abs(phase)
        )
    angle = float(np.angle(phase))
    return u.replace(
        label=label or f"{phase:.3g}*{u.label}",
        action=lambda: sv.compose([u.action, sv.global_phase(angle)]),
        projected=lambda x: phase * u._projected(x),
        projected_adjoint=lambda x: np.conj(phase) * u._projected_adjoint(x),
        reference=(lambda: phase * u.reference) if u.has_reference else None,
        raw_diagonal=None if u.raw_diagonal is None else phase * u.raw_diagonal,
    )


def as_oracle(u: BlockEncoding, label: str) -> BlockEncoding:
    """
    Treat an encoding as one query of the oracle `label` in counters
    """
    return u.replace(label=label, counters={label: 1}, oracle_gates=u.gate_count)


def rescale_alpha(u: BlockEncoding, alpha: float) -> BlockEncoding:
    """
    Same operator with a larger sub-normalization, using one extra ancilla
    """
    alpha = float(alpha)
    if np.isclose(alpha, u.alpha, rtol=1e-14, atol=0.0):
        return u
    if alpha < u.alpha:
        raise EncodingParameterOutsideBoundaries(
            u.label, "alpha", lim=[u.alpha, None], unit=units["subnormalization"], value=alpha
        )
    scaled = product(u, scalar_identity_be(u.sys_qubits, u.alpha / alpha))
    logging.info(f"rescale_alpha: {u.label} from {u.alpha} to {alpha}")
    return scaled.replace(label=u.label, alpha=alpha, eps=u.eps)


# %% Products, combinations and selectors


def product(u_a: BlockEncoding, u_b: BlockEncoding) -> BlockEncoding:
    """
    Block-encoding of A B. The circuit applies U_B then U_A on disjoint ancillas;
    metadata (alpha_A alpha_B, a_A + a_B, alpha_A eps_B + alpha_B eps_A)

    Parameters
    ----------
    u_a, u_b : BlockEncoding
        factors on the same system

    Returns
    -------
    BlockEncoding
    """
    if u_a.sys_qubits != u_b.sys_qubits:
        raise DimensionMismatch(
            f"product: system sizes differ ({u_a.sys_qubits} vs {u_b.sys_qubits})"
        )
    n = u_a.sys_qubits
    w = max(u_a.work_qubits, u_b.work_qubits)
    a_a, a_b = u_a.ancillas, u_b.ancillas
    sys_start = w + a_a + a_b
    map_a = list(range(u_a.work_qubits)) + [w + i for i in range(a_a)] + [sys_start + i for i in range(n)]
    map_b = (
        list(range(u_b.work_qubits))
        + [w + a_a + i for i in range(a_b)]
        + [sys_start + i for i in range(n)]
    )
    raw_diagonal = None
    if u_a.raw_diagonal is not None and u_b.raw_diagonal is not None:
        raw_diagonal = u_a.raw_diagonal * u_b.raw_diagonal
    return _log_construction(
        BlockEncoding(
            f"({u_a.label})*({u_b.label})",
            u_a.alpha * u_b.alpha,
            a_a + a_b,
            u_a.alpha * u_b.eps + u_b.alpha * u_a.eps,
            n,
            action=lambda: sv.compose([u_b.action.remap(map_b), u_a.action.remap(map_a)]),
            projected=lambda x: u_a._projected(u_b._projected(x)),
            projected_adjoint=lambda x: u_b._projected_adjoint(u_a._projected_adjoint(x)),
            work_qubits=w,
            counters=u_a.counters + u_b.counters,
            gate_count=u_a.gate_count + u_b.gate_count,
            toffolis=u_a.toffolis + u_b.toffolis,
            oracle_gates=u_a.oracle_gates + u_b.oracle_gates,
            reference=(lambda: u_a.reference @ u_b.reference)
            if u_a.has_reference and u_b.has_reference
            else None,
            raw_diagonal=raw_diagonal,
            design_layout=_merge_design_layouts(u_a, u_b),
        )
    )


class StatePreparationPair:
    """
    Pair of preparation unitaries (P_L, P_R) on ceil(log2 m) qubits with
    alpha_prep * conj(c_j) d_j = y_j w_j, c = P_L|0>, d = P_R|0>, alpha_prep = ||y||_1.
    The weights w_j (default 1) let terms of different sub-normalization share one LCU.

    ...

    Attributes
    ----------
    coefficients : numpy.ndarray
        y
    weights : numpy.ndarray
        per-term factors in (0, 1]
    m : int
        number of terms
    qubits : int
        ceil(log2 m)
    prep_left, prep_right : numpy.ndarray
        unitaries P_L, P_R
    eps_prep : float
        preparation error, 0
    """

    eps_prep: float = 0.0

    def __init__(self, coefficients, weights=None):
        y = np.asarray(coefficients, dtype=complex).reshape(-1)
        if y.size == 0:
            raise EmptyTermList("StatePreparationPair needs at least one coefficient")
        if not np.all(np.isfinite(y)):
            raise ZeroNormCoefficients(f"StatePreparationPair, non-finite coefficients {y}")
        l1 = float(np.sum(np.abs(y)))
        if l1 == 0.0:
            raise ZeroNormCoefficients("StatePreparationPair, ||y||_1 = 0")
        weights = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
        if weights.shape != y.shape or np.any(weights <= 0) or np.any(weights > 1 + 1e-12):
            raise ValueError(f"StatePreparationPair, weights must lie in (0, 1]: {weights}")
        self.coefficients = y
        self.weights = np.minimum(weights, 1.0)
        self.m = y.size
        self.qubits = ceil_log2(self.m)
        self.alpha_prep = l1
        self.left, self.right = prep_amplitudes(y * self.weights / l1, 2**self.qubits)
        self.prep_left = state_completion(self.left)
        self.prep_right = state_completion(self.right)

    @property
    def products(self) -> np.ndarray:
        """
        conj(c_j) d_j for the m terms
        """
        return np.conj(self.left[: self.m]) * self.right[: self.m]

    def with_weights(self, weights):
        return StatePreparationPair(self.coefficients, weights)

    @property
    def gate_count(self) -> int:
        # sparse preparation: M - 1 two-qubit gates per side
        support = int(np.count_nonzero(np.abs(self.coefficients) > 0))
        return 2 * max(support - 1, 0)


def lcu(prep: StatePreparationPair, terms) -> BlockEncoding:
    """
    Linear combination sum_j y_j A_j with PREP / SELECT / PREP^dagger.
    Metadata (alpha ||y||_1, max_j a_j + ceil(log2 m), eps ||y||_1) with alpha and eps the
    maxima over terms with y_j != 0. Terms with a smaller alpha are reweighted in the
    preparation pair; terms with fewer ancillas are padded with leading idle ancillas.
    Selector values j >= m apply the identity.

    Parameters
    ----------
    prep : StatePreparationPair
        coefficients y
    terms : list of BlockEncoding
        A_j, same system size

    Returns
    -------
    BlockEncoding
    """
    terms = list(terms)
    if not terms:
        raise EmptyTermList("lcu needs at least one term")
    if prep.m != len(terms):
        raise DimensionMismatch(f"lcu: {prep.m} coefficients for {len(terms)} terms")
    n = terms[0].sys_qubits
    for t in terms:
        if t.sys_qubits != n:
            raise DimensionMismatch(f"lcu: term {t.label} acts on {t.sys_qubits} qubits, expected {n}")
    y = prep.coefficients
    active = [t for t, c in zip(terms, y) if c != 0]
    alpha_max = max(t.alpha for t in active)
    eps_max = max(t.eps for t in active)
    weights = np.array([t.alpha / alpha_max if c != 0 else 1.0 for t, c in zip(terms, y)])
    if not np.allclose(weights, prep.weights, rtol=1e-14, atol=0.0):
        if np.any(weights < 1.0):
            logging.info(f"lcu: reweighting preparation for unequal alpha {[t.alpha for t in terms]}")
        prep = prep.with_weights(weights)
    k = prep.qubits
    a_max = max(t.ancillas for t in terms)
    w = max(t.work_qubits for t in terms)
    selector = list(range(w, w + k))
    sys_start = w + k + a_max
    products = prep.products
    l1 = prep.alpha_prep

    def term_map(t):
        return (
            list(range(t.work_qubits))
            + [w + k + (a_max - t.ancillas) + i for i in range(t.ancillas)]
            + [sys_start + i for i in range(n)]
        )

    def build():
        children = [t.action.remap(term_map(t)) for t in terms]
        return sv.compose(
            [
                sv.prepare(selector, prep.prep_right, label="PREP_R"),
                sv.select(selector, children, label="SELECT"),
                sv.adjoint(sv.prepare(selector, prep.prep_left, label="PREP_L")),
            ]
        )

    def projected(x):
        out = np.zeros_like(x)
        for p, t in zip(products, terms):
            if p != 0:
                out += p * t._projected(x)
        return out

    def projected_adjoint(x):
        out = np.zeros_like(x)
        for p, t in zip(products, terms):
            if p != 0:
                out += np.conj(p) * t._projected_adjoint(x)
        return out

    raw_diagonal = None
    if all(t.raw_diagonal is not None for t in terms):
        raw_diagonal = sum(p * t.raw_diagonal for p, t in zip(products, terms))
    counters = Counter()
    for t in terms:
        counters += t.counters
    select_toffolis = len(terms) * 2 * max(k - 1, 0)
    return _log_construction(
        BlockEncoding(
            "LCU[" + ", ".join(t.label for t in terms) + "]",
            alpha_max * l1,
            a_max + k,
            eps_max * l1,
            n,
            action=build,
            projected=projected,
            projected_adjoint=projected_adjoint,
            work_qubits=w,
            counters=counters,
            gate_count=sum(t.gate_count for t in terms)
            + prep.gate_count
            + gate_costs["toffoli"] * select_toffolis,
            toffolis=sum(t.toffolis for t in terms) + select_toffolis,
            oracle_gates=sum(t.oracle_gates for t in terms),
            reference=(lambda: sum(c * t.reference for c, t in zip(y, terms)))
            if all(t.has_reference for t in terms)
            else None,
            raw_diagonal=raw_diagonal,
            design_layout=_merge_design_layouts(*terms),
        )
    )


def _check_selector(j: int, k: int, allow_zero: bool = False):
    if int(k) < 1:
        raise InvalidSelectorIndex(f"Selector needs at least one qubit, got k={k}")
    if int(j) >= 2 ** int(k) or int(j) < 0 or (int(j) == 0 and not allow_zero):
        raise InvalidSelectorIndex(f"Selector index {j} not allowed for k={k}")


def selector_offdiag(j: int, u1: BlockEncoding, u2: BlockEncoding, k: int) -> BlockEncoding:
    """
    Block-encoding of M_j = |0><j| x A_1 + |j><0| x A_2 on a k-qubit selector prepended to
    the system. Two flag work qubits f_0, f_j mark the selector values 0 and j (AND ladders
    of 4k - 2 Toffolis, computed and uncomputed), SWAP_{0,j} routes the inputs, and an X on
    the first ancilla, controlled on both flags being 0, zeroes every other selector block.

    Parameters
    ----------
    j : int
        selector index, 1 <= j < 2^k
    u1, u2 : BlockEncoding
        encodings of A_1 and A_2 with the same alpha
    k : int
        selector qubits

    Returns
    -------
    BlockEncoding
        (alpha, max(a_1, a_2, 1), max(eps_1, eps_2))
    """
    _check_selector(j, k)
    if u1.sys_qubits != u2.sys_qubits:
        raise DimensionMismatch("selector_offdiag: system sizes differ")
    if not np.isclose(u1.alpha, u2.alpha, rtol=1e-12, atol=0.0):
        raise IncompatibleBlockEncodings(
            f"selector_offdiag: alpha differs ({u1.alpha} vs {u2.alpha})"
        )
    j, k = int(j), int(k)
    n = u1.sys_qubits
    a = max(u1.ancillas, u2.ancillas, 1)
    w = 2 + max(u1.work_qubits, u2.work_qubits)
    f0, fj, anc0 = 0, 1, w
    sel = list(range(w + a, w + a + k))
    sys_start = w + a + k

    def sub_map(u):
        return (
            [2 + i for i in range(u.work_qubits)]
            + [w + (a - u.ancillas) + i for i in range(u.ancillas)]
            + [sys_start + i for i in range(n)]
        )

    image = np.arange(2**k)
    image[0], image[j] = j, 0

    def build():
        return sv.compose(
            [
                sv.permutation(sel, image, label="SWAP_0j"),
                flag_on_value(sel, 0, f0),
                flag_on_value(sel, j, fj),
                sv.controlled((f0,), (1,), u1.action.remap(sub_map(u1))),
                sv.controlled((fj,), (1,), u2.action.remap(sub_map(u2))),
                sv.controlled((f0, fj), (0, 0), sv.flip(anc0)),
                flag_on_value(sel, j, fj),
                flag_on_value(sel, 0, f0),
            ]
        )

    dim = 2**n

    def projected(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[0] = u1._projected(xr[j])
        out[j] = u2._projected(xr[0])
        return out.reshape(x.shape)

    def projected_adjoint(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[j] = u1._projected_adjoint(xr[0])
        out[0] = u2._projected_adjoint(xr[j])
        return out.reshape(x.shape)

    def reference():
        ref = np.zeros((2**k * dim, 2**k * dim), dtype=complex)
        ref[0:dim, j * dim : (j + 1) * dim] = u1.reference
        ref[j * dim : (j + 1) * dim, 0:dim] = u2.reference
        return ref

    ladders = 4 * and_ladder_toffolis(k)
    own_gates = gate_costs["toffoli"] * (ladders + 1) + gate_costs["selector_swap_per_qubit"] * k
    return _log_construction(
        BlockEncoding(
            f"M_{j}[{u1.label}; {u2.label}]",
            max(u1.alpha, u2.alpha),
            a,
            max(u1.eps, u2.eps),
            k + n,
            action=build,
            projected=projected,
            projected_adjoint=projected_adjoint,
            work_qubits=w,
            counters=u1.counters + u2.counters,
            gate_count=u1.gate_count + u2.gate_count + own_gates,
            toffolis=u1.toffolis + u2.toffolis + ladders,
            oracle_gates=u1.oracle_gates + u2.oracle_gates,
            reference=reference if u1.has_reference and u2.has_reference else None,
            design_layout=_merge_design_layouts(u1, u2),
        )
    )


def selector_offdiag_shared(j: int, u: BlockEncoding, k: int, sign: int = 1) -> BlockEncoding:
    """
    Block-encoding of |0><j| x A + sign |j><0| x A with a single query of U.
    One flag marks the selector values {0, j}; the sign is a phase on the selector value j
    applied after the query.
    """
    _check_selector(j, k)
    if sign not in (1, -1):
        raise ValueError(f"selector_offdiag_shared, sign must be +1 or -1: {sign}")
    j, k = int(j), int(k)
    n = u.sys_qubits
    a = max(u.ancillas, 1)
    w = 1 + u.work_qubits
    flag, anc0 = 0, w
    sel = list(range(w + a, w + a + k))
    sys_start = w + a + k
    mapping = (
        [1 + i for i in range(u.work_qubits)]
        + [w + (a - u.ancillas) + i for i in range(u.ancillas)]
        + [sys_start + i for i in range(n)]
    )
    image = np.arange(2**k)
    image[0], image[j] = j, 0

    def build():
        steps = [
            sv.permutation(sel, image, label="SWAP_0j"),
            flag_on_value(sel, 0, flag),
            flag_on_value(sel, j, flag),
            sv.controlled((flag,), (1,), u.action.remap(mapping)),
            sv.controlled((flag,), (0,), sv.flip(anc0)),
        ]
        if sign < 0:
            angles = np.zeros(2**k)
            angles[j] = np.pi
            steps.append(sv.phase_diag(sel, angles, label="sign"))
        steps += [flag_on_value(sel, j, flag), flag_on_value(sel, 0, flag)]
        return sv.compose(steps)

    dim = 2**n

    def projected(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[0] = u._projected(xr[j])
        out[j] = sign * u._projected(xr[0])
        return out.reshape(x.shape)

    def projected_adjoint(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[j] = u._projected_adjoint(xr[0])
        out[0] = sign * u._projected_adjoint(xr[j])
        return out.reshape(x.shape)

    def reference():
        ref = np.zeros((2**k * dim, 2**k * dim), dtype=complex)
        ref[0:dim, j * dim : (j + 1) * dim] = u.reference
        ref[j * dim : (j + 1) * dim, 0:dim] = sign * u.reference
        return ref

    ladders = 4 * and_ladder_toffolis(k)
    own_gates = (
        gate_costs["toffoli"] * ladders
        + gate_costs["cnot"]
        + gate_costs["selector_swap_per_qubit"] * k
        + (gate_costs["controlled_phase"] * k if sign < 0 else 0)
    )
    return _log_construction(
        BlockEncoding(
            f"M_{j}[{u.label}; {'+' if sign > 0 else '-'}]",
            u.alpha,
            a,
            u.eps,
            k + n,
            action=build,
            projected=projected,
            projected_adjoint=projected_adjoint,
            work_qubits=w,
            counters=u.counters,
            gate_count=u.gate_count + own_gates,
            toffolis=u.toffolis + ladders,
            oracle_gates=u.oracle_gates,
            reference=reference if u.has_reference else None,
            design_layout=u.design_layout,
        )
    )


def selector_projector(j: int, u: BlockEncoding, k: int) -> BlockEncoding:
    """
    Block-encoding of |j><j| x A on a k-qubit selector prepended to the system
    """
    _check_selector(j, k, allow_zero=True)
    j, k = int(j), int(k)
    n = u.sys_qubits
    a = max(u.ancillas, 1)
    w = 1 + u.work_qubits
    flag, anc0 = 0, w
    sel = list(range(w + a, w + a + k))
    sys_start = w + a + k
    mapping = (
        [1 + i for i in range(u.work_qubits)]
        + [w + (a - u.ancillas) + i for i in range(u.ancillas)]
        + [sys_start + i for i in range(n)]
    )

    def build():
        return sv.compose(
            [
                flag_on_value(sel, j, flag),
                sv.controlled((flag,), (1,), u.action.remap(mapping)),
                sv.controlled((flag,), (0,), sv.flip(anc0)),
                flag_on_value(sel, j, flag),
            ]
        )

    dim = 2**n

    def projected(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[j] = u._projected(xr[j])
        return out.reshape(x.shape)

    def projected_adjoint(x):
        xr = x.reshape(2**k, dim, -1)
        out = np.zeros_like(xr)
        out[j] = u._projected_adjoint(xr[j])
        return out.reshape(x.shape)

    def reference():
        ref = np.zeros((2**k * dim, 2**k * dim), dtype=complex)
        ref[j * dim : (j + 1) * dim, j * dim : (j + 1) * dim] = u.reference
        return ref

    ladders = 2 * and_ladder_toffolis(k)
    return _log_construction(
        BlockEncoding(
            f"P_{j}[{u.label}]",
            u.alpha,
            a,
            u.eps,
            k + n,
            action=build,
            projected=projected,
            projected_adjoint=projected_adjoint,
            work_qubits=w,
            counters=u.counters,
            gate_count=u.gate_count + gate_costs["toffoli"] * ladders + gate_costs["cnot"],
            toffolis=u.toffolis + ladders,
            oracle_gates=u.oracle_gates,
            reference=reference if u.has_reference else None,
            design_layout=u.design_layout,
        )
    )


def adjoint(u: BlockEncoding) -> BlockEncoding:
    """
    Block-encoding of A^dagger with the same metadata; counters keep track of adjoint queries
    """
    return u.replace(
        label=_dagger_label(u.label),
        action=lambda: sv.adjoint(u.action),
        projected=u._projected_adjoint,
        projected_adjoint=u._projected,
        counters=Counter({_dagger_label(key): c for key, c in u.counters.items()}),
        reference=(lambda: u.reference.conj().T) if u.has_reference else None,
        raw_diagonal=None if u.raw_diagonal is None else np.conj(u.raw_diagonal),
    )


def controlled(u: BlockEncoding, ctrl_qubits: int = 1) -> BlockEncoding:
    """
    Controlled version of U: control qubits are prepended to the system register and U acts
    when they are all ones. The raw block is the identity on the other control sectors.
    """
    c = int(ctrl_qubits)
    if c < 1:
        raise DimensionMismatch(f"controlled needs at least one control qubit, got {c}")
    w, a, n = u.work_qubits, u.ancillas, u.sys_qubits
    ctrl = list(range(w + a, w + a + c))
    mapping = list(range(w + a)) + [w + a + c + i for i in range(n)]
    dim = 2**n

    def projected(x):
        xr = x.reshape(2**c, dim, -1)
        out = xr.copy()
        out[-1] = u._projected(xr[-1])
        return out.reshape(x.shape)

    def projected_adjoint(x):
        xr = x.reshape(2**c, dim, -1)
        out = xr.copy()
        out[-1] = u._projected_adjoint(xr[-1])
        return out.reshape(x.shape)

    def reference():
        on = np.zeros((2**c, 2**c))
        on[-1, -1] = 1.0
        return np.kron(np.eye(2**c) - on, u.alpha * np.eye(dim)) + np.kron(on, u.reference)

    raw_diagonal = None
    if u.raw_diagonal is not None:
        raw_diagonal = np.concatenate([np.ones((2**c - 1) * dim), u.raw_diagonal])
    toffolis = 2 * max(c - 1, 0)
    return u.replace(
        label=f"ctrl({u.label})",
        sys_qubits=n + c,
        action=lambda: sv.controlled(ctrl, (1,) * c, u.action.remap(mapping)),
        projected=projected,
        projected_adjoint=projected_adjoint,
        counters=Counter({f"ctrl:{key}": v for key, v in u.counters.items()}),
        gate_count=u.gate_count + gate_costs["toffoli"] * toffolis + gate_costs["cnot"],
        toffolis=u.toffolis + toffolis,
        reference=reference if u.has_reference else None,
        raw_diagonal=raw_diagonal,
        design_layout=u.design_layout,
    )


# %% Chebyshev iterates


def _check_hermitian_reference(u: BlockEncoding):
    if u.has_reference and u.dim <= limits["reference_check_cap"]:
        ref = u.reference
        if max_abs(ref - ref.conj().T) > tolerances["unitarity"] * max(1.0, max_abs(ref)):
            raise NonHermitianReference(
                f"chebyshev: reference of {u.label} deviates from Hermitian by "
                f"{max_abs(ref - ref.conj().T)}"
            )


def _chebyshev_columns(u: BlockEncoding, x, degree: int, adjoint_map: bool = False):
    # S_0 = I, S_1 = B_0 S_0, S_{j+1} = 2 B_j S_j - S_{j-1}; B_j = A^dagger (odd j), A (even j)
    forward, backward = u._projected, u._projected_adjoint
    if adjoint_map:
        forward, backward = backward, forward
    previous, current = x, forward(x)
    yield previous
    if degree >= 1:
        yield current
    for j in range(1, degree):
        step = backward if j % 2 == 1 else forward
        previous, current = current, 2.0 * step(current) - previous
        yield current


def chebyshev(u: BlockEncoding, k: int) -> BlockEncoding:
    """
    (1, a + 1, k eps / alpha)-block-encoding of T_k(H / alpha) for an encoding of a
    Hermitian H: U, R, U^dagger, R, U, ... with R = 2|0^a><0^a| - I marked on a flag ancilla

    Parameters
    ----------
    u : BlockEncoding
        encoding of a Hermitian operator
    k : int
        degree

    Returns
    -------
    BlockEncoding
    """
    k = int(k)
    if k < 0:
        raise ValueError(f"chebyshev, negative degree {k}")
    _check_hermitian_reference(u)
    w, a, n = u.work_qubits, u.ancillas, u.sys_qubits
    flag = w
    mapping = list(range(w)) + [w + 1 + i for i in range(a)] + [w + 1 + a + i for i in range(n)]

    def build():
        inner = u.action.remap(mapping)
        refl = sv.reflection([w + 1 + i for i in range(a)], flag=flag, label="R")
        steps = []
        for i in range(1, k + 1):
            if i > 1:
                steps.append(refl)
            steps.append(inner if i % 2 == 1 else sv.adjoint(inner))
        return sv.compose(steps)

    def projected(x):
        result = x
        for result in _chebyshev_columns(u, x, k):
            pass
        return result

    def projected_adjoint(x):
        result = x
        for result in _chebyshev_columns(u, x, k, adjoint_map=True):
            pass
        return result

    def reference():
        h = u.reference / u.alpha
        prev, cur = np.eye(u.dim, dtype=complex), h
        if k == 0:
            return prev
        for _ in range(1, k):
            prev, cur = cur, 2.0 * h @ cur - prev
        return cur

    raw_diagonal = None
    if u.raw_diagonal is not None:
        d = u.raw_diagonal
        prev, cur = np.ones_like(d), d
        for j in range(1, k):
            b = np.conj(d) if j % 2 == 1 else d
            prev, cur = cur, 2.0 * b * cur - prev
        raw_diagonal = prev if k == 0 else cur
    uses = (k + 1) // 2
    dagger_uses = k // 2
    counters = Counter({key: v * uses for key, v in u.counters.items()})
    counters += Counter({_dagger_label(key): v * dagger_uses for key, v in u.counters.items()})
    reflection_toffolis = 2 * and_ladder_toffolis(a) if a >= 1 else 0
    return _log_construction(
        BlockEncoding(
            f"T_{k}({u.label})",
            1.0,
            a + 1,
            k * u.eps / u.alpha,
            n,
            action=build,
            projected=projected,
            projected_adjoint=projected_adjoint,
            work_qubits=w,
            counters=counters,
            gate_count=k * u.gate_count
            + max(k - 1, 0) * gate_costs["toffoli"] * reflection_toffolis,
            toffolis=k * u.toffolis + max(k - 1, 0) * reflection_toffolis,
            oracle_gates=k * u.oracle_gates,
            reference=reference if u.has_reference else None,
            raw_diagonal=raw_diagonal,
            design_layout=u.design_layout,
        )
    )


def chebyshev_lcu(u: BlockEncoding, coefficients) -> BlockEncoding:
    """
    Linear combination sum_k c_k T_k(H / alpha) of Chebyshev iterates of one encoding.
    The projected block is evaluated with a single three-term recurrence.
    """
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
    degree = coefficients.size - 1
    terms = [chebyshev(u, k) for k in range(degree + 1)]
    combined = lcu(StatePreparationPair(coefficients), terms)
    l1 = float(np.sum(np.abs(coefficients)))
    products = coefficients / l1

    def projected(x):
        out = np.zeros_like(x)
        for p, s in zip(products, _chebyshev_columns(u, x, degree)):
            out += p * s
        return out

    def projected_adjoint(x):
        out = np.zeros_like(x)
        for p, s in zip(products, _chebyshev_columns(u, x, degree, adjoint_map=True)):
            out += np.conj(p) * s
        return out

    return combined.replace(
        label=f"ChebLCU_{degree}({u.label})",
        projected=projected,
        projected_adjoint=projected_adjoint,
    )


# %% Materialization and verification


def materialize_block(u: BlockEncoding, cap: int = None, method: str = "auto") -> np.ndarray:
    """
    alpha (<0| x I) U (|0> x I) as a dense matrix

    Parameters
    ----------
    u : BlockEncoding
        encoding
    cap : int
        maximum block dimension, default from units.limits
    method : str
        "circuit", "projected" or "auto" (circuit when the simulation fits the amplitude cap)

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    MaterializationTooLarge
        if the block dimension exceeds the cap
    """
    check_cap(u.dim, cap)
    eye = np.eye(u.dim, dtype=complex)
    if method == "auto":
        method = "circuit" if u.circuit_feasible(u.dim) else "projected"
    if method == "circuit":
        return u.alpha * u.apply_circuit(eye)
    if method == "projected":
        return u.alpha * u.apply_projected(eye)
    raise ValueError(f"materialize_block, unknown method {method}")


def materialize_unitary(u: BlockEncoding) -> np.ndarray:
    """
    Full circuit unitary on work | ancilla | system qubits
    """
    if 4**u.num_qubits > limits["circuit_amplitude_cap"]:
        raise MaterializationTooLarge(
            f"Unitary of {u.label} on {u.num_qubits} qubits is too large to materialize"
        )
    return sv.node_matrix(u.action, u.num_qubits)


def unitarity_deviation(u: BlockEncoding) -> float:
    """
    ||U^dagger U - I||_max of the circuit
    """
    return _matrix_unitarity_deviation(materialize_unitary(u))


def verify(
    u: BlockEncoding, reference=None, cap: int = None, method: str = "auto", strict: bool = False
) -> float:
    """
    Spectral-norm deviation between a reference operator and alpha times the block.
    The encoding passes when the deviation is at most eps + 1e-10.

    Parameters
    ----------
    u : BlockEncoding
        encoding
    reference : array-like
        operator, default the attached reference
    cap : int
        materialization cap
    method : str
        materialization method
    strict : bool
        raise VerificationFailure instead of only logging a failed check

    Returns
    -------
    float
        deviation
    """
    if reference is None:
        if not u.has_reference:
            raise VerificationFailure(f"verify: {u.label} has no attached reference")
        reference = u.reference
    reference = as_matrix(reference)
    if reference.shape != (u.dim, u.dim):
        raise DimensionMismatch(f"verify: reference shape {reference.shape} for dimension {u.dim}")
    # always through the circuit or the projected map, never through raw_diagonal
    deviation = spectral_norm(reference - materialize_block(u, cap, method))
    passed = deviation <= u.eps + tolerances["verify_slack"]
    if passed:
        logging.info(f"verify {u.label}: deviation {deviation:.3e} <= eps {u.eps:.3e}")
    else:
        logging.warning(f"verify {u.label}: deviation {deviation:.3e} > eps {u.eps:.3e}")
        if strict:
            raise VerificationFailure(
                f"{u.label}: deviation {deviation} exceeds eps {u.eps} + slack"
            )
    return deviation


def passes(u: BlockEncoding, reference=None, **kwargs) -> bool:
    return verify(u, reference, **kwargs) <= u.eps + tolerances["verify_slack"]
