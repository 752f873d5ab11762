"""
This module includes the dense linear algebra substrate: verified complex matrices,
state vectors with a register layout, tensor products, matrix exponentials and norms
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging

import numpy as np
import scipy.linalg

from qpde_design.exceptions import (
    MaterializationTooLarge,
    InvalidMatrix,
    DimensionMismatch,
    RegisterSliceMismatch,
)
from qpde_design.units import tolerances, limits


def as_matrix(value) -> np.ndarray:
    """
    Return a 2D complex array from a ComplexMatrix or an array-like, checking it is finite
    """
    if isinstance(value, ComplexMatrix):
        return value.data
    data = np.asarray(value, dtype=complex)
    if data.ndim != 2:
        raise InvalidMatrix(f"Expected a 2D matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise InvalidMatrix("Matrix has non-finite entries")
    return data


def check_cap(rows: int, cap: int = None):
    """
    Raise MaterializationTooLarge if rows exceeds the dense materialization cap
    """
    cap = limits["materialization_cap"] if cap is None else cap
    if rows > cap:
        raise MaterializationTooLarge(
            f"Dense materialization of {rows} rows exceeds the cap of {cap}"
        )


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m, tol: float = None) -> bool:
    tol = tolerances["hermitian"] if tol is None else tol
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and max_abs(m - m.conj().T) <= tol


def is_anti_hermitian(m, tol: float = None) -> bool:
    tol = tolerances["hermitian"] if tol is None else tol
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and max_abs(m + m.conj().T) <= tol


def unitarity_deviation(m) -> float:
    """
    ||U^dagger U - I||_max
    """
    m = as_matrix(m)
    return max_abs(m.conj().T @ m - np.eye(m.shape[1]))


# %%


class ComplexMatrix:
    """
    A dense complex matrix used on the verification side

    ...

    Attributes
    ----------
    data : numpy.ndarray
        complex entries, shape (rows, cols)
    hermitian : bool
        flag, verified when set
    anti_hermitian : bool
        flag, verified when set

    Methods
    -------
    rows, cols
        matrix dimensions
    """

    def __init__(self, data, hermitian: bool = False, anti_hermitian: bool = False):
        self.data = data
        self.hermitian = hermitian
        self.anti_hermitian = anti_hermitian

    @property
    def data(self) -> np.ndarray:
        return self._data

    @data.setter
    def data(self, value):
        if isinstance(value, ComplexMatrix):
            value = value.data
        self._data = as_matrix(value)

    @property
    def hermitian(self) -> bool:
        return self._hermitian

    @hermitian.setter
    def hermitian(self, value: bool):
        if value and not is_hermitian(self._data):
            raise InvalidMatrix(
                f"Matrix flagged Hermitian deviates by {max_abs(self._data - self._data.conj().T)}"
            )
        self._hermitian = bool(value)

    @property
    def anti_hermitian(self) -> bool:
        return self._anti_hermitian

    @anti_hermitian.setter
    def anti_hermitian(self, value: bool):
        if value and not is_anti_hermitian(self._data):
            raise InvalidMatrix(
                f"Matrix flagged anti-Hermitian deviates by {max_abs(self._data + self._data.conj().T)}"
            )
        self._anti_hermitian = bool(value)

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self):
        return f"ComplexMatrix({self.rows}x{self.cols})"


# %%


class StateVector:
    """
    Complex amplitude vector over a declared register layout.
    Registers are listed most significant first. Inside a register the value is read
    little end last: bit weights grow from the register's last qubit (weight 1) towards
    its first qubit (weight 2^(w-1)). The amplitude index is the concatenation of the
    register values in layout order, and global qubit q has weight 2^(N-1-q).

    Example, layout [("anc", 1), ("sys", 2)], qubits 0 | 1 2:

        index  binary  anc  sys  (qubit 1, qubit 2)
          5     101     1    1        (0, 1)
          6     110     1    2        (1, 0)

    An X on qubit 2 adds 1 to sys, an X on qubit 1 adds 2.

    ...

    Attributes
    ----------
    amplitudes : numpy.ndarray
        complex vector of length 2**num_qubits
    layout : list of (str, int)
        ordered register labels with widths
    normalized : bool
        flag, verified when set
    """

    def __init__(self, amplitudes, layout=None, normalized: bool = True):
        self.amplitudes = amplitudes
        self.layout = layout
        self.normalized = normalized

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @amplitudes.setter
    def amplitudes(self, value):
        value = np.asarray(value, dtype=complex).reshape(-1)
        num_qubits = int(round(np.log2(value.size))) if value.size else -1
        if num_qubits < 0 or 2**num_qubits != value.size:
            raise DimensionMismatch(
                f"State vector length {value.size} is not a power of two"
            )
        if not np.all(np.isfinite(value)):
            raise InvalidMatrix("State vector has non-finite amplitudes")
        self._amplitudes = value
        self._num_qubits = num_qubits

    @property
    def num_qubits(self) -> int:
        return self._num_qubits

    @property
    def layout(self) -> list:
        return self._layout

    @layout.setter
    def layout(self, value):
        if value is None:
            value = [("q", self._num_qubits)] if self._num_qubits > 0 else []
        value = [(str(label), int(width)) for label, width in value]
        if sum(w for _, w in value) != self._num_qubits:
            raise RegisterSliceMismatch(
                f"Layout widths {value} do not sum to {self._num_qubits} qubits"
            )
        labels = [label for label, _ in value]
        if len(set(labels)) != len(labels):
            raise RegisterSliceMismatch(f"Duplicated register labels in {labels}")
        self._layout = value

    @property
    def normalized(self) -> bool:
        return self._normalized

    @normalized.setter
    def normalized(self, value: bool):
        if value and abs(self.norm() - 1.0) > tolerances["normalization"]:
            raise InvalidMatrix(
                f"State vector flagged normalized has norm {self.norm()}"
            )
        self._normalized = bool(value)

    def norm(self) -> float:
        return float(np.linalg.norm(self._amplitudes))

    def register_qubits(self, label: str) -> tuple:
        """
        Qubit indices of a register, most significant first
        """
        start = 0
        for name, width in self._layout:
            if name == label:
                return tuple(range(start, start + width))
            start += width
        raise RegisterSliceMismatch(f"Register {label} not in layout {self._layout}")

    def register_width(self, label: str) -> int:
        return len(self.register_qubits(label))

    def copy(self):
        return StateVector(self._amplitudes.copy(), list(self._layout), self._normalized)

    @classmethod
    def basis(cls, layout, values: dict):
        """
        Computational basis state with the given register values (missing registers are 0)
        """
        layout = [(str(label), int(width)) for label, width in layout]
        index = 0
        for label, width in layout:
            value = int(values.get(label, 0))
            if value < 0 or value >= 2**width:
                raise RegisterSliceMismatch(
                    f"Value {value} does not fit register {label} of {width} qubits"
                )
            index = (index << width) | value
        amplitudes = np.zeros(2 ** sum(w for _, w in layout), dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes, layout)

    def __repr__(self):
        return f"StateVector({self._num_qubits} qubits, layout={self._layout})"


# %%


def kron(a, b, cap: int = None) -> np.ndarray:
    """
    Tensor product, row-major on the left factor

    Parameters
    ----------
    a, b : ComplexMatrix or array-like
        factors
    cap : int
        maximum number of rows of the result, default from units.limits

    Returns
    -------
    numpy.ndarray
        the tensor product

    Raises
    ------
    MaterializationTooLarge
        if the result exceeds the cap
    """
    a = as_matrix(a)
    b = as_matrix(b)
    check_cap(a.shape[0] * b.shape[0], cap)
    return np.kron(a, b)


def matexp(m, t: float = 1.0) -> np.ndarray:
    """
    exp(M t). Hermitian and anti-Hermitian generators go through an eigendecomposition,
    any other matrix through scaling and squaring (scipy.linalg.expm)

    Parameters
    ----------
    m : ComplexMatrix or array-like
        square generator
    t : float
        time

    Returns
    -------
    numpy.ndarray
        the matrix exponential
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"matexp needs a square matrix, got {m.shape}")
    try:
        t = float(t)
    except (TypeError, ValueError):
        raise TypeError(f"matexp, time is not a float: {t}")
    tol = tolerances["hermitian"] * max(1.0, max_abs(m))
    if is_hermitian(m, tol):
        evals, evecs = scipy.linalg.eigh((m + m.conj().T) / 2)
        return (evecs * np.exp(evals * t)) @ evecs.conj().T
    if is_anti_hermitian(m, tol):
        # M = iH with H Hermitian
        h = -1j * m
        evals, evecs = scipy.linalg.eigh((h + h.conj().T) / 2)
        return (evecs * np.exp(1j * evals * t)) @ evecs.conj().T
    return scipy.linalg.expm(m * t)


def spectral_norm(m, tol: float = None, max_iter: int = 20000) -> float:
    """
    Largest singular value by power iteration on M^dagger M with a deterministic start

    Parameters
    ----------
    m : ComplexMatrix or array-like
        matrix
    tol : float
        relative tolerance on the singular value
    max_iter : int
        maximum number of iterations

    Returns
    -------
    float
        the spectral norm
    """
    tol = tolerances["spectral_norm"] if tol is None else tol
    m = as_matrix(m)
    if m.size == 0 or max_abs(m) == 0.0:
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = m.conj().T @ (m @ v)
        new_sigma2 = float(np.real(np.vdot(v, w)))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        # Rayleigh quotient error is quadratic in the eigenvector error
        if abs(new_sigma2 - sigma2) <= max(0.1 * tol * tol, 1e-15) * abs(new_sigma2):
            return float(np.sqrt(max(new_sigma2, 0.0)))
        sigma2 = new_sigma2
    logging.warning(
        f"spectral_norm: power iteration did not converge in {max_iter} steps, using SVD"
    )
    return float(scipy.linalg.svdvals(m)[0])
