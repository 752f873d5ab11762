"""
This module includes functions to build small circuit pieces:
state-preparation unitaries, AND flags, rotations and bit helpers.
It is an internal module with internal functions
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging

import numpy as np
import scipy.linalg

from qpde_design.exceptions import ZeroNormCoefficients
from qpde_design.statevector import controlled, flip, select, unitary


def ceil_log2(m: int) -> int:
    """
    Number of qubits needed to index m values (0 for m <= 1)
    """
    m = int(m)
    return 0 if m <= 1 else int(np.ceil(np.log2(m)))


def bits(value: int, width: int) -> tuple:
    """
    Binary digits of value, most significant first
    """
    return tuple((int(value) >> (width - 1 - i)) & 1 for i in range(width))


def and_ladder_toffolis(k: int) -> int:
    # AND of k controls into one flag
    return 4 * int(k) - 2


def state_completion(v) -> np.ndarray:
    """
    Unitary whose first column is the unit vector v.
    QR of [v, e_i (i != pivot)] with the pivot at argmax |v|, column phase fixed on v

    Parameters
    ----------
    v : array-like
        unit vector of length 2^k

    Returns
    -------
    numpy.ndarray
        unitary matrix P with P e_0 = v
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroNormCoefficients("state_completion: zero vector")
    v = v / norm
    size = v.size
    pivot = int(np.argmax(np.abs(v)))
    others = [i for i in range(size) if i != pivot]
    columns = np.zeros((size, size), dtype=complex)
    columns[:, 0] = v
    for c, i in enumerate(others, start=1):
        columns[i, c] = 1.0
    q, r = scipy.linalg.qr(columns)
    q[:, 0] *= r[0, 0]
    return q


def prep_amplitudes(p, size: int):
    """
    Unit vectors c, d of length size with conj(c_j) d_j = p_j for j < len(p) and 0 beyond.
    sum |p_j| must be <= 1. When it is below 1 the mass is balanced by an exponential tilt
    between the two vectors (first nonzero entry against the others), or, with a single
    nonzero entry, by an unused slot of c.

    Parameters
    ----------
    p : array-like
        complex products, sum |p| <= 1
    size : int
        length of the preparation register, 2^k >= len(p)

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        left vector c and right vector d
    """
    p = np.asarray(p, dtype=complex).reshape(-1)
    mag = np.abs(p)
    total = float(mag.sum())
    if total == 0.0:
        raise ZeroNormCoefficients("prep_amplitudes: all products are zero")
    if total > 1.0 + 1e-12:
        raise ValueError(f"prep_amplitudes: sum |p| = {total} exceeds 1")
    phase = np.exp(1j * np.angle(p))
    c = np.zeros(size, dtype=complex)
    d = np.zeros(size, dtype=complex)
    nonzero = np.flatnonzero(mag > 0.0)
    if total >= 1.0 - 1e-15:
        c[: p.size] = np.sqrt(mag) * np.conj(phase)
        d[: p.size] = np.sqrt(mag)
    elif nonzero.size == 1:
        free = [j for j in range(size) if j >= p.size or mag[j] == 0.0]
        if not free:
            raise ValueError("prep_amplitudes: no free slot to absorb the missing mass")
        j0 = nonzero[0]
        c[j0] = mag[j0] * np.conj(phase[j0])
        c[free[0]] = np.sqrt(1.0 - mag[j0] ** 2)
        d[j0] = 1.0
    else:
        j0 = nonzero[0]
        p0 = mag[j0]
        rest = total - p0
        cosh_b = max(1.0, (1.0 - p0**2 - rest**2) / (2.0 * p0 * rest))
        b = float(np.arccosh(cosh_b))
        a = -np.log(p0 + rest * np.exp(b))
        tilt = np.full(p.size, np.exp(a + b))
        tilt[j0] = np.exp(a)
        logging.debug(f"prep_amplitudes: tilt a={a}, b={b} for sum |p| = {total}")
        c[: p.size] = np.sqrt(mag * tilt) * np.conj(phase)
        d[: p.size] = np.sqrt(mag / tilt)
    c /= np.linalg.norm(c)
    d /= np.linalg.norm(d)
    return c, d


def ry(theta: float) -> np.ndarray:
    return np.array(
        [[np.cos(theta / 2), -np.sin(theta / 2)], [np.sin(theta / 2), np.cos(theta / 2)]],
        dtype=complex,
    )


def flag_on_value(register, value: int, flag: int):
    """
    flag ^= [register == value]
    """
    return controlled(tuple(register), bits(value, len(register)), flip(flag), label="AND")


def multiplexed_ry(register, target: int, thetas):
    """
    R_y(thetas[r]) on target when the register holds r
    """
    children = [unitary((target,), ry(t), label="Ry") for t in thetas]
    return select(tuple(register), children, label="multiplexed_Ry")
