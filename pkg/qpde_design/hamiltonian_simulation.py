"""
This module includes the time evolution exp(-A t) of a block-encoded anti-Hermitian
generator: the truncated Jacobi-Anger plan, the evolution through an LCU of Chebyshev
iterates and the dense reference evolution
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
import math

import numpy as np
import scipy.special

from qpde_design.block_encoding import BlockEncoding, chebyshev_lcu, scale_phase
from qpde_design.core_linalg import StateVector, as_matrix, check_cap, matexp, max_abs
from qpde_design.exceptions import (
    EncodingParameterOutsideBoundaries,
    NonAntiHermitianGenerator,
    AmplitudeVanished,
    DimensionMismatch,
)
from qpde_design.units import units, tolerances, limits


def bessel_sequence(z: float, order: int) -> np.ndarray:
    """
    J_0(z) ... J_order(z)
    """
    return scipy.special.jv(np.arange(order + 1), float(z))


class EvolutionPlan:
    """
    Truncation of exp(-i z x) = J_0(z) + 2 sum_k (-i)^k J_k(z) T_k(x), z = alpha t

    ...

    Attributes
    ----------
    alpha : float
        sub-normalization of the generator encoding
    t : float
        time
    eps_hs : float
        target evolution error
    R : int
        truncation order
    alpha_tau : float
        alpha t
    bessel_weights : numpy.ndarray
        J_0 ... J_R
    coefficients : numpy.ndarray
        Chebyshev coefficients c_0 = J_0, c_k = 2 (-i)^k J_k
    tail : float
        2 sum_{k > R} |J_k|
    """

    def __init__(self, alpha: float, t: float, eps_hs: float):
        self.alpha = alpha
        self.t = t
        self.eps_hs = eps_hs
        self._truncate()

    @property
    def alpha(self) -> float:
        return self._alpha

    @alpha.setter
    def alpha(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"EvolutionPlan, alpha is not a float: {value}")
        if not value > 0.0:
            raise EncodingParameterOutsideBoundaries(
                "EvolutionPlan", "alpha", lim=[0.0, None], unit=units["subnormalization"], value=value
            )
        self._alpha = value

    @property
    def t(self) -> float:
        return self._t

    @t.setter
    def t(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"EvolutionPlan, t is not a float: {value}")
        if not value >= 0.0:
            raise EncodingParameterOutsideBoundaries(
                "EvolutionPlan", "t", lim=[0.0, None], unit=units["time"], value=value
            )
        self._t = value

    @property
    def eps_hs(self) -> float:
        return self._eps_hs

    @eps_hs.setter
    def eps_hs(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"EvolutionPlan, eps_hs is not a float: {value}")
        if not value > 0.0:
            raise EncodingParameterOutsideBoundaries(
                "EvolutionPlan", "eps_hs", lim=[0.0, None], unit=units["error"], value=value
            )
        self._eps_hs = value

    @property
    def alpha_tau(self) -> float:
        return self._alpha * self._t

    def _truncate(self):
        z = self.alpha_tau
        if z == 0.0:
            self.R = 0
            self.bessel_weights = np.ones(1)
            self.tail = 0.0
            return
        floor_order = math.ceil(math.e * z / 2.0)
        scan = floor_order + 60 + int(4 * math.sqrt(z))
        weights = bessel_sequence(z, scan)
        tails = 2.0 * np.cumsum(np.abs(weights)[::-1])[::-1]
        # tails[k] = 2 sum_{j >= k} |J_j|
        order = floor_order
        while order + 1 < tails.size and tails[order + 1] > self._eps_hs:
            order += 1
        self.R = int(order)
        self.bessel_weights = weights[: order + 1]
        self.tail = float(tails[order + 1]) if order + 1 < tails.size else 0.0
        logging.info(f"EvolutionPlan: alpha t = {z}, R = {self.R}, tail = {self.tail:.3e}")

    @property
    def coefficients(self) -> np.ndarray:
        k = np.arange(self.R + 1)
        c = 2.0 * (-1j) ** k * self.bessel_weights
        c[0] = self.bessel_weights[0]
        return c

    def __repr__(self):
        return f"EvolutionPlan(alpha t={self.alpha_tau:.6g}, R={self.R}, eps_hs={self._eps_hs:.3g})"


def plan_evolution(alpha: float, t: float, eps_hs: float) -> EvolutionPlan:
    """
    Smallest Jacobi-Anger truncation R >= ceil(e alpha t / 2) with 2 sum_{k>R} |J_k(alpha t)| <= eps_hs
    """
    return EvolutionPlan(alpha, t, eps_hs)


def check_anti_hermitian(u: BlockEncoding, samples: int = 3, tol: float = None):
    """
    Raise NonAntiHermitianGenerator unless the encoded block satisfies A^dagger = -A,
    on the dense reference when small and on random samples of the projected maps
    """
    tol = tolerances["anti_hermitian_generator"] if tol is None else tol
    if u.has_reference and u.dim <= limits["reference_check_cap"]:
        ref = u.reference
        deviation = max_abs(ref + ref.conj().T) / max(1.0, max_abs(ref))
        if deviation > tol:
            raise NonAntiHermitianGenerator(f"{u.label}: reference deviates from anti-Hermitian by {deviation:.3e}")
    rng = np.random.default_rng(0)
    v = rng.standard_normal((u.dim, samples)) + 1j * rng.standard_normal((u.dim, samples))
    deviation = float(np.max(np.linalg.norm(u.apply_projected(v) + u.apply_projected_adjoint(v), axis=0)
                             / np.linalg.norm(v, axis=0)))
    if deviation > tol:
        raise NonAntiHermitianGenerator(f"{u.label}: block deviates from anti-Hermitian by {deviation:.3e}")


def evolution_encoding(u_a: BlockEncoding, plan: EvolutionPlan) -> BlockEncoding:
    """
    Encoding of exp(-A t) / ||c||_1 as an LCU of Chebyshev iterates of H = -iA
    """
    h = scale_phase(u_a, -1j, label=f"H[{u_a.label}]")
    return chebyshev_lcu(h, plan.coefficients).replace(label=f"exp(-{u_a.label} t)")


def evolve_be(u_a: BlockEncoding, w0: StateVector, plan: EvolutionPlan, method: str = "auto"):
    """
    Apply the block-encoded exp(-A t) to w0 and post-select the zero ancillas

    Parameters
    ----------
    u_a : BlockEncoding
        encoding of an anti-Hermitian generator A
    w0 : StateVector
        normalized initial state on the system of u_a
    plan : EvolutionPlan
        truncation, built with alpha = u_a.alpha
    method : str
        "circuit", "projected" or "auto" (circuit when it fits the amplitude cap)

    Returns
    -------
    (StateVector, float)
        renormalized state and exact success probability

    Raises
    ------
    NonAntiHermitianGenerator
        if A is not anti-Hermitian
    AmplitudeVanished
        if the success probability is below the floor
    """
    if w0.num_qubits != u_a.sys_qubits:
        raise DimensionMismatch(f"evolve_be: state on {w0.num_qubits} qubits, generator on {u_a.sys_qubits}")
    if not np.isclose(plan.alpha, u_a.alpha, rtol=1e-12, atol=0.0):
        raise DimensionMismatch(f"evolve_be: plan alpha {plan.alpha} differs from encoding alpha {u_a.alpha}")
    check_anti_hermitian(u_a)
    e = evolution_encoding(u_a, plan)
    if method == "auto":
        method = "circuit" if e.circuit_feasible() else "projected"
    if method == "circuit":
        v = e.apply_circuit(w0.amplitudes)
    elif method == "projected":
        v = e.apply_projected(w0.amplitudes)
    else:
        raise ValueError(f"evolve_be, unknown method {method}")
    prob = float(np.real(np.vdot(v, v)))
    if prob < limits["success_floor"]:
        raise AmplitudeVanished(f"evolve_be: success probability {prob} below the floor")
    out = StateVector(v / math.sqrt(prob), w0.layout)
    logging.info(f"evolve_be: {method} path, R = {plan.R}, success probability {prob:.6e}")
    return out, prob


def evolve_exact(a, w0: StateVector, t: float) -> StateVector:
    """
    exp(-A t) w0 by dense matrix exponential

    Raises
    ------
    MaterializationTooLarge
        if A exceeds the materialization cap
    """
    a = as_matrix(a)
    check_cap(a.shape[0])
    if a.shape[0] != w0.amplitudes.size:
        raise DimensionMismatch(f"evolve_exact: generator of size {a.shape[0]} for a state of {w0.amplitudes.size}")
    out = matexp(-a, t) @ w0.amplitudes
    return StateVector(out, w0.layout, normalized=False)
