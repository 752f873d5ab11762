"""
This module includes functions to build one-dimensional difference stencils with
boundary folding and the cyclic shift used by the periodic difference encoding.
It is an internal module with internal functions
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import numpy as np

from qpde_design.exceptions import UnsupportedBoundaryCondition
from qpde_design.units import boundary_conditions


def check_boundary(left: str, right: str) -> tuple:
    """
    Validate the boundary conditions of one axis

    Parameters
    ----------
    left : str
        condition at x = 0
    right : str
        condition at x = 1

    Returns
    -------
    tuple
        (left, right) lower case

    Raises
    ------
    UnsupportedBoundaryCondition
        for unknown names or an axis periodic on one side only
    """
    left, right = str(left).lower(), str(right).lower()
    for side in (left, right):
        if side not in boundary_conditions:
            raise UnsupportedBoundaryCondition(
                f"Boundary condition {side} not in {boundary_conditions}"
            )
    if (left == "periodic") != (right == "periodic"):
        raise UnsupportedBoundaryCondition(
            f"An axis cannot be periodic on one side only: ({left}, {right})"
        )
    return left, right


def shift_matrix(size: int, shift: int = -1) -> np.ndarray:
    """
    Permutation matrix of np.roll(v, shift): shift -1 gives (S v)_j = v_{j+1}
    """
    return np.roll(np.eye(size), shift, axis=0)


def stencil_1d(n: int, direction: str, left: str, right: str) -> np.ndarray:
    """
    First-order difference on 2^n points with spacing h = 1/(2^n - 1).

    D- (backward) acts on the field and only reads a left ghost value:
    dirichlet 0, neumann copy of the boundary value, periodic wrap.
    D+ (forward) acts on the flux and only reads a right ghost value:
    neumann 0, dirichlet copy of the boundary value, periodic wrap.

    Parameters
    ----------
    n : int
        qubits of the axis
    direction : str
        "+" or "-"
    left, right : str
        boundary conditions

    Returns
    -------
    numpy.ndarray
        real matrix of size 2^n
    """
    left, right = check_boundary(left, right)
    size = 2**n
    h = 1.0 / (size - 1)
    eye = np.eye(size)
    if direction == "+":
        d = np.eye(size, k=1) - eye
        if right == "periodic":
            d[-1, 0] = 1.0
        elif right == "dirichlet":
            d[-1, -1] = 0.0
    elif direction == "-":
        d = eye - np.eye(size, k=-1)
        if left == "periodic":
            d[0, -1] = -1.0
        elif left == "neumann":
            d[0, 0] = 0.0
    else:
        raise ValueError(f"stencil_1d, direction must be '+' or '-': {direction}")
    return d / h
