"""
This module includes the truncated Fourier series of the spatially varying coefficients:
the FourierSeries class, the quadrature fit on the unit square, the CSV format and the
truncation-degree rules
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from qpde_design.exceptions import (
    EncodingParameterOutsideBoundaries,
    NonFiniteSamples,
    InvalidSmoothness,
)
from qpde_design.units import units, encoding_limits


CSV_FLOAT_FORMAT = "%.17g"


def even_extension(x):
    """
    Map coordinates to [0, 1] through the even, period-2 extension of the unit interval
    """
    r = np.mod(np.asarray(x, dtype=float), 2.0)
    return np.where(r > 1.0, 2.0 - r, r)


def _check_degree(name, value):
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise TypeError(f"FourierSeries, {name} is not an int: {value}")
    if value < encoding_limits["fourier_degree"][0] or value > encoding_limits["fourier_degree"][1]:
        raise EncodingParameterOutsideBoundaries(
            "FourierSeries", name, lim=encoding_limits["fourier_degree"], unit=units["degree"], value=value
        )
    return value


class FourierSeries:
    """
    Truncated series f(x, y) = sum_{k,l} c_{k,l} exp(i pi k x) exp(i pi l y) on the unit square.
    One-dimensional series have K_y = 0 and ignore y.

    ...

    Attributes
    ----------
    dims : int
        1 or 2
    degrees : tuple of int
        (K_x, K_y)
    coefficients : numpy.ndarray
        complex array of shape (2K_x + 1, 2K_y + 1), entry [k + K_x, l + K_y] is c_{k,l}
    residual : float
        sup-norm truncation error measured against the source function (0 when unknown)
    source : callable
        function the series was fitted to, if any

    Methods
    -------
    evaluate(x, y=None)
        series values at points
    shifted(dx, dy=0.)
        series of f(x + dx, y + dy)
    to_csv(path), read_csv(path)
        k,l,re,im table
    """

    def __init__(self, coefficients, dims: int = None, residual: float = 0.0, source=None):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.ndim == 1:
            coefficients = coefficients[:, None]
        if coefficients.ndim != 2 or coefficients.shape[0] % 2 == 0 or coefficients.shape[1] % 2 == 0:
            raise ValueError(
                f"FourierSeries, coefficients must have shape (2Kx+1, 2Ky+1): {coefficients.shape}"
            )
        if not np.all(np.isfinite(coefficients)):
            raise NonFiniteSamples("FourierSeries, non-finite coefficients")
        self.coefficients = coefficients
        self.dims = dims if dims is not None else (1 if coefficients.shape[1] == 1 else 2)
        self.residual = residual
        self.source = source

    @property
    def dims(self) -> int:
        return self._dims

    @dims.setter
    def dims(self, value: int):
        value = int(value)
        if value not in (1, 2):
            raise ValueError(f"FourierSeries, dims must be 1 or 2: {value}")
        if value == 1 and self.coefficients.shape[1] != 1:
            raise ValueError("FourierSeries, a one-dimensional series must have K_y = 0")
        self._dims = value

    @property
    def residual(self) -> float:
        return self._residual

    @residual.setter
    def residual(self, value: float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"FourierSeries, residual is not a float: {value}")
        if not value >= 0.0:
            raise EncodingParameterOutsideBoundaries(
                "FourierSeries", "residual", lim=encoding_limits["eps"], unit=units["error"], value=value
            )
        self._residual = value

    @property
    def degrees(self) -> tuple:
        return ((self.coefficients.shape[0] - 1) // 2, (self.coefficients.shape[1] - 1) // 2)

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    def modes(self, axis: int) -> np.ndarray:
        k = self.degrees[axis]
        return np.arange(-k, k + 1)

    def coefficient(self, k: int, l: int = 0) -> complex:
        kx, ky = self.degrees
        if abs(k) > kx or abs(l) > ky:
            return 0.0j
        return complex(self.coefficients[k + kx, l + ky])

    def evaluate(self, x, y=None) -> np.ndarray:
        """
        Pointwise series values; x and y broadcast against each other

        Parameters
        ----------
        x : array-like
            first coordinate
        y : array-like
            second coordinate, ignored (may be None) for one-dimensional series

        Returns
        -------
        numpy.ndarray
            complex values with the broadcast shape
        """
        x = np.asarray(x, dtype=float)
        y = np.zeros_like(x) if (y is None or self.dims == 1) else np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        ex = np.exp(1j * np.pi * x.reshape(-1, 1) * self.modes(0))
        ey = np.exp(1j * np.pi * y.reshape(-1, 1) * self.modes(1))
        values = np.einsum("pk,kl,pl->p", ex, self.coefficients, ey)
        return values.reshape(x.shape)

    def evaluate_grid(self, x, y=None) -> np.ndarray:
        """
        Values on the tensor grid x by y, shape (len(x), len(y)) or (len(x),) in 1D
        """
        ex = np.exp(1j * np.pi * np.outer(np.asarray(x, dtype=float), self.modes(0)))
        if self.dims == 1:
            return ex @ self.coefficients[:, 0]
        ey = np.exp(1j * np.pi * np.outer(np.asarray(y, dtype=float), self.modes(1)))
        return ex @ self.coefficients @ ey.T

    def shifted(self, dx: float, dy: float = 0.0):
        """
        Series of f(x + dx, y + dy): c_{k,l} exp(i pi (k dx + l dy))
        """
        phase = np.exp(1j * np.pi * (np.outer(self.modes(0) * dx, np.ones(self.coefficients.shape[1]))
                                     + np.outer(np.ones(self.coefficients.shape[0]), self.modes(1) * dy)))
        source = None
        if self.source is not None:
            base = self.source
            if self.dims == 1:
                source = lambda x, y=None: base(even_extension(np.asarray(x) + dx))
            else:
                source = lambda x, y: base(even_extension(np.asarray(x) + dx), even_extension(np.asarray(y) + dy))
        return FourierSeries(self.coefficients * phase, dims=self.dims, residual=self.residual, source=source)

    def source_values(self, x, y=None) -> np.ndarray:
        """
        Source function at even-extended coordinates; None without a source
        """
        if self.source is None:
            return None
        if self.dims == 1:
            return np.asarray(self.source(even_extension(x)), dtype=complex)
        return np.asarray(self.source(even_extension(x), even_extension(y)), dtype=complex)

    def to_frame(self) -> pd.DataFrame:
        kx, ky = self.degrees
        k, l = np.meshgrid(np.arange(-kx, kx + 1), np.arange(-ky, ky + 1), indexing="ij")
        return pd.DataFrame(
            {
                "k": k.reshape(-1),
                "l": l.reshape(-1),
                "re": self.coefficients.real.reshape(-1),
                "im": self.coefficients.imag.reshape(-1),
            }
        )

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)

    @classmethod
    def read_csv(cls, path: str, dims: int = None):
        """
        Read a k,l,re,im table. Missing (k, l) pairs are zero

        Parameters
        ----------
        path : str
            csv path
        dims : int
            1 or 2, default 2 if any l != 0 else 1

        Returns
        -------
        FourierSeries
        """
        try:
            table = pd.read_csv(path)
        except FileNotFoundError:
            raise FileNotFoundError(f"FourierSeries, coefficient file not found: {path}")
        missing = {"k", "l", "re", "im"} - set(table.columns)
        if missing:
            raise ValueError(f"FourierSeries, coefficient file {path} misses columns {sorted(missing)}")
        kx = int(table["k"].abs().max())
        ky = int(table["l"].abs().max())
        coefficients = np.zeros((2 * kx + 1, 2 * ky + 1), dtype=complex)
        coefficients[table["k"].values + kx, table["l"].values + ky] = (
            table["re"].values + 1j * table["im"].values
        )
        return cls(coefficients, dims=dims)

    def __repr__(self):
        return f"FourierSeries(dims={self.dims}, degrees={self.degrees}, residual={self.residual:.3e})"


# %% Fit


def _sample(f, x, y, dims):
    if dims == 1:
        values = np.asarray(f(x), dtype=float)
    else:
        xx, yy = np.meshgrid(x, y, indexing="ij")
        values = np.asarray(f(xx, yy), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteSamples("fit_fourier: the function returned non-finite samples")
    return values


def fit_fourier(f, degrees, quad_points: int = None) -> FourierSeries:
    """
    Fourier series of a real function on the unit square by trapezoidal quadrature of its
    even, period-2 extension: c_{k,l} = Q^-2 sum_{q,r} f(x_q, y_r) exp(-i pi (k x_q + l y_r))
    with nodes x_q = -1 + 2q/Q. The sup-norm residual is measured on a 4x refined grid.

    Parameters
    ----------
    f : callable
        f(x) for one-dimensional fits, f(x, y) on meshgrid arrays otherwise
    degrees : int or tuple of int
        K (1D) or (K_x, K_y)
    quad_points : int
        Q per axis, at least 4 max(K) + 4 (default)

    Returns
    -------
    FourierSeries

    Raises
    ------
    NonFiniteSamples
        if f returns non-finite values
    """
    if np.isscalar(degrees):
        degrees = (degrees,)
    degrees = tuple(_check_degree("degree", k) for k in degrees)
    dims = len(degrees)
    if dims not in (1, 2):
        raise ValueError(f"fit_fourier, one or two degrees expected: {degrees}")
    minimum = 4 * max(degrees) + 4
    quad_points = minimum if quad_points is None else int(quad_points)
    if quad_points < minimum:
        raise EncodingParameterOutsideBoundaries(
            "fit_fourier", "quad_points", lim=[minimum, None], unit=units["degree"], value=quad_points
        )
    nodes = -1.0 + 2.0 * np.arange(quad_points) / quad_points
    samples = _sample(f, even_extension(nodes), even_extension(nodes), dims)
    kx = degrees[0]
    ex = np.exp(-1j * np.pi * np.outer(np.arange(-kx, kx + 1), nodes))
    if dims == 1:
        coefficients = (ex @ samples / quad_points)[:, None]
    else:
        ky = degrees[1]
        ey = np.exp(-1j * np.pi * np.outer(np.arange(-ky, ky + 1), nodes))
        coefficients = ex @ samples @ ey.T / quad_points**2
    series = FourierSeries(coefficients, dims=dims, source=f)
    refined = np.linspace(0.0, 1.0, 4 * quad_points + 1)
    exact = _sample(f, refined, refined, dims)
    approx = series.evaluate_grid(refined, refined)
    series.residual = float(np.max(np.abs(exact - approx)))
    logging.info(f"fit_fourier: degrees {degrees}, Q = {quad_points}, residual {series.residual:.3e}")
    return series


# %% Truncation degree


@dataclass(frozen=True)
class Analytic:
    """
    Function analytic in the strip |Im z| < strip with |f| <= bound there
    """

    bound: float
    strip: float


@dataclass(frozen=True)
class Differentiable:
    """
    Function with nu derivatives, the nu-th of total variation at most variation
    """

    nu: float
    variation: float


def truncation_degree(smoothness, eps_f: float) -> int:
    """
    Smallest degree K whose truncation bound is at most eps_f.
    Analytic(M, a): 2 M exp(-a K) / (exp(a) - 1) <= eps_f.
    Differentiable(nu, V): 2 V / (pi nu K^nu) <= eps_f.

    Parameters
    ----------
    smoothness : Analytic or Differentiable
        regularity class of the coefficient
    eps_f : float
        target sup-norm error

    Returns
    -------
    int

    Raises
    ------
    InvalidSmoothness
        if nu < 1
    """
    eps_f = float(eps_f)
    if not eps_f > 0.0:
        raise EncodingParameterOutsideBoundaries(
            "truncation_degree", "eps_f", lim=[0.0, None], unit=units["error"], value=eps_f
        )
    if isinstance(smoothness, Analytic):
        a, bound = float(smoothness.strip), float(smoothness.bound)
        if a <= 0.0 or bound <= 0.0:
            raise InvalidSmoothness(f"truncation_degree, analytic class needs positive bound and strip: {smoothness}")
        return max(0, math.ceil(math.log(2.0 * bound / (eps_f * math.expm1(a))) / a))
    if isinstance(smoothness, Differentiable):
        if smoothness.nu < 1:
            raise InvalidSmoothness(f"truncation_degree, nu must be at least 1: {smoothness.nu}")
        if smoothness.variation <= 0.0:
            raise InvalidSmoothness(f"truncation_degree, variation must be positive: {smoothness.variation}")
        ratio = 2.0 * smoothness.variation / (math.pi * smoothness.nu * eps_f)
        return max(1, math.ceil(ratio ** (1.0 / smoothness.nu)))
    raise TypeError(f"truncation_degree, unknown smoothness class: {smoothness}")
