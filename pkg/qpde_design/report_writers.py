"""
This module includes the writers of the run outputs: fixed-format CSV tables and
binary PGM heatmaps with their min/max sidecar files
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
import os

import numpy as np
import pandas as pd

from qpde_design.fourier_series import CSV_FLOAT_FORMAT

PGM_MAXVAL = 255


def write_csv(table: pd.DataFrame, path: str) -> str:
    """
    Write a table with 17 significant digits and no index
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logging.info(f"write_csv: {path} ({len(table)} rows)")
    return path


def scale_to_bytes(values) -> tuple:
    """
    Linear min-max scaling of a real array to 0..255

    Returns
    -------
    (numpy.ndarray, float, float)
        uint8 array, minimum, maximum
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("scale_to_bytes: non-finite values")
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) / (hi - lo) * PGM_MAXVAL)
    else:
        scaled = np.zeros_like(values)
    return scaled.astype(np.uint8), lo, hi


def write_pgm(values, path: str, title: str = "") -> str:
    """
    Binary PGM (P5, maxval 255) of a 2D array, one image row per array row, with a
    sidecar path + ".txt" holding the scaling bounds

    Parameters
    ----------
    values : array-like
        real 2D array
    path : str
        image path
    title : str
        description written in the sidecar

    Returns
    -------
    str
        image path
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"write_pgm: a 2D array is needed, got shape {values.shape}")
    pixels, lo, hi = scale_to_bytes(values)
    rows, cols = pixels.shape
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"P5\n{cols} {rows}\n{PGM_MAXVAL}\n".encode("ascii"))
        f.write(np.ascontiguousarray(pixels).tobytes())
    with open(path + ".txt", "w", encoding="utf-8", newline="\n") as f:
        if title:
            f.write(f"title {title}\n")
        f.write(f"rows {rows}\ncols {cols}\n")
        f.write(f"min {lo:.17g}\nmax {hi:.17g}\n")
        f.write("scaling linear min-max to 0..255, row-major\n")
    logging.info(f"write_pgm: {path} ({rows} x {cols}, [{lo:.6g}, {hi:.6g}])")
    return path


def read_pgm(path: str) -> np.ndarray:
    """
    Pixels of a binary PGM written by write_pgm
    """
    with open(path, "rb") as f:
        data = f.read()
    header = data.split(b"\n", 3)
    if header[0] != b"P5":
        raise ValueError(f"read_pgm: {path} is not a binary PGM")
    cols, rows = (int(v) for v in header[1].split())
    return np.frombuffer(header[3], dtype=np.uint8).reshape(rows, cols)


def field_image(amplitudes, grid_shape, component: int = 0) -> np.ndarray:
    """
    |w_component|^2 as an image with y along rows (top row y = 1) and x along columns
    """
    nx, ny = grid_shape
    field = np.abs(np.asarray(amplitudes).reshape(4, nx, ny)[component]) ** 2
    return field.T[::-1]
