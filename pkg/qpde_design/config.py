"""
This module includes the run configuration: YAML schema validation and the builders of
the grid, coefficient series, design space and target region of a run
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import copy
import logging
import os

import yaml

from qpde_design.design import DesignSpace, TargetRegion, gaussian_profile, DEFAULT_CENTER
from qpde_design.exceptions import (
    ConfigError,
    UnknownConfigKey,
    MissingConfigKey,
    ParameterOutsideBoundaries,
    DimensionMismatch,
    UnsupportedBoundaryCondition,
)
from qpde_design.fourier_series import FourierSeries, fit_fourier, Analytic, Differentiable
from qpde_design.pde_operators import GridSpec, WAVE_DEMO_BC
from qpde_design.units import limits

REQUIRED = object()

# section -> key -> default (REQUIRED when the key has no default)
SCHEMA = {
    "grid": {"d": 2, "n": REQUIRED, "bc": None},
    "coefficient": {
        "function": "gaussian",
        "center": list(DEFAULT_CENTER),
        "value": 1.0,
        "path": None,
        "degree": REQUIRED,
        "quad_points": None,
    },
    "evolution": {"t": REQUIRED, "eps_hs": REQUIRED, "method": "auto", "backend": "auto"},
    "design": {"params": REQUIRED},
    "region": {"x": None, "y": None, "indices": None, "component": 0},
    "output": {"dir": "results"},
    "limits": {"materialization_cap": None, "circuit_amplitude_cap": None, "threads": 1},
    "verify": {"n": None, "corrupt_alpha": None, "eps_hs": 1e-6},
    "cost": {
        "generator": "A1st",
        "sweep": {"d": [1, 2], "K": [1, 2, 3, 4], "n": [2, 3, 4, 5]},
        "eps": 1e-3,
        "smoothness": {"class": "analytic", "bound": 1.0, "strip": 1.0},
    },
}

COEFFICIENT_FUNCTIONS = ("gaussian", "constant", "file")


class RunConfig:
    """
    Validated run configuration

    ...

    Attributes
    ----------
    sections : dict
        section name -> dict of values, defaults filled in
    path : str
        file the configuration was read from, if any
    seed : int
        seed of randomized checks
    """

    def __init__(self, data: dict = None, path: str = None, seed: int = 0):
        self.path = path
        self.seed = int(seed)
        self.sections = self._validate(data or {})

    @classmethod
    def read_yaml(cls, path: str, **kwargs):
        """
        Read and validate a YAML configuration file

        Raises
        ------
        ConfigError
            if the file is missing or not a mapping
        UnknownConfigKey
            for keys outside the schema
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except FileNotFoundError:
            raise ConfigError(f"Configuration file not found: {path}")
        except yaml.YAMLError as e:
            raise ConfigError(f"Configuration file {path} is not valid YAML: {e}")
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"Configuration file {path} must contain a mapping of sections")
        logging.info(f"RunConfig: read {path}")
        return cls(data, path=path, **kwargs)

    @staticmethod
    def _validate(data: dict) -> dict:
        sections = {}
        for name, values in data.items():
            if name not in SCHEMA:
                raise UnknownConfigKey(f"Unknown configuration section '{name}', allowed: {sorted(SCHEMA)}")
            if values is None:
                values = {}
            if not isinstance(values, dict):
                raise ConfigError(f"Configuration section '{name}' must be a mapping")
            unknown = set(values) - set(SCHEMA[name])
            if unknown:
                raise UnknownConfigKey(
                    f"Unknown keys {sorted(unknown)} in section '{name}', allowed: {sorted(SCHEMA[name])}"
                )
        for name, schema in SCHEMA.items():
            merged = copy.deepcopy(schema)
            merged.update(data.get(name) or {})
            sections[name] = merged
        sections["_present"] = set(data)
        return sections

    def section(self, name: str) -> dict:
        """
        Values of a section; raises MissingConfigKey if a required key has no value
        """
        values = self.sections[name]
        missing = [key for key, value in values.items() if value is REQUIRED]
        if missing:
            raise MissingConfigKey(f"Missing keys {missing} in section '{name}'")
        return values

    def has_section(self, name: str) -> bool:
        return name in self.sections["_present"]

    def override(self, out_dir: str = None, threads: int = None, seed: int = None):
        """
        Command-line overrides of the output directory, thread count and seed
        """
        if out_dir is not None:
            self.sections["output"]["dir"] = out_dir
        if threads is not None:
            self.sections["limits"]["threads"] = threads
        if seed is not None:
            self.seed = int(seed)

    # %% Builders

    @property
    def out_dir(self) -> str:
        return str(self.sections["output"]["dir"])

    @property
    def threads(self) -> int:
        try:
            value = int(self.sections["limits"]["threads"])
        except (TypeError, ValueError):
            raise ConfigError(f"limits.threads is not an int: {self.sections['limits']['threads']}")
        if value < 1 or value > limits["max_threads"]:
            raise ConfigError(f"limits.threads must be in [1, {limits['max_threads']}]: {value}")
        return value

    def apply_limits(self):
        """
        Copy the configured caps into units.limits
        """
        for key in ("materialization_cap", "circuit_amplitude_cap"):
            value = self.sections["limits"][key]
            if value is not None:
                try:
                    limits[key] = int(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"limits.{key} is not an int: {value}")

    def grid(self, n=None) -> GridSpec:
        values = self.section("grid")
        bc = values["bc"]
        if bc is None and int(values["d"]) == 2:
            bc = WAVE_DEMO_BC
        try:
            return GridSpec(values["d"], values["n"] if n is None else n, bc)
        except (ParameterOutsideBoundaries, DimensionMismatch, UnsupportedBoundaryCondition, ValueError, TypeError) as e:
            raise ConfigError(f"Invalid grid section: {e}")

    def source_function(self, d: int = 2):
        values = self.section("coefficient")
        function = values["function"]
        if function not in COEFFICIENT_FUNCTIONS:
            raise ConfigError(f"coefficient.function must be one of {COEFFICIENT_FUNCTIONS}: {function}")
        if function == "gaussian":
            if d != 2:
                raise ConfigError("coefficient.function gaussian needs a two-dimensional grid")
            return gaussian_profile(values["center"])
        if function == "constant":
            value = float(values["value"])
            if d == 1:
                return lambda x: value + 0.0 * x
            return lambda x, y: value + 0.0 * x * y
        return None

    def series(self, d: int = 2) -> FourierSeries:
        """
        Fourier series of the coefficient: fitted to the named function, or read from
        coefficient.path when function is file
        """
        values = self.section("coefficient")
        if values["function"] == "file":
            if values["path"] is None:
                raise MissingConfigKey("coefficient.path is needed when coefficient.function is file")
            path = values["path"]
            if self.path is not None and not os.path.isabs(path):
                path = os.path.join(os.path.dirname(self.path), path)
            try:
                return FourierSeries.read_csv(path, dims=d)
            except (FileNotFoundError, ValueError) as e:
                raise ConfigError(str(e))
        f = self.source_function(d)
        degree = values["degree"]
        degrees = [int(degree)] * d if isinstance(degree, (int, float)) else [int(k) for k in degree]
        if len(degrees) != d:
            raise ConfigError(f"coefficient.degree needs {d} entries: {degree}")
        try:
            return fit_fourier(f, degrees, values["quad_points"])
        except (ParameterOutsideBoundaries, ValueError) as e:
            raise ConfigError(f"Invalid coefficient section: {e}")

    def design_space(self) -> DesignSpace:
        params = self.section("design")["params"]
        try:
            return DesignSpace([(p["name"], p["m"], p.get("lo", 0.0), p.get("hi", 1.0)) for p in params])
        except (KeyError, TypeError) as e:
            raise ConfigError(f"design.params entries need name and m: {e}")
        except (ParameterOutsideBoundaries, ValueError) as e:
            raise ConfigError(f"Invalid design section: {e}")

    def region(self, grid: GridSpec) -> TargetRegion:
        values = self.section("region")
        component = values["component"]
        if values["indices"] is not None:
            return TargetRegion(values["indices"], component)
        if values["x"] is None or values["y"] is None:
            raise MissingConfigKey("region needs indices or both x and y ranges")
        return TargetRegion.rectangle(grid, values["x"], values["y"], component)

    def smoothness(self):
        values = dict(self.section("cost")["smoothness"])
        kind = values.pop("class", "analytic")
        try:
            if kind == "analytic":
                return Analytic(float(values["bound"]), float(values["strip"]))
            if kind == "differentiable":
                return Differentiable(float(values["nu"]), float(values["variation"]))
        except KeyError as e:
            raise MissingConfigKey(f"cost.smoothness misses {e}")
        raise ConfigError(f"cost.smoothness.class must be analytic or differentiable: {kind}")

    def __repr__(self):
        return f"RunConfig(path={self.path}, sections={sorted(self.sections['_present'])})"
