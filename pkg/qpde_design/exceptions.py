"""
List of custom exceptions
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"


class ParameterOutsideBoundaries(Exception):
    """
    Class to raise the exeption parameter outside boundaries
    """

    def __init__(self, obj, prop, lim=None, unit=None, value=None):
        """
        Create an exception for parameters problems

        Args:
            obj  ([str]): name of the object owning the parameter
            prop ([str]): string with the parameter
            lim  ([list]): list with boundaries
            unit ([str]): unit of the parameter
            value: offending value
        """

        super().__init__(obj, prop, lim, unit, value)
        self.obj = obj
        self.prop = prop
        self.lim = lim
        self.unit = unit
        self.value = value


class GridParameterOutsideBoundaries(ParameterOutsideBoundaries):
    """
    Class to raise the exeption grid parameter outside boundaries
    """

    pass


class EncodingParameterOutsideBoundaries(ParameterOutsideBoundaries):
    """
    Class to raise the exeption block-encoding parameter outside boundaries
    """

    pass


#%% Linear algebra exceptions
class MaterializationTooLarge(Exception):
    """
    Dense materialization above the configured cap
    """

    pass


class InvalidMatrix(Exception):
    """
    Non-finite, non-square or otherwise unusable matrix
    """

    pass


class DimensionMismatch(Exception):

    pass


class RegisterSliceMismatch(Exception):

    pass


class AmplitudeVanished(Exception):
    """
    Projected amplitude below the success-probability floor
    """

    pass


#%% Block-encoding calculus exceptions
class EmptyTermList(Exception):

    pass


class ZeroNormCoefficients(Exception):

    pass


class InvalidSelectorIndex(Exception):

    pass


class IncompatibleBlockEncodings(Exception):
    """
    Block-encodings that cannot be combined (e.g. unequal sub-normalization in a selector)
    """

    pass


class NonHermitianReference(Exception):

    pass


class NonAntiHermitianGenerator(Exception):

    pass


class VerificationFailure(Exception):
    """
    Block-encoding deviates from its reference by more than its error bound
    """

    pass


#%% Diagonal encoders exceptions
class NonFiniteSamples(Exception):

    pass


class ZeroSubnormalization(Exception):

    pass


class InvalidRange(Exception):

    pass


class InvalidSmoothness(Exception):

    pass


class OverlappingFlagPatterns(Exception):

    pass


#%% PDE operators exceptions
class UnsupportedBoundaryCondition(Exception):

    pass


class InconsistentDesignLayout(Exception):

    pass


#%% Design and cost model exceptions
class EmptyRegion(Exception):

    pass


class DegenerateSweep(Exception):

    pass


#%% Configuration exceptions
class ConfigError(Exception):
    """
    Class to raise the exeption of a wrong run configuration
    """

    pass


class UnknownConfigKey(ConfigError):

    pass


class MissingConfigKey(ConfigError):

    pass
