"""Exception hierarchy.

The four branches map onto CLI exit codes: ConfigError -> 2,
DataError -> 3, ModelError -> 4, ExternalToolError -> 5.
"""


class CRKitError(Exception):
    """Base class for all package errors."""


class ConfigError(CRKitError):
    """Invalid run configuration (bad flags, missing inputs)."""


class DataError(CRKitError, ValueError):
    """Invalid or inconsistent input data."""


class UnreadableFile(DataError):
    pass


class SizeMismatch(DataError):
    """File size disagrees with the declared shape and element width."""


class NonFiniteValue(DataError):
    """Input contains NaN or Inf; carries the flat index of the first one."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AxisOutOfRange(DataError):
    pass


class TooFewDims(DataError):
    pass


class EmptyField(DataError):
    pass


class EmptyInput(DataError):
    pass


class NonPositiveEps(DataError):
    pass


class NotTwoDimensional(DataError):
    pass


class NotThreeDimensional(DataError):
    pass


class DegenerateShape(DataError):
    pass


class NonPositiveOmega(DataError):
    pass


class GridTooLargeForExactMethod(DataError):
    pass


class CorruptStream(DataError):
    """Codestream fails validation (bad magic, truncation, bad lengths)."""


class ZeroTrueCR(DataError):
    pass


class ModelError(CRKitError):
    """Model fitting or prediction failed."""


class TooFewRows(ModelError):
    pass


class SingularDesign(ModelError):
    pass


class UntrainedModel(ModelError):
    pass


class WrongModelKind(ModelError):
    pass


class KTooLarge(ModelError):
    pass


class InsufficientSamples(ModelError):
    pass


class ZeroVariance(ModelError):
    pass


class TargetOutOfRange(ModelError):
    pass


class BudgetExhausted(ModelError):
    pass


class ExternalToolError(CRKitError):
    """External compressor invocation failed."""


class ExternalFailure(ExternalToolError):
    def __init__(self, message, stderr=None, returncode=None):
        super().__init__(message)
        self.stderr = stderr
        self.returncode = returncode


class ExternalTimeout(ExternalToolError):
    pass
