"""Exception hierarchy.

Every error raised deliberately by the package derives from NTKGaussError,
so callers (the CLI in particular) can catch the whole family at once and
turn it into a machine-readable record via ``to_record``.
"""


class NTKGaussError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, **fields):
        super().__init__(message)
        self.fields = fields

    def to_record(self):
        record = {"error": type(self).__name__, "message": str(self)}
        record.update(self.fields)
        return record


# linear algebra
class InvalidMatrix(NTKGaussError, ValueError):
    pass


class InvalidTime(NTKGaussError, ValueError):
    pass


class NotPSD(NTKGaussError, ValueError):
    pass


# network / training
class InvalidShape(NTKGaussError, ValueError):
    pass


class DivergedTraining(NTKGaussError, FloatingPointError):
    pass


class DivergedFlow(NTKGaussError, FloatingPointError):
    pass


# kernels / gp
class InvalidCovariance(NTKGaussError, ValueError):
    pass


class KernelDegenerate(NTKGaussError, ValueError):
    pass


# optimal transport
class UnequalSupport(NTKGaussError, ValueError):
    pass


class EmptyDist(NTKGaussError, ValueError):
    pass


class TooLarge(NTKGaussError, ValueError):
    pass


# bounds
class InvalidR(NTKGaussError, ValueError):
    pass


class NormAuditFailed(NTKGaussError, AssertionError):
    pass


# harness
class InvalidFitInput(NTKGaussError, ValueError):
    pass


class TooFewPoints(NTKGaussError, ValueError):
    pass


class UndersampledError(NTKGaussError, ValueError):
    pass


class ConfigError(NTKGaussError, ValueError):
    pass
