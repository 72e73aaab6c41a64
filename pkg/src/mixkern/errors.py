"""Exception hierarchy shared by every module."""


class MixkernError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(MixkernError, ValueError):
    pass


class UnsupportedNu(MixkernError, ValueError):
    pass


class InvalidKernel(MixkernError, ValueError):
    pass


class UnknownParameter(MixkernError, KeyError):
    pass


class NotPositiveDefinite(MixkernError, ArithmeticError):
    """Cholesky hit a nonpositive pivot.

    ``pivot`` is the zero-based row index where factorization failed.
    """

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix not positive definite (pivot {pivot})")


class NonFinite(MixkernError, ArithmeticError):
    pass


class UnsupportedKernel(MixkernError, ValueError):
    pass


class MixedCase(MixkernError, ValueError):
    """Smoothness values are neither all distinct nor all equal."""


class QuadratureFailure(MixkernError, ArithmeticError):
    pass


class SplitTooSmall(MixkernError, ValueError):
    pass


class MaskTooLarge(MixkernError, ValueError):
    pass


class ParseError(MixkernError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownKey(ParseError):
    pass


class InvalidKernelSpec(ParseError):
    pass


class SchemaMismatch(MixkernError, ValueError):
    pass


class NonFiniteValue(MixkernError, ValueError):
    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"non-finite value at row {row}")


class UnsupportedFormat(MixkernError, ValueError):
    pass


class CorruptHeader(MixkernError, ValueError):
    pass
