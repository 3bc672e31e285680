"""
Numerical Errors
================

One hierarchy for every failure the library can signal. Commands map
these onto exit codes; library callers can catch ``AiryProcessError``.
"""


class AiryProcessError(Exception):
    """Base class for all library errors"""


class AiryDomainError(AiryProcessError, ValueError):
    """Argument outside the domain of a function (e.g. non-finite)"""


class AiryRangeError(AiryProcessError, ValueError):
    """Argument inside the domain but outside the supported range"""


class KernelIndexError(AiryProcessError, IndexError):
    """Block index outside 1..m"""


class NumericError(AiryProcessError, ArithmeticError):
    """Non-finite value met in a computation"""


class QuadratureError(NumericError):
    """Integrand returned a non-finite value at a quadrature node"""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegeneracyError(AiryProcessError, ArithmeticError):
    """
    det(I - K_n) is not positive or the system is singular

    A genuine Fredholm determinant of the extended Airy kernel lies in
    (0, 1]; anything else means the discretization failed.
    """

    def __init__(self, message, det=None):
        super().__init__(message)
        self.det = det


class OdeSingularityError(AiryProcessError, ArithmeticError):
    """Integration stopped: step underflow, blow-up or trusted range left"""

    def __init__(self, message, last_shift=None):
        super().__init__(message)
        self.last_shift = last_shift
