"""Exception hierarchy shared by the engines and the CLI."""


class ZenoError(Exception):
    """Base class for all errors raised by zenolab."""


class NonHermitian(ZenoError, ValueError):
    """An operator expected to be Hermitian is not (beyond tolerance)."""


class ConvergenceFailure(ZenoError, ArithmeticError):
    """The eigensolver did not converge."""


class ShapeMismatch(ZenoError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class NumericDrift(ZenoError, ArithmeticError):
    """A conserved quantity drifted beyond tolerance during propagation."""


class SizeLimit(ZenoError, ValueError):
    """The requested Fock space is too large for the brute-force oracle."""


class ZeroEigenvalue(ZenoError, ValueError):
    """An apparatus eigenvalue of zero admits no critical measurement time."""


class ConfigError(ZenoError):
    """Invalid experiment configuration; carries an optional line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
