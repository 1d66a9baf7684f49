"""Exception hierarchy shared by the library and the CLI."""


class IsopurityError(Exception):
    """Base class for every error raised by isopurity."""


# Domain errors: the input lies outside a mathematical domain.

class DomainError(IsopurityError, ValueError):
    pass


class BelowBetaMinus(DomainError):
    """No real positive-density saddle point exists below beta_minus."""


class OutsideConvergence(DomainError):
    pass


class UnsupportedOrder(DomainError):
    pass


class UnsupportedImbalance(DomainError):
    pass


class InvalidDims(DomainError):
    pass


# Spectra

class SpectrumInvalid(IsopurityError, ValueError):
    pass


class SumOutOfTolerance(SpectrumInvalid):
    pass


class NegativeEigenvalue(SpectrumInvalid):
    pass


# Numerical failures (CLI exit code 3)

class NumericalError(IsopurityError, ArithmeticError):
    pass


class EigensolverFailure(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


# Estimator inputs

class SampleError(IsopurityError, ValueError):
    pass


class TooFewSamples(SampleError):
    pass


class SeriesTooShort(SampleError):
    pass


class EmptyInput(SampleError):
    pass


class SchemaError(IsopurityError, ValueError):
    """An input file does not follow its documented schema."""
