"""Exception hierarchy. All errors derive from :class:`FidboundError`."""


class FidboundError(ValueError):
    pass


class NotHermitian(FidboundError):
    pass


class NotPSD(FidboundError):
    pass


class NoConvergence(FidboundError, ArithmeticError):
    pass


class NotUnitary(FidboundError):
    pass


class InvalidState(FidboundError):
    """A matrix or vector violates a state invariant (trace, positivity, shape)."""


class DimensionMismatch(FidboundError):
    pass


class LengthMismatch(FidboundError):
    pass


class InvalidSpec(FidboundError):
    pass


class InvalidLambda(FidboundError):
    pass


class NegativeInput(FidboundError):
    pass


class InfiniteLambda0(FidboundError):
    """rho is not supported inside sigma, so lambda_0 = +inf."""


class DegenerateLambda0(FidboundError):
    """lambda_0 is 1 (rho == sigma); sigma-hat is undefined."""


class UnsupportedDimension(FidboundError):
    pass
