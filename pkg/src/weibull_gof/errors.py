"""Exception hierarchy."""


class GofError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveData(GofError, ValueError):
    pass


class ConstantSample(GofError, ValueError):
    """All observations are equal, so the likelihood equations have no root."""


class NoConvergence(GofError, ArithmeticError):
    pass


class QuadratureNonConvergence(GofError, ArithmeticError):
    pass


class SampleUnderflow(GofError, ArithmeticError):
    """A draw fell outside the positive double range."""


class EmptyReplicates(GofError, ValueError):
    pass


class NoPositiveValues(GofError, ValueError):
    pass


class MalformedNumber(GofError, ValueError):
    def __init__(self, token, line):
        super().__init__(f"line {line}: cannot parse {token!r} as a number")
        self.token = token
        self.line = line
