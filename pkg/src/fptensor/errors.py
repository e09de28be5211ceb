"""Exception hierarchy for fptensor."""


class FPError(Exception):
    """Base class for all errors raised by fptensor."""


class JetOrderError(FPError):
    """A jet order is out of range or too low for the requested derivative."""


class ParseError(FPError):
    def __init__(self, message: str, offset: int | None = None, text: str | None = None):
        self.offset = offset
        self.text = text
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class DomainError(FPError):
    """An expression was evaluated outside the domain of one of its functions."""

    def __init__(self, message: str, subexpression: str | None = None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


class SingularFrameError(FPError):
    def __init__(self, point, det: float):
        self.point = point
        self.det = det
        super().__init__(f"frame matrix is singular at {point} (det = {det:.3e})")


class NotPositiveDefiniteError(FPError):
    def __init__(self, point, minor: int, value: float):
        self.point = point
        self.minor = minor
        self.value = value
        super().__init__(
            f"metric is not positive definite at {point}: "
            f"leading minor {minor} = {value:.3e}"
        )


class SamplingError(FPError):
    """Sample set does not satisfy an operation's requirements."""
