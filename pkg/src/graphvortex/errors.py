"""Exception hierarchy shared by every module of the package."""


class VortexError(Exception):
    """Base class for all errors raised by graphvortex."""


class InputError(VortexError, ValueError):
    """Invalid user input: malformed graphs, vortex data or parameters.

    ``line`` and ``column`` are filled in when the error comes from a text
    file, so callers can point at the offending token.
    """

    def __init__(self, message, *, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._format())

    def _format(self):
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class NonPositiveMeasure(InputError):
    pass


class NonPositiveWeight(InputError):
    pass


class SelfLoop(InputError):
    pass


class DuplicateEdge(InputError):
    pass


class DuplicateVertex(InputError):
    pass


class Disconnected(InputError):
    pass


class UnknownVertex(InputError):
    pass


class InvalidExponent(InputError):
    pass


class InvalidParams(InputError):
    pass


class InvalidKind(InputError):
    pass


class InvalidSize(InputError):
    pass


class ParseError(InputError):
    pass


class IncompatibleSource(VortexError, ValueError):
    """Poisson right-hand side with nonzero integral."""


class OverflowGuard(VortexError, ArithmeticError):
    """An exponent argument exceeded the overflow guard.

    Signals that the iterate is running away, not a programming error.
    """

    def __init__(self, max_argument, limit):
        self.max_argument = max_argument
        self.limit = limit
        super().__init__(f"exponent argument {max_argument:.6g} exceeds guard {limit:g}")


class Infeasible(VortexError):
    """The volume does not strictly exceed the existence threshold."""

    def __init__(self, volume, threshold):
        self.volume = volume
        self.threshold = threshold
        self.margin = volume - threshold
        super().__init__(
            f"no solution: |V| = {volume:.17g} does not exceed threshold "
            f"{threshold:.17g} (margin {self.margin:.6g})"
        )


class MaxIterations(VortexError):
    def __init__(self, message, *, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class Diverged(VortexError):
    def __init__(self, message, *, iterations=None):
        self.iterations = iterations
        super().__init__(message)
