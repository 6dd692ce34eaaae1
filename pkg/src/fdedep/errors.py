"""Exception hierarchy shared by every module."""


class FdeError(Exception):
    """Base class for all package errors."""


class OutOfDomain(FdeError):
    def __init__(self, t, lo=None, hi=None):
        self.t = t
        self.lo = lo
        self.hi = hi
        if lo is None:
            super().__init__(f"t={t!r} outside domain")
        else:
            super().__init__(f"t={t!r} outside domain [{lo!r}, {hi!r}]")


class GridMismatch(FdeError):
    pass


class ParseError(FdeError):
    def __init__(self, message, line=1, column=1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class DelayOutOfRange(ParseError):
    def __init__(self, delay, r, line=1, column=1):
        self.delay = delay
        self.r = r
        super().__init__(f"delay {delay!r} outside [0, {r!r}]", line, column)


class EvalError(FdeError):
    pass


class StepUnderflow(FdeError):
    pass


class NoConvergence(FdeError):
    def __init__(self, max_iter, residual):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(f"no convergence after {max_iter} iterations (residual {residual:.3e})")


class SelfMapViolation(FdeError):
    """An iterate left A(a, beta); the bound M was too small."""

    def __init__(self, message, observed=None):
        self.observed = observed
        super().__init__(message)


class ProbeOutOfDomain(FdeError):
    pass


class DegenerateFit(FdeError):
    pass
