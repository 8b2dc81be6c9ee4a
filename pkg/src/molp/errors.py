"""Exception types shared across the solver stack."""


class MolpError(Exception):
    """Base class for all solver errors."""


class Infeasible(MolpError):
    """The feasible region {x : Ax = c, x >= 0} is empty."""


class UnboundedObjective(MolpError):
    """An objective is unbounded from below on the feasible region."""

    def __init__(self, index=None, message=None):
        self.index = index
        if message is None:
            if index is None:
                message = "objective unbounded from below"
            else:
                message = f"objective {index} unbounded from below"
        super().__init__(message)


class InvalidCut(MolpError):
    """The halfspace does not cut the polytope properly."""


class InvalidAdd(MolpError):
    """The point to add is not outside the polytope."""


class DegenerateSpan(MolpError):
    """The given points do not span a unique hyperplane."""


class DegenerateInput(MolpError):
    """Input point set is not full-dimensional."""


class TooLarge(MolpError):
    """Instance exceeds the size caps of the brute-force reference."""


class NumericalFailure(MolpError):
    """An internal numerical consistency check failed."""


class ParseError(MolpError):
    """Malformed problem file or invalid run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(ParseError):
    """Problem file declares or references an out-of-range dimension."""
