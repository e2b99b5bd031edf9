"""Exception hierarchy.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`NumericError` to exit code 2.
"""


class HeterophilyError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HeterophilyError, ValueError):
    """Input violates a structural contract (shape, format, graph invariant)."""


class GraphFormatError(ValidationError):
    """A graph file could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class IsolatedNodeError(ValidationError):
    """An operation that divides by degree met a degree-0 node."""

    def __init__(self, nodes, what="operation"):
        self.nodes = list(nodes)
        shown = ", ".join(str(i) for i in self.nodes[:10])
        more = "" if len(self.nodes) <= 10 else f" (+{len(self.nodes) - 10} more)"
        super().__init__(f"{what} is undefined for isolated nodes: {shown}{more}")


class DegenerateClassError(ValidationError):
    """A class-conditional mean is over an empty set."""


class ConfigError(ValidationError):
    """Invalid configuration value."""


class NumericError(HeterophilyError, ArithmeticError):
    """Numerical failure (non-finite values, nonpositive probabilities, ...)."""
