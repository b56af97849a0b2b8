"""Exception hierarchy shared by every compart module."""


class CompartError(Exception):
    """Base class for all library errors."""


class DegenerateGraphError(CompartError):
    """Raised when a graph has too few nodes for densities to be defined."""


class NoEdgesError(CompartError):
    """Raised by measures that need at least one edge."""


class GraphValidationError(CompartError, ValueError):
    """Invalid graph or membership construction (self-loops, duplicates, bad labels)."""


class DomainError(CompartError, ValueError):
    """An (F, D, D_M) triple that no graph can realize."""


class BoundaryError(CompartError, ValueError):
    """Derivative requested on the branch boundary F == D_M."""


class GraphFullError(CompartError):
    """Both dyad pools are exhausted."""


class PoolExhaustedError(CompartError):
    """A draw was requested from an empty dyad pool."""


class ConfigError(CompartError, ValueError):
    """Generative or sweep configuration that cannot be run."""


class DegenerateInputError(CompartError, ValueError):
    """Series too short or with zero variance."""


class ParseError(CompartError, ValueError):
    """Input file could not be parsed; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class AlignmentError(CompartError, ValueError):
    """Period labels differ between inputs that must cover the same periods."""
