"""
Exception hierarchy for JunctionWalk.

Every error carries the process exit code the CLI reports for it.
"""

from src.config.settings import (
    EXIT_CONFIG_ERROR,
    EXIT_DATA_ERROR,
    EXIT_FAILURE,
    EXIT_NUMERICAL_ERROR,
)


class JunctionWalkError(Exception):
    """Base class for all library errors."""

    exit_code = EXIT_FAILURE


class ConfigError(JunctionWalkError):
    """Invalid run configuration or command-line usage."""

    exit_code = EXIT_CONFIG_ERROR


class DataError(JunctionWalkError):
    """Unreadable or malformed input data."""

    exit_code = EXIT_DATA_ERROR


class CorruptTrace(DataError):
    """A persisted chain trace cannot be replayed consistently."""


class NumericalError(JunctionWalkError):
    """A matrix factorization or log-density evaluation failed."""

    exit_code = EXIT_NUMERICAL_ERROR


class GraphError(JunctionWalkError, ValueError):
    """Structural precondition violated on a graph or junction tree."""


class NotChordal(GraphError):
    pass


class NotATree(GraphError):
    pass


class TooLarge(GraphError):
    """Requested exhaustive computation exceeds its vertex bound."""


class VertexUnhoused(GraphError):
    """A graph vertex is contained in no clique of the junction tree."""


class StaleProposal(GraphError):
    """A move no longer matches the junction tree it is applied to."""


class InvariantViolation(GraphError):
    """A chain state failed its chordality or junction-property check."""


class DomainError(JunctionWalkError, ValueError):
    """Argument outside the domain of a numerical routine."""


class RhoOutOfRange(DomainError):
    pass


class SeriesTooShort(DomainError):
    pass
