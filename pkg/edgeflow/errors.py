"""
Exception hierarchy for edgeflow.

Input problems (bad graphs, assignments, files) derive from ``InputError``;
violated mathematical preconditions (positivity, identifiability) derive from
``PreconditionError``. The CLI maps the two families to distinct exit codes.
"""

from typing import Optional


class EdgeFlowError(Exception):
    """Base class for all edgeflow errors."""


class InputError(EdgeFlowError, ValueError):
    """Malformed input: graph, assignment, path set or model file."""


class GraphCycleError(InputError):
    """The edge relation contains a directed cycle."""


class UnknownNodeError(InputError):
    """A node name does not exist in the graph."""


class IncompleteAssignmentError(InputError):
    """A full assignment was required but some nodes are missing."""


class ModelFileError(InputError):
    """A model file could not be parsed or converted."""


class PreconditionError(EdgeFlowError):
    """A mathematical precondition of an operation does not hold."""


class ZeroProbabilityError(PreconditionError):
    """Conditioning on an event of probability zero."""


class PositivityError(PreconditionError):
    """A quantity that must be strictly positive is zero."""

    def __init__(self, message: str, cell: Optional[str] = None):
        super().__init__(message)
        self.cell = cell


class RecantingWitnessError(PreconditionError):
    """A path-specific distribution is not identifiable."""

    def __init__(self, witness: str, criterion: str = "segment"):
        super().__init__(
            f"Path set is not identifiable: recanting witness '{witness}' ({criterion} criterion)"
        )
        self.witness = witness
        self.criterion = criterion


class DegenerateDomainError(PreconditionError):
    """A value domain has no alternative value to average over."""


class ConvergenceError(EdgeFlowError):
    """An optimizer did not converge and the caller asked for strict handling."""
