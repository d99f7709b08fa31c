"""Exception hierarchy.

Two families matter for the CLI exit-code contract: ``InputError`` (malformed documents,
files, expressions; exit code 1) and ``PreconditionError`` (mathematically invalid
configurations; exit code 2).
"""

from __future__ import annotations


class JunctionError(Exception):
    """Base class for everything raised by this package."""


class InputError(JunctionError, ValueError):
    """Malformed input document, file, or expression."""


class PreconditionError(JunctionError, ValueError):
    """A mathematical precondition of an operation does not hold."""


class DomainError(PreconditionError):
    """A density or entropy constant lies outside [0, 1]."""


class InfeasibleFluxError(PreconditionError):
    """A requested flux exceeds the maximum of the flux function."""


class InadmissibleFluxError(PreconditionError):
    """A flux lies outside the demand/supply interval of the given datum."""


class TopologyError(PreconditionError):
    """Wrong number of incoming/outgoing arcs for the requested operation."""


class UnbalancedStateError(PreconditionError):
    """A trace vector does not balance incoming and outgoing flux."""


class InvalidMatrixError(PreconditionError):
    """A distribution matrix is malformed or outside the uniqueness class."""


class DegeneracyError(PreconditionError):
    """The flux-maximization objective has no unique maximizer."""


class FaceMismatchError(PreconditionError):
    """A trace vector does not lie on the requested constraint face."""


class StepSizeError(PreconditionError):
    """A time step violates the CFL stability bound."""
