class LabError(Exception):
    """Base class for errors raised by lqlab."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(LabError):
    """A computation would exceed a configured size limit."""


class PreconditionError(LabError):
    """A guardrail required by an identity is violated."""
