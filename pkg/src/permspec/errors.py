"""Exception hierarchy shared by all modules."""


class PermspecError(Exception):
    """Base class; ``kind`` is the machine-readable tag printed by the CLI."""

    kind = "error"


class InvalidArgument(PermspecError, ValueError):
    kind = "invalid-argument"


class DomainError(InvalidArgument):
    """Evaluation point outside the guarded disk."""

    kind = "domain-error"


class ResourceLimit(PermspecError, RuntimeError):
    kind = "resource-limit"


class NumericalFailure(PermspecError, ArithmeticError):
    kind = "numerical-failure"
