"""Shared exception types."""


class DomainError(ValueError):
    """An argument is outside the domain an operation is defined on."""


class NotApplicable(Exception):
    """The operation is undefined for this input (e.g. a single-district state)."""
