"""Shared exception types."""


class OcsisError(Exception):
    """Base class for all errors raised by this package."""


class UnknownParameter(OcsisError):
    """A condition or state referenced a parameter missing from the registry."""

    def __init__(self, name: str):
        super().__init__(f"unknown parameter {name}")
        self.name = name


class InvalidLevel(OcsisError):
    """Information level outside {1, 2, 3}."""
