"""Exception types shared across the package."""

from __future__ import annotations


class PreconditionError(ValueError):
    """A numeric argument violates a documented bound.

    ``bound`` names the violated condition so the CLI can report it.
    """

    def __init__(self, bound: str, message: str):
        super().__init__(f"{bound}: {message}")
        self.bound = bound


class NumericalFault(RuntimeError):
    """A solver failed in a way the mathematics says it should not."""
