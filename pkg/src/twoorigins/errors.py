"""Shared exception types.

Every error raised on purpose by this package derives from TwoOriginsError,
so callers can catch one base class. DomainError covers violated
preconditions on mathematical inputs (the moral equivalent of ValueError).
"""

from __future__ import annotations


class TwoOriginsError(Exception):
    """Base class for all package errors."""


class DomainError(TwoOriginsError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class InvalidAtlas(DomainError):
    """A chart pair does not assemble into a valid atlas (non-monotone transition)."""


class IncompatiblePresentations(TwoOriginsError):
    """The two chart presentations of a would-be diffeomorphism disagree.

    Carries the residual germ (the composite that should have been the
    identity) so callers can inspect how badly the compatibility identity
    failed.
    """

    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class NotJoinable(DomainError):
    """Chart images do not interleave the way a join or chain requires."""


class GlueInfeasible(TwoOriginsError):
    """The glue construction has no room at this eps (the fitted mass A is <= 0).

    Callers are expected to retry with a smaller eps; glue_auto does exactly
    that.
    """

    def __init__(self, message: str, eps: float, mass: float):
        super().__init__(message)
        self.eps = eps
        self.mass = mass
