"""Shared exception hierarchy.

The CLI maps these onto its exit-code contract: configuration problems
exit 1, physics rejections (positivity) exit 2, numerical non-convergence
exit 3.  Library code raises them directly.
"""

from __future__ import annotations


class DoscError(Exception):
    """Base class for all package-specific failures."""


class UsageError(DoscError):
    """Malformed configuration, bad CLI arguments, or misuse of an API."""


class PositivityError(DoscError):
    """Coupling too strong: the Hamiltonian would not be bounded below.

    Carries the offending report (continuum) or margin (discrete) in
    ``detail`` so front ends can show the numbers.
    """

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class ConvergenceError(DoscError):
    """A numerical procedure exhausted its budget before reaching tolerance."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class QuadratureError(ConvergenceError):
    """Adaptive quadrature failed; carries the partial result."""

    def __init__(self, message: str, partial=None, detail: dict | None = None):
        super().__init__(message, detail)
        self.partial = partial


class AliasingError(ConvergenceError):
    """Requested evolution times exceed what the frequency grid can resolve.

    Refine the spectral grid (see ``fano.refine_for_times``) and retry.
    """


class OutsideSupportError(DoscError):
    """Query frequency lies outside the coupling support, where Y is undefined."""


class InternalConsistencyError(DoscError):
    """An algebraic identity failed beyond round-off; indicates a bug, not physics."""
