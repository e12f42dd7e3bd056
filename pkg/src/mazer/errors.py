"""Exceptions raised by the numerical routines."""


class MazerError(Exception):
    """Base class for numerical failures in this package."""


class SingularKernel(MazerError):
    """A closed-form kernel denominator vanished within the relative guard."""


class IllConditioned(MazerError):
    """The boundary-matching linear system is too ill-conditioned to trust."""


class NoConvergence(MazerError):
    """Slice refinement did not reach the requested tolerance."""
