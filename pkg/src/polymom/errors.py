"""Exception types shared across the package.

Every failure the inverse pipeline can recover from (by resampling a
direction or retrying with a different mixing coefficient) has its own
class, so callers can distinguish "try again" from "bad input".
"""


class PolymomError(Exception):
    """Base class for all package errors."""


class InputError(PolymomError):
    """Malformed input: bad file, bad grammar, missing data."""


class InsufficientMoments(InputError):
    """A moment sequence is too short for the requested Hankel size."""


class DenominatorVanishes(PolymomError):
    """A cone denominator <w, z> is zero: z is orthogonal to an edge.

    Signals that z violates the general-position requirement; callers
    should resample the direction.
    """

    def __init__(self, vertex, edge):
        self.vertex = vertex
        self.edge = edge
        super().__init__(
            f"direction orthogonal to edge {edge} at vertex {vertex}; resample z"
        )


class NonGenericDirection(PolymomError):
    """A direction failed a genericity check downstream of the moments."""


class FullRankHankel(NonGenericDirection):
    """The Hankel matrix has no kernel: more moments (larger Nmax) needed."""


class RankInstability(NonGenericDirection):
    """Hankel rank disagrees between adjacent sizes, or the minimal kernel
    vector is not at the rank position; the direction is suspect."""


class RankNotDivisible(NonGenericDirection):
    """Hankel rank is not a multiple of (density degree + 1)."""


class MultiplicityMismatch(NonGenericDirection):
    """A Prony root does not have the expected multiplicity."""


class IrrationalRoot(PolymomError):
    """Exact root extraction found a non-rational root; either the data is
    corrupted or the vertices are not rational."""


class AmbiguousMatching(PolymomError):
    """A projection matched zero or several candidates; retry with a new
    mixing coefficient."""


class MatchingFailure(PolymomError):
    """The mixing-coefficient search budget was exhausted."""


class OracleDisagreement(PolymomError):
    """Two independent moment routes (or a self-check) disagreed."""
