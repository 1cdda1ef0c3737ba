"""Exception hierarchy for the colossally-abundant-number toolkit.

Every exception carries an ``exit_code`` used by the command-line layer:

====  =====================================================================
code  meaning
====  =====================================================================
1     usage / bad input (bad arguments, domain errors, malformed files)
2     resource limits (sieve exhausted, table too large, bound exceeded)
3     verification failure (a checked mathematical assertion did not hold)
4     four-exponentials witness (two candidate exponents tied beyond the
      configured precision — a reportable event, never silently resolved)
====  =====================================================================
"""

from __future__ import annotations


class CabundantError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(CabundantError):
    """Invalid command-line usage or configuration."""

    exit_code = 1


class DomainError(CabundantError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 1


class ExcludedInputError(DomainError):
    """The input is explicitly excluded from an operation's domain
    (e.g. the unconditional bound is undefined at n in {1, 2, 12})."""


class SingularityError(DomainError):
    """An oscillation-geometry denominator or log argument is not positive."""


class InsufficientDataError(CabundantError):
    """A window or scan requires records beyond the generated horizon."""

    exit_code = 1


class NotFoundError(CabundantError):
    """A lookup failed (e.g. prime-index query for a non-prime)."""

    exit_code = 1


class CheckpointError(CabundantError):
    """Base class for checkpoint load failures."""

    exit_code = 1


class CheckpointVersionError(CheckpointError):
    """The checkpoint's format version is not supported."""


class CheckpointParseError(CheckpointError):
    """The checkpoint payload is malformed or incomplete."""


class ResourceError(CabundantError):
    """A configured resource limit would be exceeded."""

    exit_code = 2


class SieveExhaustedError(ResourceError):
    """A prime beyond the sieve limit is required; rebuild with a larger
    limit to continue."""


class TableLimitError(ResourceError):
    """The requested divisor-sum table exceeds the supported size."""


class MaterializationBoundError(ResourceError):
    """The decoded integer would exceed the materialization bound; callers
    should fall back to log-domain statistics."""


class VerificationError(CabundantError):
    """A checked mathematical assertion failed."""

    exit_code = 3


class FourExponentialsWitness(CabundantError):
    """Two candidate growth exponents agree beyond the tie tolerance.

    The candidate exponent sequence is assumed to be strictly decreasing,
    which follows from the conjectural linear independence of the involved
    logarithms; an actual tie between two distinct prime-power candidates
    would therefore be a publishable event.  The engine raises this error
    carrying both candidates instead of silently picking one.

    Attributes
    ----------
    pairs:
        The two ``(prime, exponent)`` candidates, when known.
    epsilons:
        The two candidate exponent values as evaluated.
    indices:
        Positions of the two candidates in the candidate list.
    """

    exit_code = 4

    def __init__(self, epsilons, indices, pairs=None):
        self.epsilons = tuple(epsilons)
        self.indices = tuple(indices)
        self.pairs = tuple(pairs) if pairs is not None else None
        if self.pairs is not None:
            detail = (
                f"candidates {self.pairs[0]} and {self.pairs[1]} "
                f"tie at {self.epsilons[0]!r} vs {self.epsilons[1]!r}"
            )
        else:
            detail = (
                f"candidates at positions {self.indices[0]} and "
                f"{self.indices[1]} tie at {self.epsilons[0]!r} vs "
                f"{self.epsilons[1]!r}"
            )
        super().__init__(f"four-exponentials witness: {detail}")
