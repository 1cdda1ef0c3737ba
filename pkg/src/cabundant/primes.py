"""Prime enumeration backed by a dense numpy sieve.

The generator consumes primes strictly in order of the "next prime after p"
relation, and every step needs ``ln p``; the sieve therefore stores the
primes densely together with their precomputed natural logarithms.  The
sieve limit is a configuration value (default 5*10**7); running past it is
reported as an error rather than silently rebuilding, so runs stay
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotFoundError, SieveExhaustedError

DEFAULT_SIEVE_LIMIT = 50_000_000


@dataclass(frozen=True)
class PrimeSieve:
    """All primes up to ``limit`` (inclusive), ascending, with logarithms.

    ``primes[0] == 2`` and every prime ``<= limit`` is present; ``logs`` is
    elementwise ``ln(primes)``.  Instances are immutable and safe to share.
    """

    limit: int
    primes: np.ndarray
    logs: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)


def build_sieve(limit: int) -> PrimeSieve:
    """Sieve of Eratosthenes over ``[2, limit]``.

    Raises
    ------
    DomainError
        If ``limit < 2``.
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"sieve limit must be >= 2, got {limit}")
    composite = np.zeros(limit + 1, dtype=bool)
    composite[:2] = True
    for p in range(2, int(limit**0.5) + 1):
        if not composite[p]:
            composite[p * p :: p] = True
    primes = np.flatnonzero(~composite).astype(np.int64)
    logs = np.log(primes.astype(np.float64))
    return PrimeSieve(limit=limit, primes=primes, logs=logs)


def next_prime(sieve: PrimeSieve, p: int) -> int:
    """Smallest prime strictly greater than ``p``.

    Raises
    ------
    SieveExhaustedError
        If the successor would exceed ``sieve.limit``.
    """
    if p < 0:
        raise DomainError(f"next_prime requires p >= 0, got {p}")
    pos = int(np.searchsorted(sieve.primes, p, side="right"))
    if pos >= len(sieve.primes):
        raise SieveExhaustedError(
            f"no prime > {p} within sieve limit {sieve.limit}"
        )
    return int(sieve.primes[pos])


def next_prime_index(sieve: PrimeSieve, p: int) -> int:
    """0-based position in ``sieve.primes`` of the smallest prime > ``p``."""
    if p < 0:
        raise DomainError(f"next_prime_index requires p >= 0, got {p}")
    pos = int(np.searchsorted(sieve.primes, p, side="right"))
    if pos >= len(sieve.primes):
        raise SieveExhaustedError(
            f"no prime > {p} within sieve limit {sieve.limit}"
        )
    return pos


def prime_index(sieve: PrimeSieve, p: int) -> int:
    """1-based index of the prime ``p``: the number of primes ``<= p``.

    Raises
    ------
    NotFoundError
        If ``p`` is not a prime in the sieve.
    """
    pos = int(np.searchsorted(sieve.primes, p, side="left"))
    if pos >= len(sieve.primes) or int(sieve.primes[pos]) != p:
        raise NotFoundError(f"{p} is not a prime within sieve limit {sieve.limit}")
    return pos + 1
