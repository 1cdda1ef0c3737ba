"""Factored representations of superior-highly-composite-style integers.

A *top-down form* is a trigger list ``(alpha_1, ..., alpha_m)`` where each
``alpha_v`` is either 0 or a prime: the represented integer is

    n = prod_p p^{v_p(n)},   v_p(n) = max({v : p <= alpha_bar_v} | {0}),

with ``alpha_bar_v`` the first nonzero entry at position >= v (zeros stand
for "same as the next nonzero trigger below").  Equivalently, the primes
with exponent exactly ``v`` are those in the band
``(alpha_bar_{v+1}, alpha_bar_v]``.  Exponents are nonincreasing in p, so
``alpha_1`` is the largest prime factor and ``m`` is the 2-adic valuation.

A *bottom-up form* lists, per valuation slot, the prime whose exponent may
next be raised to that valuation without breaking the nonincreasing-exponent
shape: entry ``i`` (0-based) is the smallest prime with exponent exactly
``i`` (a fresh prime for ``i = 0``), or 0 when no prime has that exponent.
The last entry is always 2.

All statistics are computed in log domain; materialization to an actual
integer is opt-in and bounded, because interesting terms quickly exceed any
usable integer size (the largest term handled here has ln n around 1.9e6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MaterializationBoundError
from .primes import PrimeSieve, next_prime

DEFAULT_MATERIALIZE_BOUND = 10**9

LN10 = math.log(10.0)


@dataclass(frozen=True)
class TopDownForm:
    """Validated trigger list; immutable."""

    alphas: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(x) for x in self.alphas)
        object.__setattr__(self, "alphas", a)
        if not a:
            raise DomainError("top-down form must be nonempty")
        if a[0] == 0 or a[-1] == 0:
            raise DomainError(
                f"leading and trailing triggers must be nonzero: {a}"
            )
        nonzero = [x for x in a if x != 0]
        if any(x < 2 for x in nonzero):
            raise DomainError(f"triggers must be primes >= 2: {a}")
        for earlier, later in zip(nonzero, nonzero[1:]):
            if earlier <= later:
                raise DomainError(
                    f"nonzero triggers must be strictly decreasing: {a}"
                )

    def __len__(self) -> int:
        return len(self.alphas)

    @property
    def v2(self) -> int:
        """2-adic valuation of the represented integer."""
        return len(self.alphas)

    @property
    def largest_prime(self) -> int:
        return self.alphas[0]

    def effective(self) -> tuple[int, ...]:
        """Triggers with zeros replaced by the next nonzero entry below
        (i.e. at a higher valuation index)."""
        out = list(self.alphas)
        carry = 0
        for i in range(len(out) - 1, -1, -1):
            if out[i] != 0:
                carry = out[i]
            else:
                out[i] = carry
        return tuple(out)

    def exponent_of(self, p: int) -> int:
        """Exponent of ``p`` in the represented integer:
        ``max({v : p <= alpha_bar_v} | {0})``."""
        eff = self.effective()
        for v in range(len(eff), 0, -1):
            if p <= eff[v - 1]:
                return v
        return 0

    def serialize(self) -> str:
        """Comma-separated trigger list, zeros written out individually."""
        return ",".join(str(x) for x in self.alphas)

    @classmethod
    def parse(cls, text: str) -> "TopDownForm":
        try:
            alphas = tuple(int(tok) for tok in text.strip().split(","))
        except ValueError as exc:
            raise DomainError(f"cannot parse top-down form {text!r}") from exc
        return cls(alphas)


@dataclass(frozen=True)
class BottomUpForm:
    """Candidate list aligned with valuation slots; entry ``i`` is the prime
    that may be raised to valuation ``i + 1``, or 0 when unavailable."""

    entries: tuple[int, ...]

    def __post_init__(self):
        e = tuple(int(x) for x in self.entries)
        object.__setattr__(self, "entries", e)
        if not e or e[-1] != 2:
            raise DomainError(f"bottom-up form must end in 2: {e}")
        nonzero = [x for x in e if x != 0]
        for earlier, later in zip(nonzero, nonzero[1:]):
            if earlier < later:
                raise DomainError(
                    f"nonzero bottom-up entries must be nonincreasing: {e}"
                )

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class LogStats:
    """Log-domain statistics of a factored integer.

    ``ln_sigma_minus1`` is the natural log of sigma(n)/n (the sum of
    divisors over n); ``ln_P1`` is the log of the largest prime factor;
    ``v2`` is the 2-adic valuation.
    """

    ln_n: float
    ln_ln_n: float
    lg_n: float
    lg_lg_n: float
    ln_sigma_minus1: float
    ln_P1: float
    v2: int

    @classmethod
    def from_core(cls, ln_n: float, ln_sigma_minus1: float, ln_P1: float, v2: int) -> "LogStats":
        return cls(
            ln_n=ln_n,
            ln_ln_n=math.log(ln_n),
            lg_n=ln_n / LN10,
            lg_lg_n=math.log10(ln_n / LN10),
            ln_sigma_minus1=ln_sigma_minus1,
            ln_P1=ln_P1,
            v2=v2,
        )


def top_down_to_bottom_up(t: TopDownForm, sieve: PrimeSieve) -> BottomUpForm:
    """Convert a trigger list into its candidate list.

    Slot 0 receives the next prime after the largest trigger (a fresh prime
    entering at exponent 1); slot ``v`` receives the smallest prime whose
    exponent is exactly ``v`` — ``next_prime(alpha_bar_{v+1})`` when the
    band ``(alpha_bar_{v+1}, alpha_bar_v]`` is nonempty, else 0 — with
    ``alpha_bar_{m+1} = 1`` so the final slot is always 2.
    """
    eff = t.effective()
    m = len(eff)
    out = [next_prime(sieve, eff[0])]
    for v in range(1, m + 1):
        below = eff[v] if v < m else 1
        here = eff[v - 1]
        if below < here:
            out.append(2 if below == 1 else next_prime(sieve, below))
        else:
            out.append(0)
    return BottomUpForm(tuple(out))


def materialize(t: TopDownForm, bound: int = DEFAULT_MATERIALIZE_BOUND) -> int:
    """Decode the form into an exact integer, provided it stays ``<= bound``.

    Raises
    ------
    MaterializationBoundError
        As soon as the partial product exceeds ``bound`` (callers fall back
        to log-domain statistics).
    """
    if bound < 2:
        raise DomainError(f"materialization bound must be >= 2, got {bound}")
    p1 = t.largest_prime
    # Any representable integer is at least the primorial of its largest
    # prime factor, which exceeds every practical bound long before the
    # trigger itself gets large; refuse early rather than sieving far.
    prime_cap = max(100, int(4 * math.log(bound)) + 2)
    if p1 > prime_cap:
        raise MaterializationBoundError(
            f"form with largest trigger {p1} exceeds bound {bound}"
        )
    sieve = build_small_sieve(p1)
    n = 1
    for p in sieve:
        v = t.exponent_of(p)
        for _ in range(v):
            n *= p
            if n > bound:
                raise MaterializationBoundError(
                    f"decoded value exceeds bound {bound}"
                )
    return n


def build_small_sieve(limit: int) -> list[int]:
    """Plain list of primes up to ``limit`` for local decoding work."""
    if limit < 2:
        return []
    composite = bytearray(limit + 1)
    out = []
    for p in range(2, limit + 1):
        if not composite[p]:
            out.append(p)
            for q in range(p * p, limit + 1, p):
                composite[q] = 1
    return out


def sigma_prime_power(p: int, v: int) -> int:
    """Exact sum of divisors of ``p**v`` (``1 + p + ... + p**v``)."""
    return (p ** (v + 1) - 1) // (p - 1)


def log_stats(t: TopDownForm, sieve: PrimeSieve) -> LogStats:
    """Full log-domain statistics of the represented integer.

    ``ln n = sum_p v_p ln p`` and ``ln sigma(n)/n = sum_p ln sigma_{-1}(p^{v_p})``
    are accumulated per valuation band: the (large) exponent-1 band is
    vectorized with pairwise numpy sums, higher bands use exact integer
    divisor sums per prime.
    """
    eff = t.effective()
    m = len(eff)
    if eff[0] > sieve.limit:
        raise DomainError(
            f"trigger {eff[0]} outside sieve limit {sieve.limit}"
        )
    primes = sieve.primes
    logs = sieve.logs
    ln_n = 0.0
    ln_sig = 0.0
    for v in range(1, m + 1):
        lo = eff[v] if v < m else 1
        hi = eff[v - 1]
        if hi <= lo:
            continue
        a = int(np.searchsorted(primes, lo, side="right"))
        b = int(np.searchsorted(primes, hi, side="right"))
        if b <= a:
            continue
        if v == 1:
            ln_n += float(np.sum(logs[a:b]))
            ln_sig += float(np.sum(np.log1p(1.0 / primes[a:b])))
        else:
            for j in range(a, b):
                p = int(primes[j])
                lp = float(logs[j])
                ln_n += v * lp
                ln_sig += math.log(sigma_prime_power(p, v)) - v * lp
    p1_pos = int(np.searchsorted(primes, t.largest_prime, side="left"))
    ln_p1 = float(logs[p1_pos])
    return LogStats.from_core(ln_n, ln_sig, ln_p1, t.v2)
