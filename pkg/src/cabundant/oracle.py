"""Independent brute-force ground truth on small integers.

Everything here recomputes from first principles — a divisor-accumulation
sigma sieve, exact integer cross-multiplication for superior-abundance,
and convex-hull geometry in ``(ln n, ln sigma(n)/n)`` for the
colossally-abundant selection — sharing no arithmetic with the engine, so
agreement between the two is meaningful evidence.

Scope caveat (by design): the defining quantifier for the colossal
property runs over *all* integers ``k``, but the oracle can only inspect
``k <= limit``.  At the limits used by the test suite (1e2, 1e4, 1e6) the
bounded and unbounded selections coincide; in general the bounded scan can
keep a final entry that a larger table would reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, TableLimitError, VerificationError
from .primes import PrimeSieve

#: Hard memory bound for the sigma table.
ORACLE_LIMIT = 10**7


@dataclass(frozen=True)
class SigmaTable:
    """Exact divisor sums ``sigma(n)`` for ``1 <= n <= limit`` (index 0
    unused)."""

    limit: int
    sigma: np.ndarray

    def ratio(self, n: int) -> Fraction:
        """``sigma(n)/n`` as an exact fraction."""
        if not (1 <= n <= self.limit):
            raise DomainError(f"n = {n} outside table range 1..{self.limit}")
        return Fraction(int(self.sigma[n]), n)

    def ratio_float(self, n: int) -> float:
        if not (1 <= n <= self.limit):
            raise DomainError(f"n = {n} outside table range 1..{self.limit}")
        return int(self.sigma[n]) / n


def build_sigma_table(limit: int) -> SigmaTable:
    """Divisor-accumulation sieve: add every ``d`` to all of its
    multiples.  Exact in int64 (sigma(n) < 4n ln ln n + ... stays far
    below 2^63 for n <= 1e7)."""
    if limit < 1:
        raise DomainError(f"table limit must be >= 1, got {limit}")
    if limit > ORACLE_LIMIT:
        raise TableLimitError(
            f"table limit {limit} exceeds the supported bound {ORACLE_LIMIT}"
        )
    sigma = np.arange(limit + 1, dtype=np.int64)  # divisor n itself
    sigma[0] = 0
    for d in range(1, limit // 2 + 1):
        sigma[2 * d :: d] += d
    return SigmaTable(limit=limit, sigma=sigma)


def brute_force_sa(table: SigmaTable) -> list[int]:
    """Ascending list of superior numbers: ``sigma(n)/n >= sigma(k)/k``
    for every ``k < n`` (so 1 is included vacuously).

    A float running-maximum prefilter narrows the candidates; every
    candidate is then confirmed with exact integer cross-multiplication.
    """
    sigma = table.sigma
    n = np.arange(1, table.limit + 1, dtype=np.float64)
    ratio = sigma[1:].astype(np.float64) / n
    envelope = np.maximum.accumulate(ratio)
    candidates = np.nonzero(ratio >= envelope * (1.0 - 1e-12))[0] + 1
    out: list[int] = []
    best_num, best_den = 0, 1
    for nn in candidates:
        nn = int(nn)
        s = int(sigma[nn])
        if s * best_den >= best_num * nn:
            out.append(nn)
        if s * best_den > best_num * nn:
            best_num, best_den = s, nn
    return out


@dataclass(frozen=True)
class CaEntry:
    """A colossally-selected number together with a witness exponent:
    ``sigma(n)/n * n^(-witness)`` is maximal over the whole table."""

    n: int
    witness: float


def brute_force_ca(table: SigmaTable) -> list[CaEntry]:
    """Bounded colossal selection: ``n`` is kept iff some ``eps > 0``
    makes ``sigma(n)/n * n^(-eps)`` maximal over all ``k <= limit``.

    Geometry: ``n`` maximizes the functional for slope ``eps`` exactly
    when the point ``(ln n, ln(sigma(n)/n))`` supports the upper convex
    hull of the point cloud with slope ``eps``; only superior numbers can
    lie on that hull, so the hull is built over the (short) superior list
    and each vertex's witness is the midpoint of its supporting-slope
    interval.  Every kept entry is re-verified by a full-table argmax at
    its witness.  The trivial point ``n = 1`` (which supports only slopes
    above the first edge) is excluded by convention.
    """
    superior = brute_force_sa(table)
    xs = [math.log(n) for n in superior]
    ys = [
        math.log(int(table.sigma[n])) - math.log(n) for n in superior
    ]
    hull: list[int] = []  # positions into `superior`
    for i in range(len(superior)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (
                ys[a] - ys[o]
            ) * (xs[i] - xs[o])
            if cross >= -1e-15:  # `a` at or below chord o->i: drop it
                hull.pop()
            else:
                break
        hull.append(i)
    vertices = [superior[i] for i in hull]
    slopes = []
    for left, right in zip(hull, hull[1:]):
        slope = (ys[right] - ys[left]) / (xs[right] - xs[left])
        slopes.append(slope)
    for a, b in zip(slopes, slopes[1:]):
        if not (a > b > 0.0):
            raise VerificationError(
                f"hull slopes not strictly decreasing positive: {a} -> {b}"
            )

    # Full-table score columns for the soundness recheck.
    k = np.arange(1, table.limit + 1, dtype=np.float64)
    ln_k = np.log(k).astype(np.longdouble)
    ln_ratio = (
        np.log(table.sigma[1:].astype(np.float64)) - np.log(k)
    ).astype(np.longdouble)

    entries: list[CaEntry] = []
    for j, n in enumerate(vertices):
        if n == 1:
            continue
        hi = slopes[j - 1]
        lo = slopes[j] if j < len(slopes) else 0.0
        witness = 0.5 * (hi + lo)
        scores = ln_ratio - np.longdouble(witness) * ln_k
        best = int(np.argmax(scores)) + 1
        if best != n:
            raise VerificationError(
                f"witness {witness} for {n} is not maximal: argmax = {best}"
            )
        top2 = np.partition(scores, len(scores) - 2)[-2:]
        if float(top2[1] - top2[0]) < 1e-12:
            raise VerificationError(
                f"ambiguous maximum at witness {witness} (n = {n})"
            )
        entries.append(CaEntry(n=n, witness=float(witness)))
    return entries


def mertens_residual(sieve: PrimeSieve, n: int) -> float:
    """Partial prime-reciprocal sum minus its asymptotic main term:
    ``sum_{p <= n} 1/p - ln ln n`` (converges to the Mertens constant)."""
    if n < 2:
        raise DomainError(f"mertens_residual requires n >= 2, got {n}")
    if n > sieve.limit:
        raise DomainError(
            f"n = {n} beyond sieve limit {sieve.limit}"
        )
    pos = int(np.searchsorted(sieve.primes, n, side="right"))
    partial = float(np.sum(1.0 / sieve.primes[:pos].astype(np.float64)))
    return partial - math.log(math.log(n))


@dataclass(frozen=True)
class MaximalityReport:
    """Result of the exhaustive envelope check: on ``[lo, hi]`` every
    ``X(n) = (sigma(n)/n)/ln ln n`` is bounded by the larger of the two
    values at the bracketing selected numbers.  Integers in ``[3, lo)``
    have no valid left bracket (``X`` is undefined at 2) and are reported
    separately with their ``X`` values rather than asserted."""

    lo: int
    hi: int
    checked: int
    violations: tuple[int, ...]
    small_values: tuple[tuple[int, float], ...]


def maximality_report(
    table: SigmaTable,
    entries: Sequence[CaEntry],
    lo: int = 6,
    hi: Optional[int] = None,
    slack: float = 1e-12,
) -> MaximalityReport:
    """Exhaustively verify the bracketing-maximum property of ``X`` over
    ``[lo, hi]`` using the oracle's own selected list.

    ``slack`` is the absolute tolerance added to each bracket bound before
    comparing; it absorbs float64 rounding in the ratio computation.
    """
    ca_ns = [e.n for e in entries]
    if len(ca_ns) < 2:
        raise DomainError("need at least two selected numbers to bracket")
    if hi is None:
        hi = min(ca_ns[-1], table.limit)
    if hi > table.limit or hi > ca_ns[-1]:
        raise DomainError(
            f"hi = {hi} beyond bracket coverage "
            f"(table {table.limit}, last selected {ca_ns[-1]})"
        )
    if lo < 3 or lo > hi:
        raise DomainError(f"need 3 <= lo <= hi, got lo={lo}, hi={hi}")
    n_arr = np.arange(3, hi + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        x = (
            table.sigma[3 : hi + 1].astype(np.float64)
            / n_arr
            / np.log(np.log(n_arr))
        )

    def x_at(n: int) -> float:
        # Bracket endpoints may lie beyond ``hi`` (the enclosing selected
        # number), so compute from the table rather than the sliced array.
        return float(table.sigma[n]) / n / math.log(math.log(n))

    violations: list[int] = []
    checked = 0
    for a, b in zip(ca_ns, ca_ns[1:]):
        if b < lo or a > hi:
            continue
        seg_lo = max(a, lo)
        seg_hi = min(b, hi)
        if seg_lo > seg_hi:
            continue
        bound = max(x_at(a) if a >= 3 else -math.inf, x_at(b)) + slack
        seg = x[seg_lo - 3 : seg_hi - 2]
        checked += seg_hi - seg_lo + 1
        bad = np.nonzero(seg > bound)[0]
        violations.extend(int(i) + seg_lo for i in bad)
    small = tuple((n, x_at(n)) for n in range(3, lo))
    return MaximalityReport(
        lo=lo,
        hi=hi,
        checked=checked,
        violations=tuple(sorted(set(violations))),
        small_values=small,
    )
