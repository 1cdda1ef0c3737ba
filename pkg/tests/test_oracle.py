"""Brute-force reference implementations: exact divisor sums, the two
record-setting number lists, the partial prime-reciprocal residual, and
the bracketing-maximum audit."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from cabundant import oracle
from cabundant.errors import DomainError, TableLimitError

import reference_values as ref


# --------------------------------------------------------------------------
# exact divisor-sum table
# --------------------------------------------------------------------------


def test_sigma_table_small_values(sigma_table):
    known = {1: 1, 2: 3, 6: 12, 12: 28, 28: 56, 5040: 19344, 360: 1170}
    for n, s in known.items():
        assert int(sigma_table.sigma[n]) == s


def test_sigma_table_validation():
    with pytest.raises(DomainError):
        oracle.build_sigma_table(0)
    with pytest.raises(TableLimitError):
        oracle.build_sigma_table(oracle.ORACLE_LIMIT + 1)


def test_sigma_spotcheck_against_sympy(sigma_table):
    rng = np.random.default_rng(17)
    for n in rng.integers(1, sigma_table.limit + 1, size=30):
        assert int(sigma_table.sigma[n]) == int(sympy.divisor_sigma(int(n)))


@settings(deadline=None, max_examples=50)
@given(
    st.integers(min_value=2, max_value=900),
    st.integers(min_value=2, max_value=900),
)
def test_sigma_multiplicative_on_coprime_pairs(a, b):
    if math.gcd(a, b) != 1:
        return
    table = _small_table()
    assert int(table.sigma[a * b]) == int(table.sigma[a]) * int(table.sigma[b])


_CACHED_SMALL = None


def _small_table():
    global _CACHED_SMALL
    if _CACHED_SMALL is None:
        _CACHED_SMALL = oracle.build_sigma_table(810_000)
    return _CACHED_SMALL


def test_ratio_exact(sigma_table):
    assert sigma_table.ratio(12) == Fraction(7, 3)
    assert sigma_table.ratio(5040) == Fraction(403, 105)
    assert sigma_table.ratio_float(5040) == pytest.approx(
        3.838095238095238, rel=1e-15
    )
    with pytest.raises(DomainError):
        sigma_table.ratio(0)
    with pytest.raises(DomainError):
        sigma_table.ratio(sigma_table.limit + 1)


# --------------------------------------------------------------------------
# record-setting lists
# --------------------------------------------------------------------------


def test_superior_prefix(sa_list):
    assert sa_list[: len(ref.SA_PREFIX_100)] == ref.SA_PREFIX_100
    assert sa_list[0] == 1


def test_superior_ratios_are_records(sa_list, sigma_table):
    ratios = [sigma_table.ratio(n) for n in sa_list[:40]]
    assert all(a <= b for a, b in zip(ratios, ratios[1:]))


def test_selected_list_matches_reference(ca_entries):
    assert [e.n for e in ca_entries] == ref.FIRST_VALUES[
        : len(ca_entries)
    ], "selected list diverges from the independent reference"


def test_selected_is_subset_of_superior(ca_entries, sa_list):
    sa = set(sa_list)
    assert all(e.n in sa for e in ca_entries)


def test_witnesses_select_their_terms(ca_entries, sigma_table):
    """Each witness exponent must make its term the argmax of
    sigma(n)/n * n^{-eps} over the whole table."""
    for e in ca_entries:
        assert e.witness > 0.0
    # spot-check the witness of 5040 against the adjacent growth exponents
    by_n = {e.n: e for e in ca_entries}
    lo = math.log1p(1 / 11) / math.log(11)  # exponent of the step to 55440
    hi = math.log1p(1 / 30) / math.log(2)  # exponent of the step to 5040
    w = by_n[5040].witness
    assert lo < w < hi


def test_selected_needs_room(sigma_table):
    tiny = oracle.build_sigma_table(10)
    entries = oracle.brute_force_ca(tiny)
    assert [e.n for e in entries] == [2, 6]


# --------------------------------------------------------------------------
# prime-reciprocal residual
# --------------------------------------------------------------------------


def test_mertens_residual_at_2(sieve):
    assert oracle.mertens_residual(sieve, 2) == pytest.approx(
        ref.MERTENS_AT_2, rel=1e-14
    )


def test_mertens_residual_converges(sieve):
    r4 = oracle.mertens_residual(sieve, 10**4)
    r6 = oracle.mertens_residual(sieve, 10**6)
    assert abs(r6 - ref.MERTENS_B1) < abs(r4 - ref.MERTENS_B1)
    assert abs(r6 - ref.MERTENS_B1) < 0.01


def test_mertens_residual_validation(sieve):
    with pytest.raises(DomainError):
        oracle.mertens_residual(sieve, 1)
    with pytest.raises(DomainError):
        oracle.mertens_residual(sieve, sieve.limit + 1)


# --------------------------------------------------------------------------
# bracketing-maximum audit
# --------------------------------------------------------------------------


def test_maximality_clean_over_reference_range(sigma_table, ca_entries):
    rep = oracle.maximality_report(
        sigma_table, ca_entries, lo=6, hi=1_000_000
    )
    assert rep.violations == ()
    assert rep.checked >= 1_000_000 - 5
    assert [n for n, _ in rep.small_values] == [3, 4, 5]
    for n, x in rep.small_values:
        expect = sigma_table.ratio_float(n) / math.log(math.log(n))
        assert x == pytest.approx(expect, rel=1e-12)


def test_maximality_detects_planted_violation(sigma_table, ca_entries):
    doctored = sigma_table.sigma.copy()
    n_bad = 1000
    doctored[n_bad] = int(4.0 * n_bad * math.log(math.log(n_bad)))
    bad_table = oracle.SigmaTable(limit=sigma_table.limit, sigma=doctored)
    rep = oracle.maximality_report(bad_table, ca_entries, lo=6, hi=10_000)
    assert n_bad in rep.violations


def test_maximality_validation(sigma_table, ca_entries):
    with pytest.raises(DomainError):
        oracle.maximality_report(sigma_table, ca_entries[:1])
    with pytest.raises(DomainError):
        oracle.maximality_report(sigma_table, ca_entries, lo=2)
    with pytest.raises(DomainError):
        oracle.maximality_report(
            sigma_table, ca_entries, hi=sigma_table.limit + 1
        )
