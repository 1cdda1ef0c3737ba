"""Shared session fixtures.

The expensive artifacts — the prime sieve, the full generator run, the
exact divisor-sum table, and the brute-force reference lists — are built
once per session and shared across test modules.
"""

from __future__ import annotations

import time

import pytest

import cabundant as cb
from cabundant import oracle

RUN_HORIZON = 143716  # a little past the last landmark index
KEPT_FORMS = frozenset(range(1, 21)) | {42, 507, 508, 2386, 143215, 143216}
SIGMA_LIMIT = 1_500_000  # the next selected number after 1e6 is 1441440
SEQUENCE_LIMIT = 1_000_000


@pytest.fixture(scope="session")
def sieve():
    return cb.build_sieve(2_000_000)


@pytest.fixture(scope="session")
def timed_run(sieve):
    """(recorder, wall_seconds) for the full run past the last landmark."""
    recorder = cb.ArrayRecorder(RUN_HORIZON, keep_forms=KEPT_FORMS)
    t0 = time.perf_counter()
    cb.run_sequence(sieve, RUN_HORIZON, recorder)
    elapsed = time.perf_counter() - t0
    recorder.finalize()
    return recorder, elapsed


@pytest.fixture(scope="session")
def recorder(timed_run):
    return timed_run[0]


@pytest.fixture(scope="session")
def timed_sigma_table():
    t0 = time.perf_counter()
    table = oracle.build_sigma_table(SIGMA_LIMIT)
    elapsed = time.perf_counter() - t0
    return table, elapsed


@pytest.fixture(scope="session")
def sigma_table(timed_sigma_table):
    return timed_sigma_table[0]


@pytest.fixture(scope="session")
def timed_ca_entries(sigma_table):
    t0 = time.perf_counter()
    entries = oracle.brute_force_ca(sigma_table)
    elapsed = time.perf_counter() - t0
    return entries, elapsed


@pytest.fixture(scope="session")
def ca_entries(timed_ca_entries):
    return timed_ca_entries[0]


@pytest.fixture(scope="session")
def sa_list(sigma_table):
    return oracle.brute_force_sa(sigma_table)
