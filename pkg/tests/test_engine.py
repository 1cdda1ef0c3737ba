"""Generator state machine: prefix, stepping, tie handling, checkpoints,
recorders, and the bottom-up/top-down consistency invariant."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cabundant as cb
from cabundant import engine, factored
from cabundant.errors import (
    CheckpointParseError,
    CheckpointVersionError,
    DomainError,
    FourExponentialsWitness,
    SieveExhaustedError,
    VerificationError,
)

import reference_values as ref


# --------------------------------------------------------------------------
# growth exponent
# --------------------------------------------------------------------------


def test_ca_parameter_known_values():
    assert engine.ca_parameter(2, 4) == pytest.approx(ref.EPS_2_4, rel=1e-15)
    assert engine.ca_parameter(2, 1) == pytest.approx(
        math.log(1.5) / math.log(2), rel=1e-15
    )
    assert engine.ca_parameter(3, 2) == pytest.approx(
        math.log(13 / 12) / math.log(3), rel=1e-14
    )
    # v = 0 variant: ln(1 + 1/x)/ln x
    assert engine.ca_parameter(5, 0) == pytest.approx(
        math.log(1.2) / math.log(5), rel=1e-15
    )


def test_ca_parameter_domain():
    with pytest.raises(DomainError):
        engine.ca_parameter(1, 1)
    with pytest.raises(DomainError):
        engine.ca_parameter(2, -1)


@settings(deadline=None, max_examples=80)
@given(
    st.integers(min_value=2, max_value=10_000),
    st.integers(min_value=0, max_value=12),
)
def test_ca_parameter_matches_extended_precision(x, v):
    assert engine.ca_parameter(x, v) == pytest.approx(
        float(engine.ca_parameter_mp(x, v)), rel=5e-15
    )


def test_ca_parameter_decreasing_in_v_and_x():
    for x in (2, 3, 5, 101):
        vals = [engine.ca_parameter(x, v) for v in range(1, 8)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    vals = [engine.ca_parameter(x, 1) for x in (2, 3, 5, 7, 11, 13)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------------------
# prefix and seed
# --------------------------------------------------------------------------


def test_prefix_records(sieve):
    recs = engine.prefix_records(sieve)
    assert [(r.index, r.q, r.v) for r in recs] == ref.FIRST_STEPS[:4]
    assert [factored.materialize(r.form) for r in recs] == ref.FIRST_VALUES[:4]
    assert [r.g_num for r in recs] == [3, 4, 7, 6]
    assert [r.g_den for r in recs] == [2, 3, 6, 5]


def test_seed_state_candidates(sieve):
    state = engine.seed_state(sieve)
    assert state.counter == 4
    assert tuple(state.triggers) == (5, 2)
    assert state.candidate_values(sieve) == (7, 3, 2)
    assert state.epsilons == [
        engine.ca_parameter(7, 1),
        engine.ca_parameter(3, 2),
        engine.ca_parameter(2, 3),
    ]


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------


def test_first_steps_and_values(recorder):
    got = [
        (i, int(recorder.q[i]), int(recorder.v[i]))
        for i in range(1, len(ref.FIRST_STEPS) + 1)
    ]
    assert got == ref.FIRST_STEPS
    values = [
        factored.materialize(recorder.forms[i], bound=10**11)
        for i in range(1, len(ref.FIRST_VALUES) + 1)
    ]
    assert values == ref.FIRST_VALUES


def test_landmark_forms(recorder):
    assert recorder.forms[508].serialize() == ref.FORM_508
    assert recorder.forms[143215].serialize() == ref.FORM_143215


def test_epsilons_strictly_decreasing(recorder):
    eps = recorder.eps[1 : recorder.max_index + 1]
    assert np.all(np.diff(eps) < 0)


def test_candidates_match_rederived_bottom_up(sieve):
    """After every one of the first 2000 steps, the incrementally maintained
    candidate slots equal a from-scratch conversion of the trigger list."""
    state = engine.seed_state(sieve)
    for _ in range(2000):
        engine.step(state, sieve)
        rebuilt = factored.top_down_to_bottom_up(state.form, sieve)
        assert state.candidate_values(sieve) == rebuilt.entries
        for j, p in enumerate(rebuilt.entries):
            if p == 0:
                assert state.epsilons[j] == 0.0
            else:
                assert state.epsilons[j] == engine.ca_parameter(p, j + 1)


def test_incremental_logs_track_exact_stats(sieve):
    state = engine.seed_state(sieve)
    for _ in range(3000):
        engine.step(state, sieve)
    fresh = factored.log_stats(state.form, sieve)
    assert state.ln_n == pytest.approx(fresh.ln_n, abs=1e-8)
    assert state.ln_sigma_minus1 == pytest.approx(
        fresh.ln_sigma_minus1, abs=1e-10
    )


def test_refresh_interval_does_not_change_results(sieve, monkeypatch):
    monkeypatch.setattr(engine, "REFRESH_INTERVAL", 17)
    state = engine.seed_state(sieve)
    records = []
    engine.generate(state, sieve, 1996, records.append)
    assert records[-1].index == 2000
    baseline_state = None
    monkeypatch.setattr(engine, "REFRESH_INTERVAL", 4096)
    baseline_state = engine.seed_state(sieve)
    baseline = []
    engine.generate(baseline_state, sieve, 1996, baseline.append)
    assert [(r.index, r.q, r.v) for r in records] == [
        (r.index, r.q, r.v) for r in baseline
    ]
    assert records[-1].stats.ln_n == pytest.approx(
        baseline[-1].stats.ln_n, abs=1e-9
    )


def test_generate_count_validation(sieve):
    state = engine.seed_state(sieve)
    with pytest.raises(DomainError):
        engine.generate(state, sieve, 0)


def test_sieve_exhaustion_is_clean():
    tiny = cb.build_sieve(7)
    state = engine.seed_state(tiny)
    with pytest.raises(SieveExhaustedError):
        engine.generate(state, tiny, 50)
    # the failed step must not have mutated the state
    assert state.counter == 6
    assert state.form.serialize() == "5,3,2"


# --------------------------------------------------------------------------
# selection and tie handling
# --------------------------------------------------------------------------


def test_select_plain_argmax():
    assert engine.select_next_trigger([0.1, 0.3, 0.2]) == 1
    assert engine.select_next_trigger([0.4]) == 0
    assert engine.select_next_trigger([0.0, 0.2, 0.0]) == 1


def test_select_requires_positive_candidate():
    with pytest.raises(DomainError):
        engine.select_next_trigger([0.0, 0.0])


def test_select_exact_tie_without_pairs_is_a_witness():
    with pytest.raises(FourExponentialsWitness) as exc:
        engine.select_next_trigger([0.5, 0.5])
    assert exc.value.exit_code == 4


def test_select_near_tie_without_pairs_keeps_float_winner():
    a = 0.5
    b = a * (1 + 2e-10)  # inside the gate but not exactly equal
    assert engine.select_next_trigger([a, b]) == 1
    assert engine.select_next_trigger([b, a]) == 0


def test_select_near_tie_resolved_by_precise_recheck():
    """Floats that lie within the gate are re-decided by the 150-bit
    values of the actual (prime, valuation) pairs, not by the floats."""
    a = 0.5
    b = a * (1 + 2e-10)
    # true values: F(5,1) = 0.1133 > F(7,1) = 0.0686 — index 0 must win
    # even though the float argmax is index 1.
    pairs = [(5, 1), (7, 1)]
    assert engine.select_next_trigger([a, b], pairs) == 0
    assert engine.select_next_trigger([b, a], [(7, 1), (5, 1)]) == 1


def test_select_true_tie_with_pairs_is_a_witness():
    a = 0.5
    b = a * (1 + 2e-10)
    with pytest.raises(FourExponentialsWitness) as exc:
        engine.select_next_trigger([a, b], [(5, 1), (5, 1)])
    wit = exc.value
    assert wit.pairs == ((5, 1), (5, 1))


def test_step_contract_equal_epsilon_is_a_witness(sieve):
    state = engine.seed_state(sieve)
    state.last_epsilon = max(state.epsilons)
    with pytest.raises(FourExponentialsWitness):
        engine.step(state, sieve)


def test_step_contract_increasing_epsilon_is_an_error(sieve):
    state = engine.seed_state(sieve)
    state.last_epsilon = 1e-6
    with pytest.raises(VerificationError) as exc:
        engine.step(state, sieve)
    assert exc.value.exit_code == 3


def test_canonicalization_guard(sieve):
    """Promoting the lone exponent-1 prime out of its band would zero the
    leading trigger; the engine refuses instead of emitting a bad form."""
    form = factored.TopDownForm((3, 2))
    stats = factored.log_stats(form, sieve)
    state = engine.CaState(
        counter=2,
        triggers=[3, 2],
        cand_idx=[],
        epsilons=[],
        ln_n=stats.ln_n,
        ln_sigma_minus1=stats.ln_sigma_minus1,
        steps_since_refresh=0,
        sieve_limit=sieve.limit,
        p1_idx=1,
        last_epsilon=1.0,
        last_q=2,
        last_v=2,
    )
    engine._rebuild_candidates(state, sieve)
    assert state.candidate_values(sieve) == (5, 3, 2)
    state.epsilons[0] = 1e-9  # force slot 1 (promote 3 to valuation 2)
    state.epsilons[2] = 1e-9
    with pytest.raises(VerificationError):
        engine.step(state, sieve)


def test_appended_slot_guard(sieve):
    state = engine.seed_state(sieve)
    # corrupt the final slot to hold 3 instead of 2 and make it win
    state.cand_idx[2] = int(np.searchsorted(sieve.primes, 3))
    state.epsilons = [1e-9, 1e-9, 0.05]
    state.last_epsilon = 0.06
    with pytest.raises(VerificationError):
        engine.step(state, sieve)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def test_checkpoint_roundtrip_resumes_identically(sieve, tmp_path):
    path = str(tmp_path / "cp.json")
    cold: list = []
    engine.run_sequence(sieve, 600, cold.append)

    first: list = []
    state = engine.run_sequence(sieve, 300, first.append, checkpoint_path=path)
    resumed = engine.load_checkpoint(path, sieve)
    assert resumed.counter == 300
    assert resumed.triggers == state.triggers
    second: list = []
    engine.run_sequence(sieve, 600, second.append, state=resumed)

    combined = first + second
    assert len(combined) == len(cold) == 600
    for a, b in zip(combined, cold):
        assert (a.index, a.q, a.v) == (b.index, b.q, b.v)
        assert a.epsilon == b.epsilon
        assert a.stats.ln_n == b.stats.ln_n
        assert a.stats.ln_sigma_minus1 == b.stats.ln_sigma_minus1
        assert a.form == b.form


def test_checkpoint_payload_shape(sieve):
    state = engine.seed_state(sieve)
    payload = engine.save_checkpoint(state)
    assert payload["version"] == engine.CHECKPOINT_VERSION
    assert set(payload) == set(engine._CHECKPOINT_KEYS)
    rebuilt = engine.load_checkpoint(payload, sieve)
    assert rebuilt.triggers == state.triggers
    assert rebuilt.epsilons == state.epsilons


def test_checkpoint_periodic_writes(sieve, tmp_path):
    path = str(tmp_path / "cp.json")
    engine.run_sequence(
        sieve, 50, lambda r: None, checkpoint_path=path, checkpoint_every=10
    )
    final = json.loads(open(path).read())
    assert final["counter"] == 50


def test_checkpoint_version_rejected(sieve):
    state = engine.seed_state(sieve)
    payload = engine.save_checkpoint(state)
    payload["version"] = 99
    with pytest.raises(CheckpointVersionError):
        engine.load_checkpoint(payload, sieve)


def test_checkpoint_missing_and_malformed_fields(sieve):
    state = engine.seed_state(sieve)
    base = engine.save_checkpoint(state)
    for key in engine._CHECKPOINT_KEYS:
        if key == "version":
            continue
        payload = dict(base)
        del payload[key]
        with pytest.raises(CheckpointParseError):
            engine.load_checkpoint(payload, sieve)
    payload = dict(base)
    payload["triggers"] = "5,2"
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(payload, sieve)
    payload = dict(base)
    payload["counter"] = "four"
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(payload, sieve)


def test_checkpoint_garbage_file(sieve, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(str(path), sieve)
    path.write_text("[1, 2, 3]\n")
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(str(path), sieve)
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(str(tmp_path / "absent.json"), sieve)


def test_checkpoint_nonprime_trigger_rejected(sieve):
    state = engine.seed_state(sieve)
    payload = engine.save_checkpoint(state)
    payload["triggers"] = [9, 2]
    with pytest.raises(CheckpointParseError):
        engine.load_checkpoint(payload, sieve)


# --------------------------------------------------------------------------
# sinks
# --------------------------------------------------------------------------


def test_recorder_capacity_enforced(sieve):
    small = engine.ArrayRecorder(3)
    with pytest.raises(DomainError):
        engine.run_sequence(sieve, 5, small)


def test_recorder_keeps_selected_forms(sieve):
    rec = engine.ArrayRecorder(20, keep_forms={5, 9})
    engine.run_sequence(sieve, 20, rec)
    assert set(rec.forms) == {5, 9}
    rec_all = engine.ArrayRecorder(10, keep_forms=True)
    engine.run_sequence(sieve, 10, rec_all)
    assert set(rec_all.forms) == set(range(1, 11))


def test_recorder_cumulative_sums(recorder):
    i = 1234
    gap = float(recorder.cum_ln_g[i] - recorder.cum_ln_g[i - 1])
    assert gap == pytest.approx(
        math.log1p(1.0 / float(recorder.g_den[i])), rel=1e-15
    )
    gap_eq = float(recorder.cum_eps_ln_q[i] - recorder.cum_eps_ln_q[i - 1])
    assert gap_eq == pytest.approx(
        float(recorder.eps[i]) * math.log(float(recorder.q[i])), rel=1e-12
    )
    # cumulative log of sigma(n)/n reproduces the recorded column
    assert float(recorder.cum_ln_g[i]) == pytest.approx(
        float(recorder.ln_sigma[i]), abs=1e-8
    )


def test_csv_golden_line(sieve):
    records: list = []
    engine.run_sequence(sieve, 8, records.append)
    assert engine.record_to_csv(records[-1]) == ref.CSV_LINE_8
    assert engine.CSV_HEADER == (
        "index,q,v,eps,g_num,g_den,ln_n,ln_ln_n,ln_sigma,X,form"
    )


def test_jsonl_roundtrip(sieve):
    records: list = []
    engine.run_sequence(sieve, 8, records.append)
    doc = json.loads(engine.record_to_jsonl(records[-1]))
    assert doc["index"] == 8
    assert doc["q"] == 2
    assert doc["v"] == 4
    assert doc["g_num"] == 31
    assert doc["g_den"] == 30
    assert doc["form"] == "7,3,0,2"
    assert doc["X"] == pytest.approx(1.790973366534881, rel=1e-15)


def test_run_sequence_validation(sieve):
    with pytest.raises(DomainError):
        engine.run_sequence(sieve, 0, lambda r: None)
    out: list = []
    engine.run_sequence(sieve, 3, out.append)
    assert [r.index for r in out] == [1, 2, 3]
