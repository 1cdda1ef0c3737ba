"""Sequential generator of the colossally abundant (CA) sequence.

The state machine keeps the current term as a top-down trigger list plus an
aligned candidate list: slot ``j`` holds the unique prime that could be
raised to valuation ``j + 1`` next, together with the cached growth
exponent ``F(p, j+1)`` that such a raise would realize, where

    F(x, v) = ln(sigma(x^v) / (sigma(x^v) - 1)) / ln(x).

Each step promotes the candidate with the largest exponent, multiplying the
current term by that prime; the resulting multiplier sequence enumerates
every CA number in order.  The candidate exponents are assumed pairwise
distinct (a consequence of the conjectural linear independence of the
logarithms involved); the engine *detects* would-be ties with an
extended-precision recheck and raises :class:`FourExponentialsWitness`
rather than guessing.

The first four terms (2, 6, 12, 60) are emitted as a hardcoded prefix and
the state machine seeds at index 4 with triggers ``(5, 2)``: the update
rule's canonicalization step is only valid once the exponent-1 band holds
at least two primes, which fails below 60.

Log-domain accumulators (``ln n``, ``ln sigma(n)/n``) advance incrementally
and are recomputed exactly from the factored form every
``REFRESH_INTERVAL`` steps, keeping absolute error near 1e-11 over the full
143215-step reference run.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import mpmath
import numpy as np

from .errors import (
    CheckpointParseError,
    CheckpointVersionError,
    DomainError,
    FourExponentialsWitness,
    SieveExhaustedError,
    VerificationError,
)
from .factored import (
    BottomUpForm,
    LogStats,
    TopDownForm,
    log_stats,
    sigma_prime_power,
    top_down_to_bottom_up,
)
from .primes import PrimeSieve

REFRESH_INTERVAL = 4096
TIE_GATE = 1e-9  # float64 relative gap that triggers the precise recheck
TIE_TOLERANCE = 1e-18  # extended-precision relative gap treated as a tie
MP_PRECISION = 150  # significand bits for the precise recheck
CHECKPOINT_VERSION = 1

CSV_HEADER = "index,q,v,eps,g_num,g_den,ln_n,ln_ln_n,ln_sigma,X,form"


def ca_parameter(x: int, v: int) -> float:
    """Growth exponent ``F(x, v)`` gained by raising ``x`` from exponent
    ``v - 1`` to ``v`` (``v = 0`` gives the crude upper variant
    ``ln(1 + 1/x)/ln x``).

    Evaluated as ``log1p((x-1)/(x^{v+1}-x))/ln x``, which equals
    ``ln((x^{v+1}-1)/(x^{v+1}-x))/ln x`` exactly but stays accurate when
    the ratio is close to 1.
    """
    if x < 2:
        raise DomainError(f"ca_parameter requires x >= 2, got {x}")
    if v < 0:
        raise DomainError(f"ca_parameter requires v >= 0, got {v}")
    if v == 0:
        return math.log1p(1.0 / x) / math.log(x)
    power = x ** (v + 1)
    return math.log1p((x - 1) / (power - x)) / math.log(x)


def ca_parameter_mp(x: int, v: int) -> mpmath.mpf:
    """Extended-precision twin of :func:`ca_parameter` (tie rechecks)."""
    with mpmath.workprec(MP_PRECISION):
        if v == 0:
            ratio = mpmath.mpf(x + 1) / x
        else:
            power = x ** (v + 1)
            ratio = mpmath.mpf(power - 1) / (power - x)
        return mpmath.log(ratio) / mpmath.log(mpmath.mpf(x))


@dataclass(frozen=True, slots=True)
class CaRecord:
    """One generated term: its index, multiplier prime ``q``, the valuation
    ``v`` of ``q`` after the step, the realized exponent, the exact
    superparticular ratio ``g = g_num : g_den`` by which ``sigma(n)/n``
    grew, full log statistics, and the trigger-list form."""

    index: int
    q: int
    v: int
    epsilon: float
    g_num: int
    g_den: int
    stats: LogStats
    form: TopDownForm

    @property
    def x_ratio(self) -> float:
        """``sigma(n) / (n ln ln n)`` — negative for the first term, whose
        ``ln ln`` is negative."""
        return math.exp(self.stats.ln_sigma_minus1) / self.stats.ln_ln_n


@dataclass
class CaState:
    """Mutable engine state.

    ``cand_idx[j]`` stores the *sieve position* of the candidate prime for
    valuation ``j + 1`` (−1 when that slot is closed), so promoting a
    candidate to its successor prime is a constant-time index bump.
    ``epsilons[j]`` caches ``F(candidate, j+1)`` (0.0 for closed slots).
    """

    counter: int
    triggers: list[int]
    cand_idx: list[int]
    epsilons: list[float]
    ln_n: float
    ln_sigma_minus1: float
    steps_since_refresh: int
    sieve_limit: int
    p1_idx: int
    last_epsilon: float
    last_q: int
    last_v: int

    @property
    def form(self) -> TopDownForm:
        return TopDownForm(tuple(self.triggers))

    def candidate_values(self, sieve: PrimeSieve) -> tuple[int, ...]:
        return tuple(
            int(sieve.primes[ix]) if ix >= 0 else 0 for ix in self.cand_idx
        )

    def candidates_form(self, sieve: PrimeSieve) -> BottomUpForm:
        return BottomUpForm(self.candidate_values(sieve))


# Hardcoded prefix: (index, q, v, triggers) for the terms below the seed.
_PREFIX = (
    (1, 2, 1, (2,)),
    (2, 3, 1, (3,)),
    (3, 2, 2, (3, 2)),
    (4, 5, 1, (5, 2)),
)

SEED_COUNTER = 4
SEED_TRIGGERS = (5, 2)


def prefix_records(sieve: PrimeSieve) -> list[CaRecord]:
    """Records for indices 1..4 (terms 2, 6, 12, 60), computed from their
    trigger lists rather than generated."""
    out = []
    for index, q, v, trig in _PREFIX:
        form = TopDownForm(trig)
        g_num = sigma_prime_power(q, v)
        out.append(
            CaRecord(
                index=index,
                q=q,
                v=v,
                epsilon=ca_parameter(q, v),
                g_num=g_num,
                g_den=g_num - 1,
                stats=log_stats(form, sieve),
                form=form,
            )
        )
    return out


def seed_state(sieve: PrimeSieve) -> CaState:
    """Engine state positioned at index 4 (term 60, triggers ``(5, 2)``)."""
    form = TopDownForm(SEED_TRIGGERS)
    stats = log_stats(form, sieve)
    state = CaState(
        counter=SEED_COUNTER,
        triggers=list(SEED_TRIGGERS),
        cand_idx=[],
        epsilons=[],
        ln_n=stats.ln_n,
        ln_sigma_minus1=stats.ln_sigma_minus1,
        steps_since_refresh=0,
        sieve_limit=sieve.limit,
        p1_idx=int(np.searchsorted(sieve.primes, SEED_TRIGGERS[0])),
        last_epsilon=ca_parameter(5, 1),
        last_q=5,
        last_v=1,
    )
    _rebuild_candidates(state, sieve)
    return state


def _rebuild_candidates(state: CaState, sieve: PrimeSieve) -> None:
    """Derive the candidate slots and cached exponents from the triggers."""
    bu = top_down_to_bottom_up(state.form, sieve)
    cand_idx = []
    epsilons = []
    for j, p in enumerate(bu.entries):
        if p == 0:
            cand_idx.append(-1)
            epsilons.append(0.0)
        else:
            cand_idx.append(int(np.searchsorted(sieve.primes, p)))
            epsilons.append(ca_parameter(p, j + 1))
    state.cand_idx = cand_idx
    state.epsilons = epsilons


def select_next_trigger(
    epsilons: list[float],
    pairs: Optional[list] = None,
) -> int:
    """Index of the unique maximal positive candidate exponent.

    When the two best values agree within ``TIE_GATE`` relative, both are
    recomputed at ``MP_PRECISION`` bits (requires ``pairs``, the aligned
    ``(prime, valuation)`` list); a gap still within ``TIE_TOLERANCE``
    relative raises :class:`FourExponentialsWitness` carrying both
    candidates — the engine never silently picks one.
    """
    best = 0.0
    bi = -1
    second = 0.0
    si = -1
    for j, e in enumerate(epsilons):
        if e > best:
            second, si = best, bi
            best, bi = e, j
        elif e > second:
            second, si = e, j
    if bi < 0:
        raise DomainError("no positive candidate exponent available")
    if si >= 0 and second > 0.0 and (best - second) <= TIE_GATE * best:
        return _resolve_near_tie(bi, si, epsilons, pairs)
    return bi


def _resolve_near_tie(bi, si, epsilons, pairs) -> int:
    if pairs is None:
        if epsilons[bi] == epsilons[si]:
            raise FourExponentialsWitness(
                (epsilons[bi], epsilons[si]), (bi, si)
            )
        return bi
    p1, v1 = pairs[bi]
    p2, v2 = pairs[si]
    e1 = ca_parameter_mp(p1, v1)
    e2 = ca_parameter_mp(p2, v2)
    with mpmath.workprec(MP_PRECISION):
        hi = e1 if e1 >= e2 else e2
        if abs(e1 - e2) <= TIE_TOLERANCE * hi:
            raise FourExponentialsWitness(
                (float(e1), float(e2)),
                (bi, si),
                ((p1, v1), (p2, v2)),
            )
    return bi if e1 > e2 else si


def step(state: CaState, sieve: PrimeSieve) -> CaRecord:
    """Advance one index: promote the winning candidate, update the
    trigger/candidate lists, and emit the new term's record.

    The update after promoting prime ``P`` to valuation ``v = j + 1``:

    * ``triggers[j] = P`` (appended when ``j == len(triggers)``, growing
      the 2-adic valuation);
    * if the slot one valuation down held ``P`` too, that band is now
      empty: the lower trigger becomes a canonical 0 and slot ``j``
      closes; otherwise slot ``j`` advances to the next prime;
    * slot ``j + 1``, if closed, opens with ``P`` (which now sits at
      valuation ``v``, eligible for ``v + 1``).
    """
    primes = sieve.primes
    pairs = [
        (int(primes[ix]), j + 1) if ix >= 0 else None
        for j, ix in enumerate(state.cand_idx)
    ]
    j = select_next_trigger(state.epsilons, pairs)
    ix = state.cand_idx[j]
    P = int(primes[ix])
    v = j + 1
    eps_val = state.epsilons[j]

    # Strict-decrease contract against the previously emitted exponent.
    if eps_val == state.last_epsilon:
        raise FourExponentialsWitness(
            (state.last_epsilon, eps_val),
            (-1, j),
            ((state.last_q, state.last_v), (P, v)),
        )
    if eps_val > state.last_epsilon:
        raise VerificationError(
            f"candidate exponent increased: {eps_val!r} after "
            f"{state.last_epsilon!r} at index {state.counter + 1}"
        )

    n_triggers = len(state.triggers)
    clears_below = j > 0 and state.triggers[j - 1] == P
    if not clears_below:
        next_ix = ix + 1
        if next_ix >= len(primes):
            raise SieveExhaustedError(
                f"candidate successor of {P} exceeds sieve limit "
                f"{sieve.limit} at index {state.counter + 1}"
            )

    g_num = sigma_prime_power(P, v)
    g_den = g_num - 1
    ln_p = float(sieve.logs[ix])

    # --- mutate ---
    if j < n_triggers:
        state.triggers[j] = P
        if j == 0:
            state.p1_idx = ix
    elif j == n_triggers:
        if P != 2:
            raise VerificationError(
                f"appended valuation slot held {P}, expected 2"
            )
        state.triggers.append(P)
        state.cand_idx.append(-1)
        state.epsilons.append(0.0)
    else:
        raise VerificationError(
            f"candidate slot {j} beyond trigger length {n_triggers}"
        )

    if state.cand_idx[j + 1] < 0:
        state.cand_idx[j + 1] = ix
        state.epsilons[j + 1] = ca_parameter(P, v + 1)

    if clears_below:
        if j - 1 == 0:
            raise VerificationError(
                "canonicalization would zero the leading trigger; "
                "state outside the supported region"
            )
        state.triggers[j - 1] = 0
        state.cand_idx[j] = -1
        state.epsilons[j] = 0.0
    else:
        state.cand_idx[j] = next_ix
        state.epsilons[j] = ca_parameter(int(primes[next_ix]), v)

    state.counter += 1
    state.ln_n += ln_p
    state.ln_sigma_minus1 += math.log1p(1.0 / g_den)
    state.steps_since_refresh += 1
    if state.steps_since_refresh >= REFRESH_INTERVAL:
        fresh = log_stats(state.form, sieve)
        state.ln_n = fresh.ln_n
        state.ln_sigma_minus1 = fresh.ln_sigma_minus1
        state.steps_since_refresh = 0
    state.last_epsilon = eps_val
    state.last_q = P
    state.last_v = v

    stats = LogStats.from_core(
        state.ln_n,
        state.ln_sigma_minus1,
        float(sieve.logs[state.p1_idx]),
        len(state.triggers),
    )
    return CaRecord(
        index=state.counter,
        q=P,
        v=v,
        epsilon=eps_val,
        g_num=g_num,
        g_den=g_den,
        stats=stats,
        form=TopDownForm(tuple(state.triggers)),
    )


def generate(
    state: CaState,
    sieve: PrimeSieve,
    count: int,
    sink: Optional[Callable[[CaRecord], None]] = None,
) -> CaState:
    """Advance ``count`` steps, feeding each record to ``sink`` in index
    order.  Deterministic for a fixed seed and sieve."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    for _ in range(count):
        record = step(state, sieve)
        if sink is not None:
            sink(record)
    return state


# --------------------------------------------------------------------------
# Checkpointing
# --------------------------------------------------------------------------

def save_checkpoint(state: CaState, path: Optional[str] = None) -> dict:
    """Serialize the state to a single versioned JSON object.

    Only the triggers and scalar accumulators are stored; the candidate
    slots and cached exponents are rebuilt deterministically on load via
    the same code path a cold run uses, so resumed runs are
    record-for-record identical."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "counter": state.counter,
        "sieve_limit": state.sieve_limit,
        "triggers": list(state.triggers),
        "ln_n": state.ln_n,
        "ln_sigma_minus1": state.ln_sigma_minus1,
        "steps_since_refresh": state.steps_since_refresh,
        "last_epsilon": state.last_epsilon,
        "last_q": state.last_q,
        "last_v": state.last_v,
    }
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    return payload


_CHECKPOINT_KEYS = {
    "version": int,
    "counter": int,
    "sieve_limit": int,
    "triggers": list,
    "ln_n": float,
    "ln_sigma_minus1": float,
    "steps_since_refresh": int,
    "last_epsilon": float,
    "last_q": int,
    "last_v": int,
}


def load_checkpoint(
    source: Union[str, os.PathLike, dict], sieve: PrimeSieve
) -> CaState:
    """Rebuild a :class:`CaState` from a checkpoint payload or file path.

    Raises
    ------
    CheckpointVersionError
        If the payload's ``version`` differs from ``CHECKPOINT_VERSION``.
    CheckpointParseError
        If the payload is not valid JSON or misses required fields.
    """
    if isinstance(source, dict):
        payload = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointParseError(
                f"cannot read checkpoint {source!r}: {exc}"
            ) from exc
    if not isinstance(payload, dict):
        raise CheckpointParseError("checkpoint payload is not an object")
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {version!r} "
            f"(supported: {CHECKPOINT_VERSION})"
        )
    for key, kind in _CHECKPOINT_KEYS.items():
        if key not in payload:
            raise CheckpointParseError(f"checkpoint misses field {key!r}")
        if kind is float:
            if not isinstance(payload[key], (int, float)):
                raise CheckpointParseError(f"checkpoint field {key!r} malformed")
        elif not isinstance(payload[key], kind):
            raise CheckpointParseError(f"checkpoint field {key!r} malformed")
    triggers = [int(x) for x in payload["triggers"]]
    form = TopDownForm(tuple(triggers))  # validates shape
    state = CaState(
        counter=int(payload["counter"]),
        triggers=triggers,
        cand_idx=[],
        epsilons=[],
        ln_n=float(payload["ln_n"]),
        ln_sigma_minus1=float(payload["ln_sigma_minus1"]),
        steps_since_refresh=int(payload["steps_since_refresh"]),
        sieve_limit=int(payload["sieve_limit"]),
        p1_idx=int(np.searchsorted(sieve.primes, form.largest_prime)),
        last_epsilon=float(payload["last_epsilon"]),
        last_q=int(payload["last_q"]),
        last_v=int(payload["last_v"]),
    )
    if int(sieve.primes[state.p1_idx]) != form.largest_prime:
        raise CheckpointParseError(
            f"leading trigger {form.largest_prime} is not prime or exceeds "
            f"the sieve limit {sieve.limit}"
        )
    _rebuild_candidates(state, sieve)
    return state


# --------------------------------------------------------------------------
# Sinks
# --------------------------------------------------------------------------

class ArrayRecorder:
    """Columnar sink: preallocated numpy arrays addressed by record index
    (row 0 unused), plus optional retention of trigger-list forms.

    ``keep_forms`` may be ``True`` (keep all) or an iterable of indices.
    After the run, :meth:`finalize` builds extended-precision cumulative
    sums of ``ln g`` and of ``epsilon * ln q`` for window products.
    """

    def __init__(self, capacity: int, keep_forms: Union[bool, Iterable[int]] = False):
        n = capacity + 1
        self.capacity = capacity
        self.q = np.zeros(n, dtype=np.int64)
        self.v = np.zeros(n, dtype=np.int16)
        self.eps = np.zeros(n, dtype=np.float64)
        self.g_num = np.zeros(n, dtype=np.int64)
        self.g_den = np.zeros(n, dtype=np.int64)
        self.ln_n = np.zeros(n, dtype=np.float64)
        self.ln_ln_n = np.zeros(n, dtype=np.float64)
        self.ln_sigma = np.zeros(n, dtype=np.float64)
        self.ln_p1 = np.zeros(n, dtype=np.float64)
        self.p1 = np.zeros(n, dtype=np.int64)
        self.v2 = np.zeros(n, dtype=np.int16)
        self.max_index = 0
        if keep_forms is True:
            self._keep = None
        else:
            self._keep = frozenset(int(i) for i in keep_forms) if keep_forms else frozenset()
        self.forms: dict[int, TopDownForm] = {}
        self.cum_ln_g: Optional[np.ndarray] = None
        self.cum_eps_ln_q: Optional[np.ndarray] = None

    def __call__(self, record: CaRecord) -> None:
        i = record.index
        if i > self.capacity:
            raise DomainError(
                f"record index {i} exceeds recorder capacity {self.capacity}"
            )
        self.q[i] = record.q
        self.v[i] = record.v
        self.eps[i] = record.epsilon
        self.g_num[i] = record.g_num
        self.g_den[i] = record.g_den
        self.ln_n[i] = record.stats.ln_n
        self.ln_ln_n[i] = record.stats.ln_ln_n
        self.ln_sigma[i] = record.stats.ln_sigma_minus1
        self.ln_p1[i] = record.stats.ln_P1
        self.p1[i] = record.form.largest_prime
        self.v2[i] = record.stats.v2
        if self._keep is None or i in self._keep:
            self.forms[i] = record.form
        if i > self.max_index:
            self.max_index = i

    def finalize(self) -> None:
        """Build cumulative-sum columns (80-bit extended precision) so that
        window products over any ``[i, i+k]`` are O(1) differences."""
        n = self.max_index + 1
        terms_g = np.zeros(n, dtype=np.longdouble)
        den = self.g_den[1:n].astype(np.longdouble)
        terms_g[1:] = np.log1p(1.0 / den)
        self.cum_ln_g = np.cumsum(terms_g)
        terms_eq = np.zeros(n, dtype=np.longdouble)
        terms_eq[1:] = self.eps[1:n].astype(np.longdouble) * np.log(
            self.q[1:n].astype(np.longdouble)
        )
        self.cum_eps_ln_q = np.cumsum(terms_eq)


def record_to_csv(record: CaRecord) -> str:
    """CSV line with columns ``index,q,v,eps,g_num,g_den,ln_n,ln_ln_n,
    ln_sigma,X,form`` (floats as shortest round-trip representation; the
    trigger-list form is quoted since it contains commas)."""
    s = record.stats
    return (
        f"{record.index},{record.q},{record.v},{record.epsilon!r},"
        f"{record.g_num},{record.g_den},{s.ln_n!r},{s.ln_ln_n!r},"
        f"{s.ln_sigma_minus1!r},{record.x_ratio!r},"
        f'"{record.form.serialize()}"'
    )


def record_to_jsonl(record: CaRecord) -> str:
    """JSON Lines encoding with the same fields as the CSV stream."""
    s = record.stats
    return json.dumps(
        {
            "index": record.index,
            "q": record.q,
            "v": record.v,
            "eps": record.epsilon,
            "g_num": record.g_num,
            "g_den": record.g_den,
            "ln_n": s.ln_n,
            "ln_ln_n": s.ln_ln_n,
            "ln_sigma": s.ln_sigma_minus1,
            "X": record.x_ratio,
            "form": record.form.serialize(),
        },
        separators=(",", ":"),
    )


def run_sequence(
    sieve: PrimeSieve,
    final_index: int,
    sink: Callable[[CaRecord], None],
    state: Optional[CaState] = None,
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 0,
) -> CaState:
    """Emit records up to ``final_index``: the hardcoded prefix (on a cold
    start) followed by generated steps, with optional periodic
    checkpointing."""
    if final_index < 1:
        raise DomainError(f"final index must be >= 1, got {final_index}")
    if state is None:
        for record in prefix_records(sieve):
            if record.index > final_index:
                return seed_state(sieve)
            sink(record)
        state = seed_state(sieve)
    steps_done = 0
    while state.counter < final_index:
        record = step(state, sieve)
        sink(record)
        steps_done += 1
        if (
            checkpoint_path
            and checkpoint_every > 0
            and steps_done % checkpoint_every == 0
        ):
            save_checkpoint(state, checkpoint_path)
    if checkpoint_path:
        save_checkpoint(state, checkpoint_path)
    return state
