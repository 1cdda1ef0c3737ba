"""Growth-rate verification along the generated sequence.

Central quantity: ``X(n) = (sigma(n)/n) / ln ln n``.  The classical
threshold is ``exp(gamma)`` (Euler–Mascheroni): for every ``n > 5040`` the
strict inequality ``X(n) < exp(gamma)`` is equivalent to the Riemann
hypothesis, and among large terms the generated sequence realizes the
maximal ``X`` values, so sweeping it is the strongest finite check
available.  The unconditional companion bound is

    X(n) <= exp(gamma) + BOUND_COEFF / (ln ln n)^2,

with the coefficient chosen to make equality hold at ``n = 12``.

Window geometry: for a window ``(i, i+k]`` define ``G`` as the product of
the multiplier ratios ``g_j`` over the window, ``L`` as the ratio
``ln ln n_{i+k} / ln ln n_i``, ``R = G / L``, and ``D = G - L``.
``X(n_{i+k}) >= X(n_i)`` exactly when ``G >= L``; ``k_i`` is the smallest
such window length.  ``R`` is recomputed along an independent floating
path (via the exponent split ``ln g_j = eps_j ln q_j``) so the identity
``R * L = G`` is a real cross-check, not a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import ArrayRecorder
from .errors import DomainError, InsufficientDataError
from .factored import sigma_prime_power

#: exp(Euler–Mascheroni gamma), the critical threshold for X.
EXP_EULER_GAMMA = 1.7810724179901979852

#: Coefficient of the (ln ln n)^-2 term of the unconditional bound;
#: equals (7/3 - exp(gamma) ln ln 12) * ln ln 12, which makes the bound
#: exact at n = 12.  See :func:`bound_coefficient_recomputed`.
BOUND_COEFF = 0.64821365

#: Mertens' constant (the limit of sum(1/p) - ln ln x).
MERTENS_B1 = 0.26149721284764278


def bound_coefficient_recomputed() -> float:
    """``BOUND_COEFF`` recomputed from its definition (agreement to 1e-7
    is asserted by the test suite)."""
    lnln12 = math.log(math.log(12.0))
    return (7.0 / 3.0 - EXP_EULER_GAMMA * lnln12) * lnln12


def x_value(ln_n: float, ln_sigma_minus1: float) -> float:
    """``X = (sigma(n)/n) / ln ln n`` from log-domain inputs.

    Requires ``ln n > 1`` (i.e. ``n >= 3``); below that ``ln ln n`` is
    zero or negative and the quotient is meaningless.
    """
    if ln_n <= 1.0:
        raise DomainError(
            f"x_value requires ln n > 1 (n >= 3), got ln n = {ln_n!r}"
        )
    return math.exp(ln_sigma_minus1) / math.log(ln_n)


def unconditional_bound(ln_ln_n: float) -> float:
    """Upper bound ``exp(gamma) + BOUND_COEFF / (ln ln n)^2``, valid for
    every integer ``n >= 13`` and exact at ``n = 12``."""
    if ln_ln_n <= 0.0:
        raise DomainError(
            f"unconditional_bound requires ln ln n > 0, got {ln_ln_n!r}"
        )
    return EXP_EULER_GAMMA + BOUND_COEFF / (ln_ln_n * ln_ln_n)


def rie_holds(ln_n: float, ln_sigma_minus1: float) -> bool:
    """Strict inequality ``X(n) < exp(gamma)``."""
    return x_value(ln_n, ln_sigma_minus1) < EXP_EULER_GAMMA


def ki_one_sufficient(q: int, v: int, ln_n: float, ln_ln_n: float) -> bool:
    """Sufficient condition for the next window of length 1 to already
    satisfy ``G >= L``: the multiplier ``(q, v)`` must obey

        (sigma(q^v) - 1) * ln q  <=  ln n * ln ln n

    evaluated at the *current* term ``n``.  (The left side is the exact
    denominator of the multiplier ratio times ``ln q``.)"""
    if ln_ln_n <= 0.0:
        raise DomainError(
            f"ki_one_sufficient requires ln ln n > 0, got {ln_ln_n!r}"
        )
    g_den = sigma_prime_power(q, v) - 1
    return g_den * math.log(q) <= ln_n * ln_ln_n


def artanh_criterion(ln_n: float, ln_ln_n: float, q: int, g_den: int) -> bool:
    """Exact test for ``D_{i,1} > 0`` (the next term raises ``X``):

        1/g_den  >  2 artanh( ln q / (2 ln n + ln q) ) / ln ln n

    where ``q`` and ``g_den`` describe the *next* multiplier and ``ln n``,
    ``ln ln n`` the current term.  Equivalent to ``g > L_{i,1}`` after
    writing the ``ln ln`` ratio as an artanh of a log quotient.
    """
    if ln_ln_n <= 0.0:
        raise DomainError(
            f"artanh_criterion requires ln ln n > 0, got {ln_ln_n!r}"
        )
    if q < 2 or g_den < 1:
        raise DomainError("artanh_criterion requires q >= 2 and g_den >= 1")
    ln_q = math.log(q)
    rhs = 2.0 * math.atanh(ln_q / (2.0 * ln_n + ln_q)) / ln_ln_n
    return 1.0 / g_den > rhs


def choie_large_prime(ln_p1: float, ln_ln_n: float) -> bool:
    """Whether the largest prime factor exceeds ``ln n`` (strictly), i.e.
    ``ln P1 > ln ln n``."""
    return ln_p1 > ln_ln_n


# --------------------------------------------------------------------------
# Window geometry over a recorded run
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GlWindow:
    """Products over the window ``(i, i+k]``: multiplier product ``G``,
    iterated-log ratio ``L``, their quotient ``R`` (computed on an
    independent floating path), and the gap ``D = G - L``."""

    i: int
    k: int
    g_value: float
    l_value: float
    r_value: float
    d_value: float

    @property
    def identity_gap(self) -> float:
        """``|R * L - G|`` — should vanish to ~1e-10 relative."""
        return abs(self.r_value * self.l_value - self.g_value)


def _ensure_finalized(recorder: ArrayRecorder) -> None:
    if (
        recorder.cum_ln_g is None
        or len(recorder.cum_ln_g) != recorder.max_index + 1
    ):
        recorder.finalize()


def gl_window(recorder: ArrayRecorder, i: int, k: int) -> GlWindow:
    """Evaluate the window ``(i, i+k]`` from a finalized recorder."""
    if i < 2:
        raise DomainError(
            f"window base must be >= 2 (ln ln must be positive), got {i}"
        )
    if k < 1:
        raise DomainError(f"window length must be >= 1, got {k}")
    if i + k > recorder.max_index:
        raise InsufficientDataError(
            f"window (i={i}, k={k}) needs record {i + k}, have "
            f"{recorder.max_index}"
        )
    _ensure_finalized(recorder)
    lam_i = np.longdouble(recorder.ln_ln_n[i])
    lam_k = np.longdouble(recorder.ln_ln_n[i + k])
    ln_l = np.log(lam_k) - np.log(lam_i)
    ln_g = recorder.cum_ln_g[i + k] - recorder.cum_ln_g[i]
    ln_r = (
        recorder.cum_eps_ln_q[i + k] - recorder.cum_eps_ln_q[i]
    ) - ln_l
    g = np.exp(ln_g)
    l = np.exp(ln_l)
    return GlWindow(
        i=i,
        k=k,
        g_value=float(g),
        l_value=float(l),
        r_value=float(np.exp(ln_r)),
        d_value=float(g - l),
    )


def find_ki(recorder: ArrayRecorder, i: int, k_max: int = 500) -> Optional[int]:
    """Smallest ``k in [1, k_max]`` with ``G_{i,k} >= L_{i,k}``, decided in
    the log domain (sign-exact with respect to ``D``).  Returns ``None``
    when no such ``k`` exists within ``k_max``; raises
    :class:`InsufficientDataError` if the recording ends before the scan
    could finish."""
    if i < 2:
        raise DomainError(
            f"window base must be >= 2 (ln ln must be positive), got {i}"
        )
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    limit = min(k_max, recorder.max_index - i)
    if limit < 1:
        raise InsufficientDataError(
            f"no records beyond index {i} (have {recorder.max_index})"
        )
    _ensure_finalized(recorder)
    lam = recorder.ln_ln_n[i : i + limit + 1].astype(np.longdouble)
    ln_l = np.log(lam[1:]) - np.log(lam[0])
    ln_g = recorder.cum_ln_g[i + 1 : i + limit + 1] - recorder.cum_ln_g[i]
    hits = np.nonzero(ln_g >= ln_l)[0]
    if hits.size:
        return int(hits[0]) + 1
    if limit < k_max:
        raise InsufficientDataError(
            f"no window hit for base {i} within the recorded horizon "
            f"{recorder.max_index}; scanned k <= {limit} of {k_max}"
        )
    return None


# --------------------------------------------------------------------------
# Sweep verification
# --------------------------------------------------------------------------

#: Index of the last term violating the strict threshold (term 5040).
LAST_VIOLATION_INDEX = 8

#: Indices excluded from the unconditional-bound check: index 1 (term 2,
#: where ln ln n < 0) and index 3 (term 12, where the bound holds with
#: equality by construction).
BOUND_EXCLUDED_INDICES = frozenset({1, 3})


@dataclass(frozen=True)
class VerifyReport:
    horizon: int
    checked: int
    expected_rie_violations: tuple[int, ...]
    k9: Optional[int]
    final_x: float
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_sweep(
    recorder: ArrayRecorder, horizon: Optional[int] = None
) -> VerifyReport:
    """Check every record up to ``horizon`` (default: all recorded):

    * realized exponents strictly decrease;
    * each multiplier ratio is superparticular with the exact numerator
      ``sigma(q^v)`` (recomputed from scratch);
    * the exponent split ``eps * ln q = ln g`` holds to 1e-9 relative;
    * the running ``ln(sigma(n)/n)`` matches the extended-precision
      cumulative sum of ``ln g`` to 1e-8;
    * ``X < exp(gamma)`` strictly for every index past
      ``LAST_VIOLATION_INDEX`` (earlier violations are collected as
      expected, not failures);
    * ``X < unconditional_bound`` for every index except the excluded
      degenerate pair.

    Returns a report; it never raises on a mathematical violation — the
    caller decides how to surface failures.
    """
    h = recorder.max_index if horizon is None else horizon
    if h < 1:
        raise DomainError(f"verification horizon must be >= 1, got {h}")
    if h > recorder.max_index:
        raise InsufficientDataError(
            f"horizon {h} beyond recorded index {recorder.max_index}"
        )
    failures: list[str] = []

    eps = recorder.eps[1 : h + 1]
    if h >= 2:
        bad = np.nonzero(np.diff(eps) >= 0)[0]
        for b in bad[:5]:
            failures.append(
                f"exponent not strictly decreasing at index {int(b) + 2}: "
                f"{eps[b + 1]!r} after {eps[b]!r}"
            )

    q = recorder.q[1 : h + 1]
    v = recorder.v[1 : h + 1]
    g_num = recorder.g_num[1 : h + 1]
    g_den = recorder.g_den[1 : h + 1]
    if not np.all(g_den == g_num - 1):
        bad = np.nonzero(g_den != g_num - 1)[0]
        for b in bad[:5]:
            failures.append(
                f"ratio not superparticular at index {int(b) + 1}: "
                f"{int(g_num[b])}:{int(g_den[b])}"
            )
    ones = v == 1
    bad = np.nonzero(ones & (g_num != q + 1))[0]
    for b in bad[:5]:
        failures.append(
            f"numerator mismatch at index {int(b) + 1}: "
            f"{int(g_num[b])} != sigma({int(q[b])})"
        )
    for b in np.nonzero(~ones)[0]:
        expect = sigma_prime_power(int(q[b]), int(v[b]))
        if int(g_num[b]) != expect:
            failures.append(
                f"numerator mismatch at index {int(b) + 1}: "
                f"{int(g_num[b])} != sigma({int(q[b])}^{int(v[b])}) = {expect}"
            )
            if len(failures) > 20:
                break

    ln_q = np.log(q.astype(np.float64))
    ln_g = np.log1p(1.0 / g_den.astype(np.float64))
    split_gap = np.abs(eps * ln_q - ln_g)
    bad = np.nonzero(split_gap > 1e-9 * ln_g)[0]
    for b in bad[:5]:
        failures.append(
            f"exponent split off at index {int(b) + 1}: "
            f"|eps*ln q - ln g| = {split_gap[b]:.3e}"
        )

    _ensure_finalized(recorder)
    cum_gap = np.abs(
        recorder.cum_ln_g[1 : h + 1]
        - recorder.ln_sigma[1 : h + 1].astype(np.longdouble)
    )
    bad = np.nonzero(cum_gap > 1e-8)[0]
    for b in bad[:5]:
        failures.append(
            f"running ln(sigma/n) drifted at index {int(b) + 1}: "
            f"gap {float(cum_gap[b]):.3e}"
        )

    expected: list[int] = []
    final_x = math.nan
    if h >= 2:
        lam = recorder.ln_ln_n[2 : h + 1]
        x = np.exp(recorder.ln_sigma[2 : h + 1]) / lam
        final_x = float(x[-1])
        over = x >= EXP_EULER_GAMMA
        for b in np.nonzero(over)[0]:
            idx = int(b) + 2
            if idx <= LAST_VIOLATION_INDEX:
                expected.append(idx)
            else:
                failures.append(
                    f"threshold exceeded at index {idx}: X = {x[b]!r}"
                )
                if len(failures) > 40:
                    break
        bound = EXP_EULER_GAMMA + BOUND_COEFF / (lam * lam)
        over_b = x >= bound
        for b in np.nonzero(over_b)[0]:
            idx = int(b) + 2
            if idx in BOUND_EXCLUDED_INDICES:
                continue
            failures.append(
                f"unconditional bound exceeded at index {idx}: "
                f"X = {x[b]!r} >= {bound[b]!r}"
            )
            if len(failures) > 60:
                break

    k9 = None
    if h >= 42:
        k9 = find_ki(recorder, 9, k_max=min(500, h - 9))

    return VerifyReport(
        horizon=h,
        checked=h,
        expected_rie_violations=tuple(expected),
        k9=k9,
        final_x=final_x,
        failures=tuple(failures),
    )


def format_verify_report(report: VerifyReport) -> str:
    lines = [
        f"records checked: {report.checked}",
        f"expected early threshold violations: "
        f"{list(report.expected_rie_violations) or 'none'}",
    ]
    if report.k9 is not None:
        lines.append(f"k_9 = {report.k9}")
    if not math.isnan(report.final_x):
        lines.append(f"final X = {report.final_x:.10g}")
    if report.failures:
        lines.append(f"FAILURES ({len(report.failures)}):")
        lines.extend("  " + f for f in report.failures)
    else:
        lines.append("all checks passed")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Summary tables
# --------------------------------------------------------------------------

#: Milestone indices, in the traditional presentation order.
MILESTONE_INDICES = (8, 508, 9, 13, 42, 2386, 143215)


@dataclass(frozen=True)
class MilestoneRow:
    """Statistics of one milestone term (one column of the printed
    milestone table)."""

    index: int
    v2: int
    ln_n: float
    ln_p1: float
    eps_shape: float  # ln(-1 / (eps ln eps)) for the realized exponent
    ln_ln_n: float
    k_i: Optional[int]  # None = no window hit within the scan horizon
    lg_n: float
    lg_lg_n: float
    sigma_minus1: float
    x_ratio: float
    bound: float


def milestone_table(
    recorder: ArrayRecorder,
    indices: Sequence[int] = MILESTONE_INDICES,
    k_max: int = 500,
) -> list[MilestoneRow]:
    rows = []
    for i in indices:
        if i < 2:
            raise DomainError(f"milestone index must be >= 2, got {i}")
        if i > recorder.max_index:
            raise InsufficientDataError(
                f"milestone index {i} beyond recorded {recorder.max_index}"
            )
        eps = float(recorder.eps[i])
        lam = float(recorder.ln_ln_n[i])
        ln_n = float(recorder.ln_n[i])
        rows.append(
            MilestoneRow(
                index=i,
                v2=int(recorder.v2[i]),
                ln_n=ln_n,
                ln_p1=float(recorder.ln_p1[i]),
                eps_shape=math.log(-1.0 / (eps * math.log(eps))),
                ln_ln_n=lam,
                k_i=find_ki(recorder, i, k_max),
                lg_n=float(recorder.ln_n[i]) / math.log(10.0),
                lg_lg_n=math.log10(ln_n / math.log(10.0)),
                sigma_minus1=math.exp(float(recorder.ln_sigma[i])),
                x_ratio=x_value(ln_n, float(recorder.ln_sigma[i])),
                bound=unconditional_bound(lam),
            )
        )
    return rows


_MILESTONE_LAYOUT = (
    ("i", lambda r: str(r.index)),
    ("v2", lambda r: str(r.v2)),
    ("ln n", lambda r: f"{r.ln_n:.10g}"),
    ("ln P1", lambda r: f"{r.ln_p1:.6g}"),
    ("shape", lambda r: f"{r.eps_shape:.6g}"),
    ("ln ln n", lambda r: f"{r.ln_ln_n:.6g}"),
    ("k_i", lambda r: "inf" if r.k_i is None else str(r.k_i)),
    ("lg n", lambda r: f"{r.lg_n:.10g}"),
    ("lg lg n", lambda r: f"{r.lg_lg_n:.6g}"),
    ("sigma/n", lambda r: f"{r.sigma_minus1:.6g}"),
    ("X", lambda r: f"{r.x_ratio:.11g}"),
    ("bound", lambda r: f"{r.bound:.6g}"),
)


def format_milestone_table(rows: Sequence[MilestoneRow]) -> str:
    """Milestones as columns, statistics as labelled rows."""
    cells = [
        [label] + [fmt(r) for r in rows] for label, fmt in _MILESTONE_LAYOUT
    ]
    widths = [
        max(len(row[c]) for row in cells) for c in range(len(rows) + 1)
    ]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths))
        for row in cells
    )


def milestone_table_csv(rows: Sequence[MilestoneRow]) -> str:
    header = (
        "index,v2,ln_n,ln_p1,eps_shape,ln_ln_n,k_i,lg_n,lg_lg_n,"
        "sigma_minus1,x_ratio,bound"
    )
    lines = [header]
    for r in rows:
        k = "" if r.k_i is None else str(r.k_i)
        lines.append(
            f"{r.index},{r.v2},{r.ln_n!r},{r.ln_p1!r},{r.eps_shape!r},"
            f"{r.ln_ln_n!r},{k},{r.lg_n!r},{r.lg_lg_n!r},"
            f"{r.sigma_minus1!r},{r.x_ratio!r},{r.bound!r}"
        )
    return "\n".join(lines)


@dataclass(frozen=True)
class WindowRow:
    """One row of the window table: the term's multiplier data plus the
    cumulative window products against the fixed bases."""

    index: int
    v2: int
    q: int
    p1: int
    ln_n: float
    v: int
    g_num: int
    g_den: int
    g_cum: float  # product of ratios over (g_base, index]
    eps: float
    ln_ln_n: float
    l_cum: float  # ln ln ratio against the g_base term
    minus_d: Optional[float]  # L - G against the d_base term; None early


def window_table(
    recorder: ArrayRecorder,
    start: int = 8,
    stop: int = 42,
    extras: Sequence[int] = (507, 508),
    g_base: int = 8,
    d_base: int = 9,
) -> list[WindowRow]:
    if start < g_base:
        raise DomainError(f"start {start} below window base {g_base}")
    if stop < start:
        raise DomainError(f"empty range {start}..{stop}")
    indices = list(range(start, stop + 1)) + [
        e for e in extras if e > stop
    ]
    top = max(indices)
    if top > recorder.max_index:
        raise InsufficientDataError(
            f"window table needs record {top}, have {recorder.max_index}"
        )
    _ensure_finalized(recorder)
    lam_g = np.longdouble(recorder.ln_ln_n[g_base])
    lam_d = np.longdouble(recorder.ln_ln_n[d_base])
    rows = []
    for idx in indices:
        lam = np.longdouble(recorder.ln_ln_n[idx])
        g_cum = np.exp(recorder.cum_ln_g[idx] - recorder.cum_ln_g[g_base])
        l_cum = lam / lam_g
        if idx > d_base:
            g_d = np.exp(recorder.cum_ln_g[idx] - recorder.cum_ln_g[d_base])
            minus_d = float(lam / lam_d - g_d)
        else:
            minus_d = None
        rows.append(
            WindowRow(
                index=idx,
                v2=int(recorder.v2[idx]),
                q=int(recorder.q[idx]),
                p1=int(recorder.p1[idx]),
                ln_n=float(recorder.ln_n[idx]),
                v=int(recorder.v[idx]),
                g_num=int(recorder.g_num[idx]),
                g_den=int(recorder.g_den[idx]),
                g_cum=float(g_cum),
                eps=float(recorder.eps[idx]),
                ln_ln_n=float(recorder.ln_ln_n[idx]),
                l_cum=float(l_cum),
                minus_d=minus_d,
            )
        )
    return rows


def format_window_table(rows: Sequence[WindowRow]) -> str:
    header = (
        "index",
        "v2",
        "q",
        "P1",
        "ln n",
        "v",
        "g",
        "G",
        "eps",
        "ln ln n",
        "L",
        "-D",
    )
    body = []
    for r in rows:
        body.append(
            (
                str(r.index),
                str(r.v2),
                str(r.q),
                str(r.p1),
                f"{r.ln_n:.1f}",
                str(r.v),
                f"{r.g_num}:{r.g_den}",
                f"{r.g_cum:.3f}",
                f"{r.eps:.2e}",
                f"{r.ln_ln_n:.3f}",
                f"{r.l_cum:.3f}",
                "" if r.minus_d is None else f"{r.minus_d:.2e}",
            )
        )
    table = [header] + body
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths))
        for row in table
    )


def window_table_csv(rows: Sequence[WindowRow]) -> str:
    header = (
        "index,v2,q,p1,ln_n,v,g_num,g_den,g_cum,eps,ln_ln_n,l_cum,minus_d"
    )
    lines = [header]
    for r in rows:
        md = "" if r.minus_d is None else repr(r.minus_d)
        lines.append(
            f"{r.index},{r.v2},{r.q},{r.p1},{r.ln_n!r},{r.v},{r.g_num},"
            f"{r.g_den},{r.g_cum!r},{r.eps!r},{r.ln_ln_n!r},{r.l_cum!r},{md}"
        )
    return "\n".join(lines)
