"""Oscillation-quotient geometry.

For parameters ``b`` (growth exponent) and ``delta`` (half the minimal
oscillation amplitude) the central object is the quotient surface

    g(mu, nu) = (mu/nu) * (1 + delta*e^{-b*mu}) * e^{b*nu}/(e^{b*nu} - delta)

over the open first quadrant, together with the exponent

    eps(mu, nu) = ln((1 + delta*e^{-b*mu}) / (1 - delta*e^{-b*nu}))

which factors the surface exactly as ``g = e^eps * cot(phi)`` in polar
coordinates ``mu = r cos(phi)``, ``nu = r sin(phi)``.  The *margin* is the
region above the diagonal where the surface still exceeds 1 — the set of
pairs whose quotient geometry keeps a growth step viable.  Scans check
membership for consecutive-prime pairs and for consecutive iterated-log
values from a recorded run.

All point functions are scalar and strict about their domain; grid
variants mask singular cells with NaN instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import ArrayRecorder
from .errors import (
    DomainError,
    InsufficientDataError,
    SieveExhaustedError,
    SingularityError,
    VerificationError,
)
from .primes import PrimeSieve

#: Overflow guard for the unfactorised form of g (exp argument bound).
_RAW_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class OscParams:
    """Oscillation parameters: ``0 < b <= 0.5`` and ``0 <= delta <= 1``.

    The interior ``0 < b < 0.5``, ``0 < delta < 1`` is the analytically
    meaningful region; both closures are admitted because the boundary
    values are standard reference configurations (``delta = 0`` switches
    the oscillation off, ``(b, delta) = (0.5, 1)`` is the classic plotted
    surface) and every formula below extends continuously to them.
    """

    b: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.b <= 0.5):
            raise DomainError(f"b must lie in (0, 0.5], got {self.b!r}")
        if not (0.0 <= self.delta <= 1.0):
            raise DomainError(
                f"delta must lie in [0, 1], got {self.delta!r}"
            )


@dataclass(frozen=True)
class PolarPoint:
    """Point of the open first quadrant in polar form: radius ``r > 0``
    and angle ``phi`` strictly between 0 and pi/2."""

    r: float
    phi: float

    def __post_init__(self):
        if not (self.r > 0.0):
            raise DomainError(f"radius must be positive, got {self.r!r}")
        if not (0.0 < self.phi < math.pi / 2.0):
            raise DomainError(
                f"angle must lie in (0, pi/2), got {self.phi!r}"
            )

    @property
    def mu(self) -> float:
        return self.r * math.cos(self.phi)

    @property
    def nu(self) -> float:
        return self.r * math.sin(self.phi)


def _check_point(mu: float, nu: float) -> None:
    if not (mu > 0.0 and nu > 0.0):
        raise DomainError(
            f"point must lie in the open quadrant, got ({mu!r}, {nu!r})"
        )


def osc_g(p: OscParams, mu: float, nu: float) -> float:
    """Quotient surface ``g(mu, nu)`` (factorised evaluation; the
    unfactorised form is recomputed as a cross-check whenever its
    exponentials stay representable)."""
    _check_point(mu, nu)
    # e^{b nu}/(e^{b nu} - delta) rewritten as 1/(1 - delta e^{-b nu}):
    # identical algebraically, immune to exp overflow at large nu.
    down = 1.0 - p.delta * math.exp(-p.b * nu)
    if down <= 0.0:
        raise SingularityError(
            f"denominator e^(b*nu) - delta vanishes at nu = {nu!r} "
            f"(b = {p.b!r}, delta = {p.delta!r})"
        )
    value = (mu / nu) * (1.0 + p.delta * math.exp(-p.b * mu)) / down
    if p.b * (mu + nu) <= _RAW_EXP_LIMIT:
        big = math.exp(p.b * (mu + nu))
        raw_den = nu * (big - p.delta * math.exp(p.b * mu))
        if raw_den > 0.0:
            raw = mu * (big + p.delta * math.exp(p.b * nu)) / raw_den
            if abs(raw - value) > 1e-12 * abs(value):
                raise VerificationError(
                    f"factorised and unfactorised g disagree at "
                    f"({mu!r}, {nu!r}): {value!r} vs {raw!r}"
                )
    return value


def osc_g_grid(
    p: OscParams, mu_axis: np.ndarray, nu_axis: np.ndarray
) -> np.ndarray:
    """``g`` on the product grid, shape ``(len(mu_axis), len(nu_axis))``;
    out-of-domain and singular cells are NaN, never raised."""
    mu = np.asarray(mu_axis, dtype=np.float64)[:, None]
    nu = np.asarray(nu_axis, dtype=np.float64)[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        down = 1.0 - p.delta * np.exp(-p.b * nu)
        value = (mu / nu) * (1.0 + p.delta * np.exp(-p.b * mu)) / down
        bad = (mu <= 0.0) | (nu <= 0.0) | (down <= 0.0)
        value = np.where(bad, np.nan, value)
    return value


def eps_mu_nu(p: OscParams, mu: float, nu: float) -> float:
    """Exponent ``eps(mu, nu)``; defined for ``mu, nu >= 0`` as long as
    ``delta * e^{-b*nu} < 1``."""
    if mu < 0.0 or nu < 0.0:
        raise DomainError(
            f"eps_mu_nu requires mu, nu >= 0, got ({mu!r}, {nu!r})"
        )
    down = p.delta * math.exp(-p.b * nu)
    if down >= 1.0:
        raise SingularityError(
            f"delta * e^(-b*nu) = {down!r} >= 1 at nu = {nu!r}"
        )
    return math.log1p(p.delta * math.exp(-p.b * mu)) - math.log1p(-down)


def eps_infinity(p: OscParams) -> float:
    """Limit exponent ``2 artanh(delta)`` (``+inf`` at ``delta = 1``)."""
    if p.delta >= 1.0:
        return math.inf
    return 2.0 * math.atanh(p.delta)


def polar_identity_check(
    p: OscParams, r: float, phi: float
) -> tuple[float, float]:
    """Both sides of the polar factorisation at ``(r, phi)``: the surface
    value ``g(r cos phi, r sin phi)`` and ``e^eps * cot(phi)``.  Equal to
    1e-10 relative throughout the domain."""
    point = PolarPoint(r, phi)
    mu, nu = point.mu, point.nu
    lhs = osc_g(p, mu, nu)
    rhs = math.exp(eps_mu_nu(p, mu, nu)) / math.tan(phi)
    return lhs, rhs


def osc_gradient(p: OscParams, mu: float, nu: float) -> tuple[float, float]:
    """Analytic gradient ``(dg/dmu, dg/dnu)``; the second component is
    strictly negative on the whole domain."""
    _check_point(mu, nu)
    e_bnu = math.exp(p.b * nu)
    denom = e_bnu - p.delta
    if denom <= 0.0:
        raise SingularityError(
            f"denominator e^(b*nu) - delta vanishes at nu = {nu!r}"
        )
    common = e_bnu / denom / nu
    osc_down = p.delta * math.exp(-p.b * mu)
    d_mu = common * (1.0 + (1.0 - mu * p.b) * osc_down)
    d_nu = (
        -common
        * mu
        * (1.0 / nu + p.b * p.delta / denom)
        * (1.0 + osc_down)
    )
    return d_mu, d_nu


def delta_phi(x: float, phi: float) -> float:
    """Angle displacement ``arccot(x * cot(phi)) - phi`` with the arccot
    branch fixed to (0, pi), so the result is continuous on the open
    quadrant; negative exactly when ``x > 1``."""
    if not (x > 0.0):
        raise DomainError(f"delta_phi requires x > 0, got {x!r}")
    if not (0.0 < phi < math.pi / 2.0):
        raise DomainError(f"angle must lie in (0, pi/2), got {phi!r}")
    return math.atan2(1.0, x / math.tan(phi)) - phi


def delta_phi_derivative(x: float, phi: float) -> float:
    """Partial derivative of :func:`delta_phi` in ``phi``:
    ``x csc^2(phi) / (x^2 cot^2(phi) + 1) - 1``."""
    if not (x > 0.0):
        raise DomainError(f"delta_phi requires x > 0, got {x!r}")
    if not (0.0 < phi < math.pi / 2.0):
        raise DomainError(f"angle must lie in (0, pi/2), got {phi!r}")
    s = math.sin(phi)
    c = 1.0 / math.tan(phi)
    return x / (s * s) / (x * x * c * c + 1.0) - 1.0


def in_margin(p: OscParams, mu: float, nu: float) -> bool:
    """Margin membership: strictly above the diagonal *and* surface value
    strictly above 1."""
    return nu > mu and osc_g(p, mu, nu) > 1.0


def in_margin_tangent(p: OscParams, mu: float, nu: float) -> bool:
    """Margin membership via the tangent form: ``phi > pi/4`` and
    ``tan(phi) < e^eps``.  Provably equivalent to :func:`in_margin`; kept
    separate so the equivalence is testable."""
    _check_point(mu, nu)
    phi = math.atan2(nu, mu)
    if phi <= math.pi / 4.0:
        return False
    return math.tan(phi) < math.exp(eps_mu_nu(p, mu, nu))


# --------------------------------------------------------------------------
# Scans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimePairScan:
    """Result of scanning consecutive-prime pairs ``(p_n, p_{n+1})`` for
    margin membership.  ``hits`` holds the 1-based prime indices ``n`` of
    member pairs; ``running_min`` tracks the running minimum of
    ``arctan(p_{n+1}/p_n) - pi/4`` across the scan."""

    start_index: int
    count: int
    hits: tuple[int, ...]
    angle_gap: np.ndarray
    running_min: np.ndarray

    @property
    def final_min(self) -> float:
        return float(self.running_min[-1])


def prime_pair_margin_scan(
    p: OscParams,
    sieve: PrimeSieve,
    start_index: int = 1,
    max_pairs: int = 10_000,
) -> PrimePairScan:
    """Evaluate margin membership for ``max_pairs`` consecutive-prime
    pairs beginning at the ``start_index``-th prime (1-based)."""
    if start_index < 1:
        raise DomainError(f"start_index must be >= 1, got {start_index}")
    if max_pairs < 1:
        raise DomainError(f"max_pairs must be >= 1, got {max_pairs}")
    lo = start_index - 1
    hi = lo + max_pairs  # need primes[lo .. hi] inclusive
    if hi >= len(sieve.primes):
        raise SieveExhaustedError(
            f"scan needs prime #{hi + 1}, sieve holds {len(sieve.primes)} "
            f"primes below {sieve.limit}"
        )
    mu = sieve.primes[lo:hi].astype(np.float64)
    nu = sieve.primes[lo + 1 : hi + 1].astype(np.float64)
    g = (
        (mu / nu)
        * (1.0 + p.delta * np.exp(-p.b * mu))
        / (1.0 - p.delta * np.exp(-p.b * nu))
    )
    member = (nu > mu) & (g > 1.0)
    hits = tuple(int(k) + start_index for k in np.nonzero(member)[0])
    angle_gap = np.arctan2(nu, mu) - math.pi / 4.0
    return PrimePairScan(
        start_index=start_index,
        count=max_pairs,
        hits=hits,
        angle_gap=angle_gap,
        running_min=np.minimum.accumulate(angle_gap),
    )


@dataclass(frozen=True)
class EligibleScan:
    """Result of scanning consecutive iterated-log pairs
    ``(lambda(k), lambda(k+1))`` from a recorded run, where
    ``lambda(k) = ln ln n_{i+k}``.  ``found_k`` is the first margin hit
    (None if none within the scan); the trace arrays cover every scanned
    offset up to and including the hit."""

    i: int
    found_k: Optional[int]
    k: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    g: np.ndarray


def eligible_point_scan(
    p: OscParams, recorder: ArrayRecorder, i: int, max_k: int
) -> EligibleScan:
    """Scan offsets ``k = 0 .. max_k`` for the first consecutive
    iterated-log pair that lies in the margin."""
    if i < 2:
        raise DomainError(
            f"base index must be >= 2 (iterated log must be positive), "
            f"got {i}"
        )
    if max_k < 0:
        raise DomainError(f"max_k must be >= 0, got {max_k}")
    need = i + max_k + 1
    if need > recorder.max_index:
        raise InsufficientDataError(
            f"scan needs record {need}, have {recorder.max_index}"
        )
    lam = recorder.ln_ln_n[i : need + 1].astype(np.float64)
    mu = lam[:-1]
    nu = lam[1:]
    g = (
        (mu / nu)
        * (1.0 + p.delta * np.exp(-p.b * mu))
        / (1.0 - p.delta * np.exp(-p.b * nu))
    )
    member = (nu > mu) & (g > 1.0)
    idx = np.nonzero(member)[0]
    found_k = int(idx[0]) if idx.size else None
    end = (found_k + 1) if found_k is not None else (max_k + 1)
    return EligibleScan(
        i=i,
        found_k=found_k,
        k=np.arange(end),
        mu=mu[:end],
        nu=nu[:end],
        g=g[:end],
    )


# --------------------------------------------------------------------------
# Contours and the angle-displacement sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourData:
    """Level sets of the quotient surface on a rectangular grid plus the
    asymptote direction ``atan2(1, e^{-eps_inf})`` that the level-1 set
    approaches for large radius."""

    params: OscParams
    mu_axis: np.ndarray
    nu_axis: np.ndarray
    levels: tuple[float, ...]
    polylines: dict[float, list[np.ndarray]]
    asymptote_angle: float


def contour_data(
    p: OscParams,
    mu_range: tuple[float, float] = (0.05, 10.0),
    nu_range: tuple[float, float] = (0.05, 10.0),
    resolution: int = 201,
    levels: Sequence[float] = (0.5, 1.0, 2.0),
) -> ContourData:
    """Marching-squares level sets of ``g`` over the rectangle.  Singular
    cells are NaN-masked (the extractor simply omits them)."""
    if resolution < 2:
        raise DomainError(f"resolution must be >= 2, got {resolution}")
    for lo, hi in (mu_range, nu_range):
        if not (0.0 < lo < hi):
            raise DomainError(
                f"range must satisfy 0 < lo < hi, got ({lo!r}, {hi!r})"
            )
    from skimage import measure

    mu_axis = np.linspace(mu_range[0], mu_range[1], resolution)
    nu_axis = np.linspace(nu_range[0], nu_range[1], resolution)
    grid = osc_g_grid(p, mu_axis, nu_axis)
    d_mu = mu_axis[1] - mu_axis[0]
    d_nu = nu_axis[1] - nu_axis[0]
    polylines: dict[float, list[np.ndarray]] = {}
    for level in levels:
        paths = []
        for coords in measure.find_contours(grid, float(level)):
            path = np.empty_like(coords)
            path[:, 0] = mu_axis[0] + coords[:, 0] * d_mu
            path[:, 1] = nu_axis[0] + coords[:, 1] * d_nu
            paths.append(path)
        polylines[float(level)] = paths
    return ContourData(
        params=p,
        mu_axis=mu_axis,
        nu_axis=nu_axis,
        levels=tuple(float(lv) for lv in levels),
        polylines=polylines,
        asymptote_angle=math.atan2(1.0, math.exp(-eps_infinity(p))),
    )


def contour_csv(data: ContourData) -> str:
    """Rows ``mu,nu,level`` for every polyline vertex."""
    lines = ["mu,nu,level"]
    for level in data.levels:
        for path in data.polylines[level]:
            for mu, nu in path:
                lines.append(f"{mu!r},{nu!r},{level!r}")
    return "\n".join(lines)


def contour_gnuplot(data: ContourData) -> str:
    """Gnuplot-style blocks: one indexed block per polyline, blank-line
    separated, with the asymptote angle in the header comment."""
    lines = [
        f"# quotient-surface contours, b={data.params.b!r} "
        f"delta={data.params.delta!r}",
        f"# asymptote angle = {data.asymptote_angle!r}",
    ]
    for level in data.levels:
        for part, path in enumerate(data.polylines[level]):
            lines.append(f"# level {level!r} part {part}")
            for mu, nu in path:
                lines.append(f"{mu!r} {nu!r}")
            lines.append("")
    return "\n".join(lines)


#: The plotted family of displacement curves: x = 4/8 .. 12/8.
DELTAPHI_X = tuple(i / 8.0 for i in range(4, 13))


@dataclass(frozen=True)
class DeltaPhiSweep:
    x_values: tuple[float, ...]
    phi: np.ndarray
    curves: np.ndarray  # shape (len(x_values), len(phi))
    derivatives: np.ndarray  # same shape


def deltaphi_sweep(
    x_values: Sequence[float] = DELTAPHI_X,
    n_phi: int = 257,
    margin: float = 1e-3,
) -> DeltaPhiSweep:
    """Sample the displacement curves and their derivatives for each
    ``x`` over ``phi`` in the open interval ``(0, pi/2)``."""
    if n_phi < 2:
        raise DomainError(f"n_phi must be >= 2, got {n_phi}")
    for x in x_values:
        if not (x > 0.0):
            raise DomainError(f"x values must be positive, got {x!r}")
    phi = np.linspace(margin, math.pi / 2.0 - margin, n_phi)
    cot = 1.0 / np.tan(phi)
    sin2 = np.sin(phi) ** 2
    curves = np.empty((len(x_values), n_phi))
    derivs = np.empty_like(curves)
    for row, x in enumerate(x_values):
        curves[row] = np.arctan2(1.0, x * cot) - phi
        derivs[row] = x / sin2 / (x * x * cot * cot + 1.0) - 1.0
    return DeltaPhiSweep(
        x_values=tuple(float(x) for x in x_values),
        phi=phi,
        curves=curves,
        derivatives=derivs,
    )


def deltaphi_csv(sweep: DeltaPhiSweep) -> str:
    """Rows ``x,phi,delta_phi,derivative`` across the whole family."""
    lines = ["x,phi,delta_phi,derivative"]
    for row, x in enumerate(sweep.x_values):
        for col in range(len(sweep.phi)):
            lines.append(
                f"{x!r},{sweep.phi[col]!r},{sweep.curves[row, col]!r},"
                f"{sweep.derivatives[row, col]!r}"
            )
    return "\n".join(lines)


def deltaphi_gnuplot(sweep: DeltaPhiSweep) -> str:
    """One gnuplot block per curve followed by one per derivative."""
    lines = []
    for kind, table in (
        ("displacement", sweep.curves),
        ("derivative", sweep.derivatives),
    ):
        for row, x in enumerate(sweep.x_values):
            lines.append(f"# {kind} x = {x!r}")
            for col in range(len(sweep.phi)):
                lines.append(f"{sweep.phi[col]!r} {table[row, col]!r}")
            lines.append("")
    return "\n".join(lines)
