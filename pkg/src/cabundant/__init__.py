"""Colossally-abundant sequence toolkit.

Generates the sequence of colossally abundant numbers in fully factored
form, verifies the classical abundance inequalities and window conditions
along it, evaluates the associated oscillation-quotient geometry, and
cross-checks everything against a brute-force oracle at small scale.
"""

from .errors import (
    CabundantError,
    CheckpointError,
    CheckpointParseError,
    CheckpointVersionError,
    DomainError,
    ExcludedInputError,
    FourExponentialsWitness,
    InsufficientDataError,
    MaterializationBoundError,
    NotFoundError,
    ResourceError,
    SieveExhaustedError,
    SingularityError,
    TableLimitError,
    UsageError,
    VerificationError,
)
from .factored import (
    BottomUpForm,
    LogStats,
    TopDownForm,
    log_stats,
    materialize,
    sigma_prime_power,
    top_down_to_bottom_up,
)
from .primes import (
    DEFAULT_SIEVE_LIMIT,
    PrimeSieve,
    build_sieve,
    next_prime,
    next_prime_index,
    prime_index,
)
from .engine import (
    ArrayRecorder,
    CaRecord,
    CaState,
    ca_parameter,
    generate,
    load_checkpoint,
    prefix_records,
    run_sequence,
    save_checkpoint,
    seed_state,
    select_next_trigger,
    step,
)
from .robin import (
    BOUND_COEFF,
    EXP_EULER_GAMMA,
    MERTENS_B1,
    GlWindow,
    MilestoneRow,
    VerifyReport,
    WindowRow,
    artanh_criterion,
    choie_large_prime,
    find_ki,
    gl_window,
    ki_one_sufficient,
    milestone_table,
    rie_holds,
    unconditional_bound,
    verify_sweep,
    window_table,
    x_value,
)
from .oscillation import (
    ContourData,
    DeltaPhiSweep,
    EligibleScan,
    OscParams,
    PolarPoint,
    PrimePairScan,
    contour_data,
    delta_phi,
    delta_phi_derivative,
    deltaphi_sweep,
    eligible_point_scan,
    eps_infinity,
    eps_mu_nu,
    in_margin,
    in_margin_tangent,
    osc_g,
    osc_gradient,
    polar_identity_check,
    prime_pair_margin_scan,
)
from .oracle import (
    CaEntry,
    MaximalityReport,
    SigmaTable,
    brute_force_ca,
    brute_force_sa,
    build_sigma_table,
    maximality_report,
    mertens_residual,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
