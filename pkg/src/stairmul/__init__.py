"""Secret-shared distributed matrix multiplication with staircase codes.

A master holding a confidential matrix A outsources A @ x to n untrusted
workers. Shares leak nothing individually; staircase shares additionally
split into subshares so the master can decode from the earliest sufficient
prefix of responses instead of waiting for k full tasks. The `delays` module
quantifies the gain under exponential straggler delays.
"""

__version__ = "0.1.0"

from .delays import (
    BoundsReport,
    DelayModel,
    McEstimate,
    WaitingSample,
    approx_upper,
    bounds_report,
    cdf_tsc,
    exact_mean,
    exact_mean_one_parity,
    exact_mean_two_parity,
    fixed_rate_bound,
    harmonic,
    lower_bound,
    mc_mean,
    mean_ss,
    mean_tsc_quadrature,
    renyi_transform,
    sample_delays,
    savings,
    survival_lower,
    upper_bound,
    waiting_time_samples,
    waiting_times_from_delays,
)
from .field import (
    DEFAULT_MODULUS,
    FieldMatrix,
    InconsistentSystemError,
    PrimeField,
    UnderdeterminedSystemError,
    solve_column,
    split_row_blocks,
    stack_row_blocks,
    vandermonde_row,
)
from .ramp import RampShare, default_ramp_points, ss_decode, ss_encode
from .runtime import (
    Assignment,
    InsufficientWorkersError,
    MasterPlan,
    SCHEME_RAMP,
    SCHEME_STAIRCASE,
    SimResult,
    SubResult,
    collect_and_decode,
    load_matrix,
    master_setup,
    save_matrix,
    simulate_run,
    worker_compute,
)
from .staircase import (
    Copy,
    EnumerationTooLargeError,
    FreshKey,
    PrivacyAudit,
    Secret,
    StaircaseLayout,
    StaircaseParams,
    StaircaseShare,
    Zero,
    default_staircase_points,
    deserialize_share,
    privacy_audit,
    privacy_rank,
    sc_decodable,
    sc_decode,
    sc_encode,
    sc_layout,
    sc_params,
    sc_read_plan,
    sc_verify,
    serialize_share,
)

__all__ = [name for name in dir() if not name.startswith("_")]
