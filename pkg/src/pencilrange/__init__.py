"""Classify damped-sinusoid signals through the numerical range of their matrix pencil."""

from .classify import (
    ClassDecision,
    CrnrConfig,
    SweepReport,
    crnr_classify,
    disk_geometry_sweep,
    error_rate_sweep,
)
from .errors import NumericError, PencilRangeError, SchemaError
from .glrt import GlrtDecision, glrt_classify, vandermonde
from .numrange import (
    FrobeniusDisk,
    GridField,
    MembershipConfig,
    MembershipResult,
    classical_range_boundary,
    ensure_scaled,
    frobenius_disk,
    frobenius_disk_from_signal,
    g_map,
    membership,
    membership_many,
    mpm_eigenvalues,
    rect_range_boundary,
)
from .pencil import (
    BlockHankel,
    CadzowResult,
    PencilPair,
    build_block_hankel,
    cadzow_denoise,
    default_pencil_split,
    estimate_order,
    hankel_singular_values,
    split_pencil,
)
from .signal import (
    CandidateClass,
    Mode,
    Signal,
    SignalMeta,
    add_awgn,
    class_from_dict,
    class_from_json,
    class_to_dict,
    class_to_json,
    scale_signal,
    signal_from_dict,
    signal_from_json,
    signal_to_dict,
    signal_to_json,
    synth_mixture,
)

__version__ = "0.1.0"
