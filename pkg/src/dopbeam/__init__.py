"""Multiuser mmWave MIMO beamforming via iterative dual orthogonal projections."""

from .baselines import BaselineResult, bd_beamformers, dpc_sum_capacity, evaluate_bd, evaluate_dpc
from .channel import (ChannelParams, ChannelSet, generate_channel_set,
                      load_channel_set, save_channel_set, steering_vector)
from .config import SystemConfig, Tolerances, make_config
from .dop import (BeamformerSet, FinalizedBeamformers, IterationRecord, IterationTrace,
                  StopReason, finalize, first_projection, initialize_combiners,
                  run_dop, second_projection)
from .errors import (DimensionMismatch, EmptyGains, EmptyInput, InfeasibleConfig,
                     NonConvergence, NotSquare, RankTooLarge, SingularCovariance,
                     StreamsExceedNullity)
from .estimators import (BlockDiagonalizationBeamformer, DualProjectionBeamformer,
                         HybridDualProjectionBeamformer, check_channels)
from .experiments import (ExperimentKind, ExperimentSpec, ResultRow, SummaryRow,
                          run_experiment, summarize, write_results_csv,
                          write_summary_csv, write_trace_csv)
from .hybrid import (HybridBeamformerSet, PhaseExtraction, baseband_mui_cleanup,
                     effective_mui_certificate, hybridize, phase_extraction_altmin)
from .metrics import (UserLinkReport, interference_covariance, link_report,
                      sum_rate, user_rate)
from .seeding import complex_normal, derive_seed, rng_from
from .subspace import (OrthonormalBasis, TruncatedSvd, orthonormal_span,
                       project_complement, truncated_svd)
from .waterfill import PowerAllocation, apply_allocation, waterfill

__version__ = "0.1.0"

__all__ = [
    "BaselineResult", "bd_beamformers", "dpc_sum_capacity", "evaluate_bd", "evaluate_dpc",
    "ChannelParams", "ChannelSet", "generate_channel_set", "load_channel_set",
    "save_channel_set", "steering_vector",
    "SystemConfig", "Tolerances", "make_config",
    "BeamformerSet", "FinalizedBeamformers", "IterationRecord", "IterationTrace",
    "StopReason", "finalize", "first_projection", "initialize_combiners",
    "run_dop", "second_projection",
    "DimensionMismatch", "EmptyGains", "EmptyInput", "InfeasibleConfig",
    "NonConvergence", "NotSquare", "RankTooLarge", "SingularCovariance",
    "StreamsExceedNullity",
    "BlockDiagonalizationBeamformer", "DualProjectionBeamformer",
    "HybridDualProjectionBeamformer", "check_channels",
    "ExperimentKind", "ExperimentSpec", "ResultRow", "SummaryRow",
    "run_experiment", "summarize", "write_results_csv", "write_summary_csv",
    "write_trace_csv",
    "HybridBeamformerSet", "PhaseExtraction", "baseband_mui_cleanup",
    "effective_mui_certificate", "hybridize", "phase_extraction_altmin",
    "UserLinkReport", "interference_covariance", "link_report", "sum_rate", "user_rate",
    "complex_normal", "derive_seed", "rng_from",
    "OrthonormalBasis", "TruncatedSvd", "orthonormal_span", "project_complement",
    "truncated_svd",
    "PowerAllocation", "apply_allocation", "waterfill",
    "__version__",
]
