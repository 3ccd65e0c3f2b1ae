"""cpakit: correlation power analysis toolkit for AES-128.

Simulates first-round AES power leakage with realistic acquisition
pathologies, recovers keys from paired plaintext/trace campaigns by
correlating Hamming-weight hypotheses against every trace sample, and
persists campaigns in a bit-exact binary format.
"""

from .aes import IntermediateTarget, aes128_encrypt_block
from .engine import (
    AttackResult,
    CorrelationAccumulator,
    EvolutionSeries,
    InsufficientTracesError,
    attack,
    build_hypotheses,
    correlate,
    evolution,
    pearson,
    rank_candidates,
    realign,
)
from .power_model import (
    LeakageMetric,
    PowerModelSpec,
    hamming_distance,
    hamming_weight,
    hypothesize,
    parse_model,
)
from .report import Summary, summarize, verify_key
from .simulator import (
    AllRepeatsDroppedError,
    Capture,
    LeakageConfig,
    acquire_campaign,
    average_repeats,
    simulate_capture,
)
from .traceio import (
    BadMagicError,
    TraceFormatError,
    TruncatedFileError,
    UnsupportedVersionError,
    export_evolution,
    read_traceset,
    write_traceset,
)
from .traceset import TraceSet

__version__ = "0.1.0"

__all__ = [
    "AllRepeatsDroppedError",
    "AttackResult",
    "BadMagicError",
    "Capture",
    "CorrelationAccumulator",
    "EvolutionSeries",
    "InsufficientTracesError",
    "IntermediateTarget",
    "LeakageConfig",
    "LeakageMetric",
    "PowerModelSpec",
    "Summary",
    "TraceFormatError",
    "TraceSet",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "acquire_campaign",
    "aes128_encrypt_block",
    "attack",
    "average_repeats",
    "build_hypotheses",
    "correlate",
    "evolution",
    "export_evolution",
    "hamming_distance",
    "hamming_weight",
    "hypothesize",
    "parse_model",
    "pearson",
    "rank_candidates",
    "read_traceset",
    "realign",
    "simulate_capture",
    "summarize",
    "verify_key",
    "write_traceset",
]
