"""Coded-caching simulator for device-to-device networks with selfish users.

Two delivery schemes over a shared error-free broadcast medium: a
deterministic subfile-exchange scheme with compensation for non-transmitting
(selfish) users, and a randomized scheme built on MDS-coded placement.  The
analytics module carries the closed-form rates and bounds; the harness runs
place / deliver / decode end to end and checks byte-exact recovery.
"""

from .analytics import (
    RatePoint,
    available_symbol_fraction,
    critical_code_rate,
    critical_code_rate_selfish,
    cutset_lower_bound,
    deterministic_rate,
    exact_replication_factor,
    expected_exclusive_block_size,
    randomized_rate,
    subset_transmission_weight,
    symbol_deficit,
)
from .deterministic import DetConfig, DetPlacement, Packet, Schedule, SubfileId
from .deterministic import deliver as deterministic_deliver
from .deterministic import place as deterministic_place
from .deterministic import replication_factor, schedule_rate
from .errors import (
    D2DCacheError,
    InfeasibleError,
    InsufficientSymbolsError,
    NoTransmitterError,
    ParameterError,
    ToleranceExceededError,
    TrivialCachingError,
    UnsupportedParameterError,
)
from .harness import (
    BroadcastLog,
    DecodeReport,
    UserOutcome,
    WorstCaseReport,
    make_library,
    run_deterministic,
    run_randomized,
    worst_case_error,
)
from .mds import MdsCode, mds_decode, mds_encode
from .randomized import BlockRef, RandConfig, RandPlacement, SegmentPacket
from .randomized import deliver as randomized_deliver
from .randomized import exclusivity_partition
from .randomized import place as randomized_place

__version__ = "0.1.0"

__all__ = [
    "BlockRef",
    "BroadcastLog",
    "D2DCacheError",
    "DecodeReport",
    "DetConfig",
    "DetPlacement",
    "InfeasibleError",
    "InsufficientSymbolsError",
    "MdsCode",
    "NoTransmitterError",
    "Packet",
    "ParameterError",
    "RandConfig",
    "RandPlacement",
    "RatePoint",
    "Schedule",
    "SegmentPacket",
    "SubfileId",
    "ToleranceExceededError",
    "TrivialCachingError",
    "UnsupportedParameterError",
    "UserOutcome",
    "WorstCaseReport",
    "available_symbol_fraction",
    "critical_code_rate",
    "critical_code_rate_selfish",
    "cutset_lower_bound",
    "deterministic_deliver",
    "deterministic_place",
    "deterministic_rate",
    "exact_replication_factor",
    "exclusivity_partition",
    "expected_exclusive_block_size",
    "make_library",
    "mds_decode",
    "mds_encode",
    "randomized_deliver",
    "randomized_place",
    "randomized_rate",
    "replication_factor",
    "run_deterministic",
    "run_randomized",
    "schedule_rate",
    "subset_transmission_weight",
    "symbol_deficit",
    "worst_case_error",
]
