"""Randomized caching of MDS-coded symbols with segment-split delivery.

Every file is first padded and cut into ``source_symbols`` pieces, expanded
by the systematic code in :mod:`d2dcache.mds` to ``code_length =
ceil(source_symbols / code_rate)`` coded symbols, and every user caches a
uniform random index set of ``cache_size * source_symbols / files`` of them
per file, drawn without replacement from an independent per-(user, file)
stream of one seed.

Delivery walks user subsets from largest to smallest (lexicographic within a
size) and skips subsets whose members are all selfish.  Within a subset, the
*block* serving member ``v`` is the run of coded symbols of ``v``'s requested
file cached by exactly the other members.  With ``t >= 2`` willing members,
each block is cut into ``t - 1`` equal ceil-sized segments handed one-to-one
(ascending) to its transmitter group, and each willing member sends a single
packet XOR-combining its assigned segments, zero-padded to the longest.  With
one willing member, that member sends the plain XOR of the other members'
full blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .combinat import UserSubset, validate_subset
from .errors import (
    InfeasibleError,
    NoTransmitterError,
    ParameterError,
    UnsupportedParameterError,
)

MAX_SIMULATED_USERS = 63  # cache masks are packed into uint64 words


@dataclass(frozen=True)
class RandConfig:
    """Parameters of a randomized-scheme run.

    ``code_rate`` is the MDS rate in (0, 1]; pick it at or below the critical
    rate from :mod:`d2dcache.analytics` for decodability.  ``seed`` drives
    every placement draw through per-(user, file) substreams."""

    users: int
    files: int
    cache_size: int
    file_bytes: int
    source_symbols: int
    code_rate: float
    seed: int = 0
    selfish: UserSubset = ()

    def __post_init__(self) -> None:
        if self.users < 2 or self.files < 1 or self.cache_size < 1:
            raise ParameterError(
                f"need users >= 2, files >= 1, cache_size >= 1; got "
                f"{self.users}, {self.files}, {self.cache_size}"
            )
        if self.users > MAX_SIMULATED_USERS:
            raise UnsupportedParameterError(
                f"simulation supports at most {MAX_SIMULATED_USERS} users, got {self.users}"
            )
        if self.file_bytes < 1 or self.source_symbols < 1:
            raise ParameterError("file_bytes and source_symbols must be positive")
        if not 0.0 < self.code_rate <= 1.0:
            raise ParameterError(f"code_rate must lie in (0, 1], got {self.code_rate}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")
        canonical = tuple(sorted(self.selfish))
        if len(set(canonical)) != len(canonical):
            raise ParameterError(f"selfish set {canonical} has repeated members")
        try:
            object.__setattr__(self, "selfish", validate_subset(canonical, self.users))
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        willing_users = self.users - len(self.selfish)
        if self.cache_size * willing_users <= self.files:
            raise InfeasibleError(
                f"aggregate willing cache {self.cache_size}*{willing_users} files "
                f"must exceed the {self.files}-file library"
            )
        if (self.cache_size * self.source_symbols) % self.files != 0:
            raise UnsupportedParameterError(
                f"cache_size*source_symbols/files = "
                f"{self.cache_size * self.source_symbols}/{self.files} is not an integer"
            )
        if self.cached_per_file > self.code_length:
            raise ParameterError(
                f"per-file cache of {self.cached_per_file} symbols exceeds the "
                f"{self.code_length}-symbol code"
            )

    @property
    def code_length(self) -> int:
        return math.ceil(self.source_symbols / self.code_rate)

    @property
    def cached_per_file(self) -> int:
        return (self.cache_size * self.source_symbols) // self.files

    @property
    def symbol_bytes(self) -> int:
        """Even byte width of one symbol; files are zero-padded to
        ``source_symbols * symbol_bytes``."""
        return 2 * math.ceil(self.file_bytes / (2 * self.source_symbols))

    @property
    def padded_file_bytes(self) -> int:
        return self.source_symbols * self.symbol_bytes

    def willing(self) -> tuple[int, ...]:
        return tuple(u for u in range(self.users) if u not in self.selfish)


class RandPlacement:
    """Cached index sets for every (user, file) pair, plus per-file bitmasks
    saying which users cache each coded symbol."""

    def __init__(self, config: RandConfig, cached: dict[tuple[int, int], np.ndarray]):
        self.config = config
        self._cached = cached
        self._masks: dict[int, np.ndarray] = {}

    def cached_indices(self, user: int, file_index: int) -> np.ndarray:
        """Sorted coded-symbol indices of ``file_index`` held by ``user``."""
        return self._cached[(user, file_index)]

    def cache_mask(self, file_index: int) -> np.ndarray:
        """Per-symbol bitmask of caching users (bit u set = user u caches it)."""
        mask = self._masks.get(file_index)
        if mask is None:
            mask = np.zeros(self.config.code_length, dtype=np.uint64)
            for user in range(self.config.users):
                mask[self._cached[(user, file_index)]] |= np.uint64(1 << user)
            self._masks[file_index] = mask
        return mask

    def block_indices(self, file_index: int, holders: UserSubset) -> np.ndarray:
        """Ascending indices of symbols cached by exactly ``holders``."""
        key = _subset_bits(holders)
        return np.flatnonzero(self.cache_mask(file_index) == np.uint64(key))

    def block_size(self, file_index: int, holders: UserSubset) -> int:
        return int(
            (self.cache_mask(file_index) == np.uint64(_subset_bits(holders))).sum()
        )


def _subset_bits(subset: Sequence[int]) -> int:
    bits = 0
    for member in subset:
        bits |= 1 << member
    return bits


def place(config: RandConfig) -> RandPlacement:
    """Draw every user's per-file index set from its own seeded substream."""
    cached: dict[tuple[int, int], np.ndarray] = {}
    for user in range(config.users):
        for file_index in range(config.files):
            rng = np.random.default_rng([config.seed, user, file_index])
            picks = rng.choice(
                config.code_length, size=config.cached_per_file, replace=False
            )
            picks.sort()
            cached[(user, file_index)] = picks
    return RandPlacement(config, cached)


def exclusivity_partition(
    placement: RandPlacement, file_index: int
) -> dict[UserSubset, list[int]]:
    """Partition of all ``code_length`` symbol indices of one file by the
    exact set of users caching them.  Keys cover every user subset including
    the empty one; index lists are ascending and the lists' sizes sum to
    ``code_length``."""
    config = placement.config
    mask = placement.cache_mask(file_index)
    partition: dict[UserSubset, list[int]] = {}
    for size in range(config.users + 1):
        for subset in itertools.combinations(range(config.users), size):
            partition[subset] = np.flatnonzero(
                mask == np.uint64(_subset_bits(subset))
            ).tolist()
    return partition


def xor_zero_pad(chunks: Sequence[bytes]) -> bytes:
    """XOR byte strings of unequal length, zero-padding to the longest."""
    if len(chunks) == 0:
        raise ParameterError("xor_zero_pad needs at least one chunk")
    width = max(len(c) for c in chunks)
    acc = 0
    for chunk in chunks:
        acc ^= int.from_bytes(bytes(chunk) + b"\x00" * (width - len(chunk)), "big")
    return acc.to_bytes(width, "big")


class BlockRef(NamedTuple):
    """One segment of one block inside a packet."""

    destination: int  # subset member the block serves
    file_index: int
    holders: UserSubset  # users caching the block = subset minus destination
    symbol_count: int  # whole-block size in symbols
    segment_index: int
    segment_count: int
    indices: np.ndarray | None  # block's symbol indices; None in index-only runs


class SegmentPacket(NamedTuple):
    """One transmission: XOR of the listed segments, zero-padded to the
    longest.  ``payload`` is None in index-only runs; ``payload_symbols``
    (length in symbol units) is filled either way."""

    sender: int
    subset: UserSubset
    parts: tuple[BlockRef, ...]
    payload: bytes | None
    payload_symbols: int


def _segment_symbol_span(symbol_count: int, segment_count: int, segment_index: int) -> tuple[int, int]:
    per = math.ceil(symbol_count / segment_count) if symbol_count else 0
    start = min(segment_index * per, symbol_count)
    stop = min(start + per, symbol_count)
    return start, stop


def deliver(
    config: RandConfig,
    placement: RandPlacement,
    requests: Sequence[int],
    coded_library: Sequence[np.ndarray] | None = None,
) -> list[SegmentPacket]:
    """Build the full packet list for one request vector.

    ``coded_library`` holds one ``(code_length, symbol_bytes/2)`` uint16
    matrix per file; pass None for an index-only run with packet metadata but
    no payload bytes."""
    _validate_requests(config, requests)
    if not config.willing():
        raise NoTransmitterError("every user is selfish; nobody can transmit")
    packets: list[SegmentPacket] = []
    keep_indices = coded_library is not None
    for size in range(config.users, 1, -1):
        for subset in itertools.combinations(range(config.users), size):
            willing = [u for u in subset if u not in config.selfish]
            if not willing:
                continue
            if len(willing) == 1:
                packets.append(
                    _sole_transmitter_packet(
                        config, placement, requests, subset, willing[0],
                        coded_library, keep_indices,
                    )
                )
            else:
                packets.extend(
                    _segment_packets(
                        config, placement, requests, subset, willing,
                        coded_library, keep_indices,
                    )
                )
    return packets


def _block_ref(
    placement: RandPlacement,
    requests: Sequence[int],
    subset: UserSubset,
    destination: int,
    segment_index: int,
    segment_count: int,
    keep_indices: bool,
) -> BlockRef:
    holders = tuple(u for u in subset if u != destination)
    file_index = requests[destination]
    indices = placement.block_indices(file_index, holders) if keep_indices else None
    size = (
        len(indices)
        if indices is not None
        else placement.block_size(file_index, holders)
    )
    return BlockRef(
        destination, file_index, holders, size, segment_index, segment_count, indices
    )


def _segment_payload(ref: BlockRef, coded_library: Sequence[np.ndarray]) -> bytes:
    start, stop = _segment_symbol_span(
        ref.symbol_count, ref.segment_count, ref.segment_index
    )
    if stop <= start:
        return b""
    rows = coded_library[ref.file_index][ref.indices[start:stop]]
    return rows.astype("<u2").tobytes()


def _finish_packet(
    config: RandConfig,
    sender: int,
    subset: UserSubset,
    parts: list[BlockRef],
    coded_library: Sequence[np.ndarray] | None,
) -> SegmentPacket:
    spans = [
        _segment_symbol_span(p.symbol_count, p.segment_count, p.segment_index)
        for p in parts
    ]
    symbols = max((stop - start for start, stop in spans), default=0)
    payload = None
    if coded_library is not None:
        if symbols == 0:
            payload = b""
        else:
            payload = xor_zero_pad([_segment_payload(p, coded_library) for p in parts])
    return SegmentPacket(sender, subset, tuple(parts), payload, symbols)


def _sole_transmitter_packet(
    config: RandConfig,
    placement: RandPlacement,
    requests: Sequence[int],
    subset: UserSubset,
    sender: int,
    coded_library: Sequence[np.ndarray] | None,
    keep_indices: bool,
) -> SegmentPacket:
    parts = [
        _block_ref(placement, requests, subset, v, 0, 1, keep_indices)
        for v in subset
        if v != sender
    ]
    return _finish_packet(config, sender, subset, parts, coded_library)


def _segment_packets(
    config: RandConfig,
    placement: RandPlacement,
    requests: Sequence[int],
    subset: UserSubset,
    willing: list[int],
    coded_library: Sequence[np.ndarray] | None,
    keep_indices: bool,
) -> list[SegmentPacket]:
    anchor = willing[0]  # lowest-index willing member
    segment_count = len(willing) - 1
    assignments: dict[int, list[BlockRef]] = {w: [] for w in willing}
    for destination in subset:
        if destination in config.selfish:
            group = [w for w in willing if w != anchor]
        else:
            group = [w for w in willing if w != destination]
        for segment_index, transmitter in enumerate(group):
            assignments[transmitter].append(
                _block_ref(
                    placement, requests, subset, destination,
                    segment_index, segment_count, keep_indices,
                )
            )
    return [
        _finish_packet(config, sender, subset, assignments[sender], coded_library)
        for sender in willing
    ]


def _validate_requests(config: RandConfig, requests: Sequence[int]) -> None:
    if len(requests) != config.users:
        raise ParameterError(
            f"request vector length {len(requests)} != {config.users} users"
        )
    for user, file_index in enumerate(requests):
        if not 0 <= file_index < config.files:
            raise ParameterError(
                f"user {user} requests file {file_index} outside [0, {config.files})"
            )
