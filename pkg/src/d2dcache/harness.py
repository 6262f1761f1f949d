"""End-to-end experiments: place, deliver, then decode at every user.

The decoders are deliberately narrow: a user's decode function receives the
shared broadcast log, that user's own cache contents, and the request vector,
nothing else.  All inter-user information flows through the log.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import deterministic as det
from . import randomized as rnd
from .errors import InsufficientSymbolsError, ParameterError
from .mds import MdsCode, bytes_to_elements, mds_decode, mds_encode

LIBRARY_STREAM = 0xFFFF_FFFF  # keeps library bytes off the placement substreams

INDEX_MODE = "index"
PAYLOAD_MODE = "payload"


@dataclass(frozen=True)
class BroadcastLog:
    """Append-only transmission record; every receiver sees the same view."""

    entries: tuple

    def __len__(self) -> int:
        return len(self.entries)


def make_library(files: int, file_bytes: int, seed: int) -> list[bytes]:
    """Deterministic pseudo-random library contents for a given seed."""
    return [
        np.random.default_rng([seed, LIBRARY_STREAM, index]).bytes(file_bytes)
        for index in range(files)
    ]


def library_digest(library: Iterable[bytes]) -> str:
    digest = hashlib.sha256()
    for data in library:
        digest.update(data)
    return digest.hexdigest()


@dataclass(frozen=True)
class UserOutcome:
    user: int
    requested_file: int
    ok: bool
    byte_exact: bool | None = None
    symbols_available: int | None = None
    failure: str | None = None


@dataclass(frozen=True)
class DecodeReport:
    """Outcome of one experiment run."""

    scheme: str
    config: Union[det.DetConfig, rnd.RandConfig]
    requests: tuple[int, ...]
    seed: int
    mode: str
    per_user: tuple[UserOutcome, ...]
    empirical_rate: Fraction
    total_payload_bytes: int

    @property
    def all_ok(self) -> bool:
        return all(outcome.ok for outcome in self.per_user)

    @property
    def min_symbol_margin(self) -> int | None:
        margins = [
            o.symbols_available for o in self.per_user if o.symbols_available is not None
        ]
        if not margins:
            return None
        source = getattr(self.config, "source_symbols", None)
        return None if source is None else min(margins) - source


def decode_deterministic_user(
    config: det.DetConfig,
    user: int,
    log: BroadcastLog,
    own_cache: Mapping[det.SubfileId, bytes],
    requests: Sequence[int],
) -> bytes:
    """Recover the user's requested file from the log and its own cache.

    Packets are peeled in schedule order: any packet with exactly one term
    missing from the user's knowledge yields that term."""
    width = config.subfile_bytes
    known: dict[det.SubfileId, int] = {
        sid: int.from_bytes(payload, "big") for sid, payload in own_cache.items()
    }
    for packet in log.entries:
        unknown = [term for term in packet.terms if term not in known]
        if len(unknown) != 1:
            continue
        value = int.from_bytes(packet.payload, "big")
        for term in packet.terms:
            if term != unknown[0]:
                value ^= known[term]
        known[unknown[0]] = value

    wanted = requests[user]
    pieces: list[bytes] = []
    for group in config.groups():
        for owner in group:
            sid = det.SubfileId(wanted, group, owner)
            if sid not in known:
                raise InsufficientSymbolsError(f"user {user} never obtained {sid}")
            pieces.append(known[sid].to_bytes(width, "big"))
    return b"".join(pieces)[: config.file_bytes]


def run_deterministic(
    config: det.DetConfig,
    requests: Sequence[int],
    seed: int = 0,
    library: Sequence[bytes] | None = None,
    placement: det.DetPlacement | None = None,
) -> DecodeReport:
    """Full deterministic pipeline for one request vector."""
    if library is None:
        library = make_library(config.files, config.file_bytes, seed)
    if placement is None:
        placement = det.place(config, library)
    schedule = det.deliver(config, placement, requests)
    log = BroadcastLog(schedule.packets)

    outcomes = []
    for user in range(config.users):
        cache = placement.user_cache(user)
        try:
            recovered = decode_deterministic_user(config, user, log, cache, requests)
            exact = recovered == library[requests[user]]
            outcomes.append(
                UserOutcome(
                    user,
                    requests[user],
                    ok=exact,
                    byte_exact=exact,
                    failure=None if exact else "byte mismatch",
                )
            )
        except InsufficientSymbolsError as exc:
            outcomes.append(
                UserOutcome(
                    user, requests[user], ok=False, byte_exact=False, failure=str(exc)
                )
            )
    return DecodeReport(
        scheme="det",
        config=config,
        requests=tuple(requests),
        seed=seed,
        mode=PAYLOAD_MODE,
        per_user=tuple(outcomes),
        empirical_rate=Fraction(schedule.total_bytes, config.padded_file_bytes),
        total_payload_bytes=schedule.total_bytes,
    )


def encode_library(config: rnd.RandConfig, library: Sequence[bytes]) -> list[np.ndarray]:
    """Pad, split into source symbols, and MDS-encode every file; returns one
    (code_length, symbol_bytes/2) uint16 matrix per file."""
    width = config.symbol_bytes
    coded = []
    for data in library:
        if len(data) != config.file_bytes:
            raise ParameterError(
                f"file of {len(data)} bytes does not match file_bytes={config.file_bytes}"
            )
        padded = bytes(data) + b"\x00" * (config.padded_file_bytes - len(data))
        source = [
            padded[i * width : (i + 1) * width] for i in range(config.source_symbols)
        ]
        symbols = mds_encode(source, config.code_length)
        coded.append(np.vstack([bytes_to_elements(s) for s in symbols]))
    return coded


def _block_payload_from_cache(
    cache: Mapping[int, tuple[np.ndarray, np.ndarray]],
    part: rnd.BlockRef,
    start: int,
    stop: int,
) -> bytes:
    indices, rows = cache[part.file_index]
    positions = np.searchsorted(indices, part.indices[start:stop])
    return rows[positions].astype("<u2").tobytes()


def decode_randomized_user(
    config: rnd.RandConfig,
    user: int,
    log: BroadcastLog,
    own_cache: Mapping[int, tuple[np.ndarray, np.ndarray]],
    requests: Sequence[int],
) -> tuple[dict[int, bytes], int]:
    """Extract every deliverable block of the user's requested file.

    ``own_cache`` maps file index to (sorted cached indices, payload rows).
    Returns (recovered symbol payloads by index, distinct available count).
    Packets are unpicked by XOR-ing out the segments of every other block in
    the packet, all of which the user caches by construction."""
    wanted = requests[user]
    width = config.symbol_bytes
    collected: dict[rnd.UserSubset, dict[int, bytes]] = {}
    block_for_subset: dict[rnd.UserSubset, rnd.BlockRef] = {}

    for packet in log.entries:
        mine = [p for p in packet.parts if p.destination == user]
        if not mine:
            continue
        part = mine[0]
        start, stop = rnd._segment_symbol_span(
            part.symbol_count, part.segment_count, part.segment_index
        )
        seg_len = (stop - start) * width
        if seg_len == 0:
            collected.setdefault(packet.subset, {})[part.segment_index] = b""
            block_for_subset[packet.subset] = part
            continue
        acc = int.from_bytes(packet.payload, "big")
        pad_to = len(packet.payload)
        for other in packet.parts:
            if other.destination == user:
                continue
            o_start, o_stop = rnd._segment_symbol_span(
                other.symbol_count, other.segment_count, other.segment_index
            )
            if o_stop <= o_start:
                continue
            chunk = _block_payload_from_cache(own_cache, other, o_start, o_stop)
            chunk += b"\x00" * (pad_to - len(chunk))
            acc ^= int.from_bytes(chunk, "big")
        segment = acc.to_bytes(pad_to, "big")[:seg_len]
        collected.setdefault(packet.subset, {})[part.segment_index] = segment
        block_for_subset[packet.subset] = part

    recovered: dict[int, bytes] = {}
    for subset, segments in collected.items():
        ref = block_for_subset[subset]
        if len(segments) != ref.segment_count or ref.file_index != wanted:
            continue
        blob = b"".join(segments[i] for i in range(ref.segment_count))
        blob = blob[: ref.symbol_count * width]
        for offset, index in enumerate(ref.indices.tolist()):
            recovered[index] = blob[offset * width : (offset + 1) * width]

    own_indices = own_cache[wanted][0]
    available = len(set(own_indices.tolist()) | set(recovered))
    return recovered, available


def run_randomized(
    config: rnd.RandConfig,
    requests: Sequence[int],
    mode: str = INDEX_MODE,
    library: Sequence[bytes] | None = None,
    placement: rnd.RandPlacement | None = None,
) -> DecodeReport:
    """Full randomized pipeline for one request vector.

    Index-only mode counts distinct coded-symbol indices each user ends up
    with (own cache plus completely received blocks) and calls the run good
    when every count reaches ``source_symbols``.  Payload mode carries real
    bytes end to end and checks byte-exact reconstruction through the erasure
    decoder."""
    if mode not in (INDEX_MODE, PAYLOAD_MODE):
        raise ParameterError(f"mode must be '{INDEX_MODE}' or '{PAYLOAD_MODE}'")
    if placement is None:
        placement = rnd.place(config)
    source = config.source_symbols

    if mode == INDEX_MODE:
        packets = rnd.deliver(config, placement, requests, None)
        log = BroadcastLog(tuple(packets))
        outcomes = []
        for user in range(config.users):
            available = _count_available(config, placement, user, log, requests)
            outcomes.append(
                UserOutcome(
                    user,
                    requests[user],
                    ok=available >= source,
                    symbols_available=available,
                    failure=None
                    if available >= source
                    else f"{available} of {source} symbols",
                )
            )
        total_symbols = sum(p.payload_symbols for p in packets)
        return DecodeReport(
            scheme="rand",
            config=config,
            requests=tuple(requests),
            seed=config.seed,
            mode=mode,
            per_user=tuple(outcomes),
            empirical_rate=Fraction(total_symbols, source),
            total_payload_bytes=total_symbols * config.symbol_bytes,
        )

    if library is None:
        library = make_library(config.files, config.file_bytes, config.seed)
    coded = encode_library(config, library)
    packets = rnd.deliver(config, placement, requests, coded)
    log = BroadcastLog(tuple(packets))
    code = MdsCode(source, config.code_length)
    width = config.symbol_bytes

    outcomes = []
    for user in range(config.users):
        own_cache = {
            f: (
                placement.cached_indices(user, f),
                coded[f][placement.cached_indices(user, f)],
            )
            for f in range(config.files)
        }
        recovered, available = decode_randomized_user(
            config, user, log, own_cache, requests
        )
        wanted = requests[user]
        if available < source:
            outcomes.append(
                UserOutcome(
                    user,
                    wanted,
                    ok=False,
                    byte_exact=False,
                    symbols_available=available,
                    failure=f"{available} of {source} symbols",
                )
            )
            continue
        own_indices, own_rows = own_cache[wanted]
        pairs = [
            (int(idx), row.astype("<u2").tobytes())
            for idx, row in zip(own_indices.tolist(), own_rows)
        ]
        pairs.extend(recovered.items())
        try:
            decoded = mds_decode(pairs, code)
        except InsufficientSymbolsError as exc:
            outcomes.append(
                UserOutcome(
                    user, wanted, ok=False, byte_exact=False,
                    symbols_available=available, failure=str(exc),
                )
            )
            continue
        blob = b"".join(decoded)[: config.file_bytes]
        exact = blob == library[wanted]
        outcomes.append(
            UserOutcome(
                user,
                wanted,
                ok=exact,
                byte_exact=exact,
                symbols_available=available,
                failure=None if exact else "byte mismatch",
            )
        )
    total_bytes = sum(len(p.payload) for p in packets)
    return DecodeReport(
        scheme="rand",
        config=config,
        requests=tuple(requests),
        seed=config.seed,
        mode=mode,
        per_user=tuple(outcomes),
        empirical_rate=Fraction(total_bytes, config.padded_file_bytes),
        total_payload_bytes=total_bytes,
    )


def _count_available(
    config: rnd.RandConfig,
    placement: rnd.RandPlacement,
    user: int,
    log: BroadcastLog,
    requests: Sequence[int],
) -> int:
    """Distinct coded symbols of the user's file after delivery: the cached
    ones plus every completely received block.  Blocks of one file are
    disjoint (they come from an exclusivity partition) and never overlap the
    user's own cache, so sizes add exactly."""
    wanted = requests[user]
    seen: dict[rnd.UserSubset, set[int]] = {}
    sizes: dict[rnd.UserSubset, tuple[int, int]] = {}
    for packet in log.entries:
        for part in packet.parts:
            if part.destination != user or part.file_index != wanted:
                continue
            seen.setdefault(packet.subset, set()).add(part.segment_index)
            sizes[packet.subset] = (part.symbol_count, part.segment_count)
    total = len(placement.cached_indices(user, wanted))
    for subset, segments in seen.items():
        count, needed = sizes[subset]
        if len(segments) == needed:
            total += count
    return total


@dataclass(frozen=True)
class WorstCaseReport:
    """Result of sweeping request vectors for the worst failure behavior."""

    worst_failure_fraction: float
    vectors_checked: int
    min_symbol_margin: int | None


def worst_case_error(
    config: Union[det.DetConfig, rnd.RandConfig],
    request_sample: Union[str, int] = "all",
    seeds: Sequence[int] = (0,),
    mode: str = INDEX_MODE,
    exhaustive_limit: int = 4096,
) -> WorstCaseReport:
    """Maximum failure behavior over request vectors.

    Enumerates all ``files**users`` vectors when that is within
    ``exhaustive_limit`` (or when ``request_sample`` is ``"all"``); otherwise
    draws ``request_sample`` vectors uniformly.  Deterministic runs score a
    vector 0 or 1; randomized runs score the failure frequency over
    ``seeds``."""
    space = config.files**config.users
    if request_sample == "all" and space <= exhaustive_limit:
        vectors = itertools.product(range(config.files), repeat=config.users)
        count = space
    else:
        count = request_sample if isinstance(request_sample, int) else 200
        rng = np.random.default_rng([getattr(config, "seed", 0), 0x5EED])
        vectors = (
            tuple(int(x) for x in rng.integers(0, config.files, size=config.users))
            for _ in range(count)
        )

    worst = 0.0
    margin: int | None = None
    if isinstance(config, det.DetConfig):
        library = make_library(config.files, config.file_bytes, seeds[0])
        placement = det.place(config, library)
        for vector in vectors:
            report = run_deterministic(
                config, vector, seed=seeds[0], library=library, placement=placement
            )
            worst = max(worst, 0.0 if report.all_ok else 1.0)
        return WorstCaseReport(worst, count, None)

    for vector in vectors:
        failures = 0
        for seed in seeds:
            cfg = rnd.RandConfig(
                users=config.users,
                files=config.files,
                cache_size=config.cache_size,
                file_bytes=config.file_bytes,
                source_symbols=config.source_symbols,
                code_rate=config.code_rate,
                seed=seed,
                selfish=config.selfish,
            )
            report = run_randomized(cfg, vector, mode=mode)
            if not report.all_ok:
                failures += 1
            run_margin = report.min_symbol_margin
            if run_margin is not None:
                margin = run_margin if margin is None else min(margin, run_margin)
        worst = max(worst, failures / len(seeds))
    return WorstCaseReport(worst, count, margin)
