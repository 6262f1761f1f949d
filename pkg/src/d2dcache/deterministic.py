"""Deterministic caching with device-to-device XOR delivery.

Placement splits every file into ``t * C(K, t)`` equal subfiles, where
``t = M*K/N`` must be an integer in [1, K-1]: one group of ``t`` subfiles per
``t``-subset of users, cached by exactly that subset, with the ``j``-th
subfile of a group owned by the group's ``j``-th smallest member.

Delivery walks all ``(t+1)``-subsets of users in lexicographic order.  Inside
a subset, every willing (non-selfish) member multicasts one XOR packet built
from its owned subfile copies; selfish members never transmit, so willing
members additionally *stand in* for them in ascending-index batches, and one
further willing member completes each batch by sending the subfiles the
stand-ins gave up.  The schedule tolerates at most ``t - 1`` selfish users.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

from .combinat import UserSubset, binomial, subset_rank, validate_subset
from .errors import (
    ParameterError,
    ToleranceExceededError,
    TrivialCachingError,
    UnsupportedParameterError,
)

EXCHANGE = "exchange"
STAND_IN = "stand_in"
COMPENSATION = "compensation"


def replication_factor(users: int, files: int, cache_size: int) -> int:
    """Number of users holding each subfile: ``cache_size * users / files``.

    Raises :class:`UnsupportedParameterError` if that is not an integer or is
    below 1, and :class:`TrivialCachingError` if every user can cache the
    whole library (factor >= ``users``)."""
    if users < 2 or files < 1 or cache_size < 1:
        raise ParameterError(
            f"need users >= 2, files >= 1, cache_size >= 1; "
            f"got {users}, {files}, {cache_size}"
        )
    if (cache_size * users) % files != 0:
        raise UnsupportedParameterError(
            f"cache_size*users/files = {cache_size * users}/{files} is not an integer"
        )
    factor = (cache_size * users) // files
    if factor >= users:
        raise TrivialCachingError(
            f"replication factor {factor} >= {users} users: caches hold the whole library"
        )
    if factor < 1:
        raise UnsupportedParameterError(
            f"replication factor {factor} < 1: caches too small for this scheme"
        )
    return factor


class SubfileId(NamedTuple):
    """One subfile: of which file, replicated at which user group, and which
    group member owns this copy slot."""

    file_index: int
    group: UserSubset
    owner: int


class Packet(NamedTuple):
    """One multicast transmission: XOR of the listed subfiles."""

    sender: int
    terms: tuple[SubfileId, ...]
    payload: bytes
    kind: str  # EXCHANGE, STAND_IN or COMPENSATION
    covered_user: int | None  # selfish user a STAND_IN packet substitutes for


@dataclass(frozen=True)
class DetConfig:
    """Parameters of a deterministic-scheme run.

    ``selfish`` lists users that never transmit; it may hold at most
    ``replication_factor - 1`` of them."""

    users: int
    files: int
    cache_size: int
    file_bytes: int
    selfish: UserSubset = ()

    def __post_init__(self) -> None:
        factor = replication_factor(self.users, self.files, self.cache_size)
        canonical = tuple(sorted(self.selfish))
        if len(set(canonical)) != len(canonical):
            raise ParameterError(f"selfish set {canonical} has repeated members")
        try:
            object.__setattr__(self, "selfish", validate_subset(canonical, self.users))
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        if self.file_bytes < 1:
            raise ParameterError(f"file_bytes must be positive, got {self.file_bytes}")
        if len(self.selfish) > factor - 1:
            raise ToleranceExceededError(
                f"{len(self.selfish)} selfish users exceed the tolerable "
                f"maximum {factor - 1} for replication factor {factor}"
            )

    @property
    def replication(self) -> int:
        return (self.cache_size * self.users) // self.files

    @property
    def subfiles_per_file(self) -> int:
        return self.replication * binomial(self.users, self.replication)

    @property
    def padded_file_bytes(self) -> int:
        count = self.subfiles_per_file
        return -(-self.file_bytes // count) * count

    @property
    def subfile_bytes(self) -> int:
        return self.padded_file_bytes // self.subfiles_per_file

    def groups(self) -> Iterator[UserSubset]:
        """All subfile groups (``t``-subsets of users) in lexicographic order."""
        return iter(itertools.combinations(range(self.users), self.replication))

    def willing(self) -> tuple[int, ...]:
        return tuple(u for u in range(self.users) if u not in self.selfish)


def subfile_position(config: DetConfig, subfile: SubfileId) -> int:
    """Index of a subfile inside its padded file, in canonical order:
    groups lexicographically, owners ascending within a group."""
    rank = subset_rank(subfile.group, config.users)
    return rank * config.replication + subfile.group.index(subfile.owner)


@dataclass(frozen=True)
class DetPlacement:
    """Padded library plus the cache contents implied by the config."""

    config: DetConfig
    padded_library: tuple[bytes, ...] = field(repr=False)

    def subfile_payload(self, subfile: SubfileId) -> bytes:
        width = self.config.subfile_bytes
        start = subfile_position(self.config, subfile) * width
        return self.padded_library[subfile.file_index][start : start + width]

    def cached_ids(self, user: int) -> Iterator[SubfileId]:
        """All subfiles stored at ``user``, every file."""
        cfg = self.config
        others = [u for u in range(cfg.users) if u != user]
        for file_index in range(cfg.files):
            for rest in itertools.combinations(others, cfg.replication - 1):
                group = tuple(sorted((*rest, user)))
                for owner in group:
                    yield SubfileId(file_index, group, owner)

    def user_cache(self, user: int) -> dict[SubfileId, bytes]:
        return {sid: self.subfile_payload(sid) for sid in self.cached_ids(user)}


def place(config: DetConfig, library: Sequence[bytes]) -> DetPlacement:
    """Zero-pad each file to a whole number of subfiles and record the layout."""
    if len(library) != config.files:
        raise ParameterError(f"library has {len(library)} files, expected {config.files}")
    padded = []
    for data in library:
        if len(data) != config.file_bytes:
            raise ParameterError(
                f"file of {len(data)} bytes does not match file_bytes={config.file_bytes}"
            )
        padded.append(bytes(data) + b"\x00" * (config.padded_file_bytes - len(data)))
    return DetPlacement(config, tuple(padded))


def _xor_payload(placement: DetPlacement, terms: Sequence[SubfileId]) -> bytes:
    width = placement.config.subfile_bytes
    acc = 0
    for term in terms:
        acc ^= int.from_bytes(placement.subfile_payload(term), "big")
    return acc.to_bytes(width, "big")


@dataclass(frozen=True)
class Schedule:
    """Ordered packet list produced by :func:`deliver`."""

    packets: tuple[Packet, ...]
    subfile_bytes: int

    @property
    def total_bytes(self) -> int:
        return sum(len(p.payload) for p in self.packets)


def schedule_rate(schedule: Schedule, file_bytes: int) -> Fraction:
    """Transmitted bytes as an exact fraction of one file."""
    if file_bytes < 1:
        raise ParameterError(f"file_bytes must be positive, got {file_bytes}")
    return Fraction(schedule.total_bytes, file_bytes)


def deliver(
    config: DetConfig, placement: DetPlacement, requests: Sequence[int]
) -> Schedule:
    """Build the full delivery schedule for one request vector.

    Every ``(t+1)``-subset contributes, in order: one exchange packet per
    willing member (ascending), then compensation rounds while selfish
    members remain uncovered.  Each round pairs the lowest uncovered selfish
    members with the lowest willing members as stand-ins and ends with a
    completion packet from the next willing member."""
    _validate_requests(config, requests)
    replication = config.replication
    packets: list[Packet] = []
    for subset in itertools.combinations(range(config.users), replication + 1):
        willing = [u for u in subset if u not in config.selfish]
        passive = [u for u in subset if u in config.selfish]

        for sender in willing:
            terms = tuple(
                SubfileId(requests[k], _without(subset, k), sender)
                for k in subset
                if k != sender
            )
            packets.append(
                Packet(sender, terms, _xor_payload(placement, terms), EXCHANGE, None)
            )

        pending = passive
        while pending:
            batch = pending[: len(willing) - 1]
            stand_ins = willing[: len(batch)]
            for sender, covered in zip(stand_ins, batch):
                terms = tuple(
                    SubfileId(requests[k], _without(subset, k), covered)
                    for k in subset
                    if k != covered and k != sender
                )
                packets.append(
                    Packet(
                        sender, terms, _xor_payload(placement, terms), STAND_IN, covered
                    )
                )
            completer = willing[len(batch)]
            terms = tuple(
                SubfileId(requests[sender], _without(subset, sender), covered)
                for sender, covered in zip(stand_ins, batch)
            )
            packets.append(
                Packet(
                    completer, terms, _xor_payload(placement, terms), COMPENSATION, None
                )
            )
            pending = pending[len(batch) :]
    return Schedule(tuple(packets), config.subfile_bytes)


def _without(subset: Sequence[int], member: int) -> UserSubset:
    return tuple(u for u in subset if u != member)


def _validate_requests(config: DetConfig, requests: Sequence[int]) -> None:
    if len(requests) != config.users:
        raise ParameterError(
            f"request vector length {len(requests)} != {config.users} users"
        )
    for user, file_index in enumerate(requests):
        if not 0 <= file_index < config.files:
            raise ParameterError(
                f"user {user} requests file {file_index} outside [0, {config.files})"
            )
