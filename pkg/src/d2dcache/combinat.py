"""Subset enumeration and ranking utilities.

User groups are represented throughout the package as strictly increasing
tuples of 0-based indices.  All enumeration is in lexicographic order, and
ranking/unranking follow that same order, so a subset's rank is its position
in ``enumerate_subsets``.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence, Tuple

UserSubset = Tuple[int, ...]


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient with the out-of-range convention.

    Returns 0 when ``k < 0`` or ``k > n``; ``n`` must be non-negative.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def enumerate_subsets(ground_size: int, subset_size: int) -> Iterator[UserSubset]:
    """Yield all ``subset_size``-subsets of ``range(ground_size)`` in
    lexicographic order."""
    if ground_size < 0:
        raise ValueError(f"ground_size must be non-negative, got {ground_size}")
    if subset_size < 0:
        raise ValueError(f"subset_size must be non-negative, got {subset_size}")
    return iter(itertools.combinations(range(ground_size), subset_size))


def validate_subset(members: Sequence[int], ground_size: int) -> UserSubset:
    """Return ``members`` as a tuple after checking it is a strictly
    increasing sequence inside ``range(ground_size)``."""
    subset = tuple(members)
    for a, b in zip(subset, subset[1:]):
        if a >= b:
            raise ValueError(f"subset {subset} is not strictly increasing")
    if subset and (subset[0] < 0 or subset[-1] >= ground_size):
        raise ValueError(f"subset {subset} not contained in range({ground_size})")
    return subset


def subset_rank(members: Sequence[int], ground_size: int) -> int:
    """Position of ``members`` in the lexicographic enumeration of all
    ``len(members)``-subsets of ``range(ground_size)``."""
    subset = validate_subset(members, ground_size)
    k = len(subset)
    rank = 0
    prev = -1
    for pos, element in enumerate(subset):
        for skipped in range(prev + 1, element):
            rank += binomial(ground_size - 1 - skipped, k - 1 - pos)
        prev = element
    return rank


def subset_unrank(rank: int, ground_size: int, subset_size: int) -> UserSubset:
    """Inverse of :func:`subset_rank`: the subset at lexicographic position
    ``rank`` among all ``subset_size``-subsets of ``range(ground_size)``."""
    total = binomial(ground_size, subset_size)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} out of range for C({ground_size},{subset_size})={total}")
    members = []
    candidate = 0
    remaining = subset_size
    while remaining > 0:
        below = binomial(ground_size - 1 - candidate, remaining - 1)
        if rank < below:
            members.append(candidate)
            remaining -= 1
        else:
            rank -= below
        candidate += 1
    return tuple(members)
