"""Closed-form rates, decodability thresholds, and the converse bound.

Argument order is everywhere (users, files, cache_size, ...).  Cache sizes
may be fractional (int, Fraction, or an exactly-representable float) as long
as the derived replication factor ``users * cache_size / files`` is an
integer where one is required.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, expm1, log1p
from typing import Union

from .combinat import binomial
from .errors import (
    InfeasibleError,
    ParameterError,
    ToleranceExceededError,
    TrivialCachingError,
    UnsupportedParameterError,
)

Rational = Union[int, Fraction]


def _exact(value) -> Fraction:
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"expected a rational value, got {value!r}") from exc


def exact_replication_factor(users: int, files: int, cache_size) -> int:
    """Replication factor ``users * cache_size / files`` for possibly
    fractional cache sizes; errors mirror the placement-side validation."""
    if users < 2 or files < 1:
        raise ParameterError(f"need users >= 2 and files >= 1, got {users}, {files}")
    cache = _exact(cache_size)
    if cache <= 0:
        raise ParameterError(f"cache_size must be positive, got {cache_size}")
    factor = cache * users / files
    if factor.denominator != 1:
        raise UnsupportedParameterError(
            f"users*cache_size/files = {factor} is not an integer"
        )
    factor = int(factor)
    if factor >= users:
        raise TrivialCachingError(
            f"replication factor {factor} >= {users} users: caching is trivial"
        )
    if factor < 1:
        raise UnsupportedParameterError(f"replication factor {factor} < 1")
    return factor


def deterministic_rate(users: int, files: int, cache_size, selfish_count: int) -> Fraction:
    """Exact transmitted-fraction-of-a-file of the deterministic schedule.

    Sums, over the number ``i`` of selfish members inside a delivery subset,
    the subset count times the packets each such subset costs:
    ``t + 1 + ceil(i / (t - i))``."""
    factor = exact_replication_factor(users, files, cache_size)
    if not 0 <= selfish_count <= users:
        raise ParameterError(f"selfish_count {selfish_count} outside [0, {users}]")
    if selfish_count > factor - 1:
        raise ToleranceExceededError(
            f"{selfish_count} selfish users exceed the tolerable maximum {factor - 1}"
        )
    total = 0
    for inside in range(selfish_count + 1):
        subsets = binomial(selfish_count, inside) * binomial(
            users - selfish_count, factor + 1 - inside
        )
        if subsets == 0:
            continue
        packets = factor + 1
        if inside:
            packets += -(-inside // (factor - inside))  # integer ceiling
        total += subsets * packets
    return Fraction(total, factor * binomial(users, factor))


def expected_exclusive_block_size(
    users: int,
    files: int,
    cache_size,
    code_rate: float,
    holder_count: int,
    source_symbols: int,
) -> float:
    """Expected number of coded symbols of one file cached by exactly a given
    ``holder_count``-sized user set."""
    if not 0 <= holder_count <= users:
        raise ParameterError(f"holder_count {holder_count} outside [0, {users}]")
    prob = float(_exact(cache_size)) * code_rate / files
    if not 0.0 <= prob <= 1.0:
        raise ParameterError(f"per-symbol caching probability {prob} outside [0, 1]")
    return (
        prob**holder_count
        * (1.0 - prob) ** (users - holder_count)
        * source_symbols
        / code_rate
    )


def available_symbol_fraction(users: int, files: int, cache_size, code_rate: float) -> float:
    """Expected available coded symbols of a requested file, per source
    symbol, when the requester can draw on ``users`` caches: the union of all
    exclusivity blocks touching at least one of them."""
    return 1.0 - symbol_deficit(code_rate, users, files, cache_size)


def symbol_deficit(code_rate: float, users: int, files: int, cache_size) -> float:
    """Expected shortfall of available symbols per source symbol.

    Non-positive means the code is decodable in expectation.  Continuous on
    (0, 1]; the ``code_rate == 0`` limit ``1 - users*cache_size/files`` is
    returned for convenience."""
    cache = float(_exact(cache_size))
    if not 0.0 <= code_rate <= 1.0:
        raise ParameterError(f"code_rate must lie in [0, 1], got {code_rate}")
    if code_rate == 0.0:
        return 1.0 - users * cache / files
    prob = cache * code_rate / files
    if prob >= 1.0:
        return 1.0 - 1.0 / code_rate  # every symbol cached everywhere
    return expm1(users * log1p(-prob)) / code_rate + 1.0


def critical_code_rate(users: int, files: int, cache_size, tol: float = 1e-9) -> float:
    """Largest MDS code rate whose expected symbol deficit is zero, found by
    sign-bracketing bisection on (0, 1).

    Requires an aggregate cache bigger than the library
    (``users * cache_size > files``); raises :class:`InfeasibleError`
    otherwise.  Caches of at least one full library give rate 1."""
    cache = _exact(cache_size)
    if users < 1:
        raise ParameterError(f"users must be positive, got {users}")
    if users * cache <= files:
        raise InfeasibleError(
            f"aggregate cache {users}*{cache_size} files does not exceed "
            f"the {files}-file library"
        )
    if cache >= files:
        return 1.0
    lo, hi = 1e-12, 1.0
    if symbol_deficit(lo, users, files, cache) >= 0:
        raise InfeasibleError("no feasible rate bracket found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if symbol_deficit(mid, users, files, cache) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_code_rate_selfish(
    users: int, files: int, cache_size, selfish_count: int, tol: float = 1e-9
) -> float:
    """Critical rate when only ``users - selfish_count`` caches are reachable:
    the selfish members still cache but never transmit."""
    if not 0 <= selfish_count < users:
        raise ParameterError(
            f"selfish_count {selfish_count} outside [0, {users})"
        )
    return critical_code_rate(users - selfish_count, files, cache_size, tol=tol)


def subset_transmission_weight(subset_size: int, users: int, selfish_count: int) -> Fraction:
    """Combined transmission volume, in whole-block units, over all delivery
    subsets of a given size: mixed subsets pay the segment-split factor
    ``w/(w-1)`` in their count of willing members ``w``, and subsets with a
    single willing member pay one full block."""
    if subset_size < 2:
        raise ParameterError(f"subset_size must be at least 2, got {subset_size}")
    if not 0 <= selfish_count <= users:
        raise ParameterError(f"selfish_count {selfish_count} outside [0, {users}]")
    total = Fraction(0)
    for passive in range(subset_size - 1):
        willing = subset_size - passive
        count = binomial(selfish_count, passive) * binomial(
            users - selfish_count, willing
        )
        if count:
            total += count * Fraction(willing, willing - 1)
    total += (users - selfish_count) * binomial(selfish_count, subset_size - 1)
    return total


def randomized_rate(
    users: int, files: int, cache_size, selfish_count: int, code_rate: float
) -> float:
    """Expected transmitted fraction of a file under the randomized scheme at
    a given code rate, summing subset-size contributions weighted by the
    probability that a subset is exactly the holder set of a block."""
    if not 0.0 < code_rate <= 1.0:
        raise ParameterError(f"code_rate must lie in (0, 1], got {code_rate}")
    prob = float(_exact(cache_size)) * code_rate / files
    if not 0.0 < prob < 1.0:
        raise ParameterError(f"per-symbol caching probability {prob} outside (0, 1)")
    total = 0.0
    for size in range(2, users + 1):
        weight = float(subset_transmission_weight(size, users, selfish_count))
        total += weight * prob ** (size - 1) * (1.0 - prob) ** (users - size + 1)
    return total / code_rate


def cutset_lower_bound(users: int, files: int, cache_size) -> Fraction:
    """Converse bound on the delivery rate of any one-shot caching scheme,
    maximized over the first ``l`` users cut from the network."""
    cache = _exact(cache_size)
    best = Fraction(0)
    for cut in range(1, min(users, files) + 1):
        copies = files // cut
        if copies == 0:
            continue
        value = cut - Fraction(cut, copies) * cache
        if value > best:
            best = value
    return best


@dataclass(frozen=True)
class RatePoint:
    """One evaluated operating point, shaped like one CSV result row."""

    scheme: str
    users: int
    files: int
    cache_size: Rational
    selfish_count: int
    replication: int | None = None
    code_rate: float | None = None
    analytic_rate: float | Fraction | None = None
    empirical_rate: float | Fraction | None = None
    lower_bound: float | Fraction | None = None
    seed: int | None = None
    decode_success: bool | None = None
