"""Systematic maximum-distance-separable erasure code over GF(2^16).

A code with ``k`` source symbols and ``n`` coded symbols treats the source
payloads, column by column, as the values of a degree-(k-1) polynomial at the
field points 0..k-1 and defines coded symbol ``j`` as the value at point
``j``.  The first ``k`` coded symbols therefore equal the source symbols, any
coded symbol can be regenerated from its index alone, and any ``k`` distinct
coded symbols determine the polynomial, hence the source.

Payloads are byte strings of one common even width; every pair of bytes is
one little-endian field element, and the code acts on each element position
independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gf16
from .errors import InsufficientSymbolsError, ParameterError

MAX_CODED_SYMBOLS = (1 << 16) - 1


@dataclass(frozen=True)
class MdsCode:
    """Code parameters: evaluation points are 0..n-1, source points 0..k-1."""

    source_count: int
    coded_count: int

    def __post_init__(self) -> None:
        if not 1 <= self.source_count <= self.coded_count:
            raise ParameterError(
                f"need 1 <= k <= n, got k={self.source_count} n={self.coded_count}"
            )
        if self.coded_count > MAX_CODED_SYMBOLS:
            raise ParameterError(
                f"n={self.coded_count} exceeds the field's {MAX_CODED_SYMBOLS} usable points"
            )


def bytes_to_elements(payload: bytes) -> np.ndarray:
    """View an even-width payload as a vector of little-endian field elements."""
    if len(payload) % 2 != 0:
        raise ParameterError(f"payload width {len(payload)} is not a multiple of 2")
    return np.frombuffer(payload, dtype="<u2").astype(np.uint16)


def elements_to_bytes(elements: np.ndarray) -> bytes:
    return elements.astype("<u2").tobytes()


def _as_matrix(payloads: Sequence[bytes]) -> np.ndarray:
    widths = {len(p) for p in payloads}
    if len(widths) != 1:
        raise ParameterError(f"payload widths differ: {sorted(widths)}")
    return np.vstack([bytes_to_elements(p) for p in payloads])


def _lagrange_denominators(points: np.ndarray) -> np.ndarray:
    """denominator[i] = product over m != i of (points[i] ^ points[m])."""
    count = len(points)
    if count == 1:
        return np.ones(1, dtype=np.uint16)
    table = points[:, None] ^ points[None, :]
    off_diagonal = table[~np.eye(count, dtype=bool)].reshape(count, count - 1)
    return gf16.exp_vector(gf16.log_vector(off_diagonal).sum(axis=1))


def _interpolation_row(
    target: int, points: np.ndarray, denominator_logs: np.ndarray
) -> np.ndarray:
    """Coefficients c with value(target) = sum_i c[i] * value(points[i]),
    valid when ``target`` is not itself one of ``points``."""
    diff_logs = gf16.log_vector(points ^ np.uint16(target))
    master_log = int(diff_logs.sum() % gf16.GROUP_ORDER)
    return gf16.exp_vector(master_log - diff_logs - denominator_logs)


def _combine(rows: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    scaled = gf16.multiply_vectors(
        np.asarray(coefficients, dtype=np.uint16)[:, None], rows
    )
    return np.bitwise_xor.reduce(scaled, axis=0)


def mds_encode(source: Sequence[bytes], coded_count: int) -> list[bytes]:
    """Encode ``k`` equal-width source payloads into ``coded_count`` coded
    payloads whose first ``k`` entries are the source itself."""
    code = MdsCode(len(source), coded_count)
    matrix = _as_matrix(source)
    k = code.source_count
    coded = [bytes(p) for p in source]
    if coded_count == k:
        return coded
    source_points = np.arange(k, dtype=np.uint16)
    denom_logs = gf16.log_vector(_lagrange_denominators(source_points))
    for j in range(k, coded_count):
        row = _interpolation_row(j, source_points, denom_logs)
        coded.append(elements_to_bytes(_combine(matrix, row)))
    return coded


def mds_decode(received: Sequence[tuple[int, bytes]], code: MdsCode) -> list[bytes]:
    """Recover the ``k`` source payloads from any ``k`` distinct coded
    symbols, given as (index, payload) pairs.

    When more than ``k`` symbols are supplied, the ``k`` with the smallest
    indices are used.  Raises :class:`InsufficientSymbolsError` when fewer
    than ``k`` distinct valid indices are present; that error is the decode
    failure signal."""
    k = code.source_count
    seen: dict[int, bytes] = {}
    for index, payload in received:
        if not 0 <= index < code.coded_count:
            raise ParameterError(f"symbol index {index} outside [0, {code.coded_count})")
        if index in seen:
            if seen[index] != payload:
                raise ParameterError(f"conflicting payloads for symbol {index}")
            continue
        seen[index] = bytes(payload)
    if len(seen) < k:
        raise InsufficientSymbolsError(
            f"have {len(seen)} distinct symbols, need {k}"
        )
    chosen = sorted(seen)[:k]
    points = np.array(chosen, dtype=np.uint16)
    matrix = _as_matrix([seen[i] for i in chosen])

    known = {int(p): row for p, row in zip(points, matrix)}
    denom_logs: np.ndarray | None = None
    out: list[bytes] = []
    for s in range(k):
        if s in known:
            out.append(elements_to_bytes(known[s]))
            continue
        if denom_logs is None:
            denom_logs = gf16.log_vector(_lagrange_denominators(points))
        row = _interpolation_row(s, points, denom_logs)
        out.append(elements_to_bytes(_combine(matrix, row)))
    return out
