"""Arithmetic in GF(2^16).

Field elements are integers in [0, 65536).  Addition is XOR.  Multiplication
reduces modulo the irreducible polynomial

    x^16 + x^12 + x^3 + x + 1      (0x1100B)

for which x itself is a primitive element, so a single pair of log/exp tables
generated by x covers the whole multiplicative group.  The vector helpers
operate on numpy uint16 arrays so that symbol payloads can be processed
column-wise.
"""

from __future__ import annotations

import numpy as np

REDUCING_POLY = 0x1100B
ORDER = 1 << 16
GROUP_ORDER = ORDER - 1  # size of the multiplicative group


def _multiply_slow(a: int, b: int) -> int:
    """Bitwise carry-less multiply with reduction; used only to build tables."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & ORDER:
            a ^= REDUCING_POLY
    return result


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    # exp is doubled so that exp[log[a] + log[b]] never needs a modulo.
    exp = np.zeros(2 * GROUP_ORDER, dtype=np.uint16)
    log = np.zeros(ORDER, dtype=np.int32)
    value = 1
    for power in range(GROUP_ORDER):
        exp[power] = value
        log[value] = power
        value = _multiply_slow(value, 2)
    if value != 1:
        raise AssertionError("generator does not close the multiplicative group")
    exp[GROUP_ORDER:] = exp[:GROUP_ORDER]
    log[0] = -1  # sentinel; callers must special-case zero
    return exp, log


_EXP, _LOG = _build_tables()


def multiply(a: int, b: int) -> int:
    """Product of two field elements."""
    if a == 0 or b == 0:
        return 0
    return int(_EXP[int(_LOG[a]) + int(_LOG[b])])


def inverse(a: int) -> int:
    """Multiplicative inverse; raises on zero."""
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^16)")
    return int(_EXP[GROUP_ORDER - int(_LOG[a])])


def power(a: int, exponent: int) -> int:
    """``a`` raised to an arbitrary integer exponent."""
    if a == 0:
        if exponent < 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^16)")
        return 0 if exponent else 1
    return int(_EXP[(int(_LOG[a]) * exponent) % GROUP_ORDER])


def scale_vector(coefficient: int, vector: np.ndarray) -> np.ndarray:
    """Elementwise product of a scalar with a uint16 vector."""
    if coefficient == 0:
        return np.zeros_like(vector)
    if coefficient == 1:
        return vector.copy()
    shift = int(_LOG[coefficient])
    out = np.zeros_like(vector)
    nonzero = vector != 0
    out[nonzero] = _EXP[_LOG[vector[nonzero].astype(np.int64)] + shift]
    return out

def multiply_vectors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise (broadcasting) product of two uint16 arrays."""
    a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
    out = np.zeros(a.shape, dtype=np.uint16)
    nonzero = (a != 0) & (b != 0)
    out[nonzero] = _EXP[
        _LOG[a[nonzero].astype(np.int64)] + _LOG[b[nonzero].astype(np.int64)]
    ]
    return out


def log_vector(values: np.ndarray) -> np.ndarray:
    """Discrete logs (base x) of an array of nonzero elements."""
    values = np.asarray(values)
    if np.any(values == 0):
        raise ZeroDivisionError("0 has no discrete log in GF(2^16)")
    return _LOG[values.astype(np.int64)].astype(np.int64)


def exp_vector(logs: np.ndarray) -> np.ndarray:
    """x raised to each entry; exponents may be any integers."""
    return _EXP[np.asarray(logs, dtype=np.int64) % GROUP_ORDER]


def product(values: np.ndarray) -> int:
    """Product of all entries of a uint16 vector (0 if any entry is 0)."""
    values = np.asarray(values)
    if values.size == 0:
        return 1
    if np.any(values == 0):
        return 0
    total = int(_LOG[values.astype(np.int64)].sum() % GROUP_ORDER)
    return int(_EXP[total])
