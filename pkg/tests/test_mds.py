import itertools

import numpy as np
import pytest

from d2dcache import gf16
from d2dcache.errors import InsufficientSymbolsError, ParameterError
from d2dcache.mds import (
    MdsCode,
    bytes_to_elements,
    elements_to_bytes,
    mds_decode,
    mds_encode,
)


def _payloads(k: int, width: int, seed: int) -> list[bytes]:
    rng = np.random.default_rng(seed)
    return [rng.bytes(width) for _ in range(k)]


def test_systematic_prefix():
    source = _payloads(5, 6, 0)
    coded = mds_encode(source, 9)
    assert coded[:5] == source
    assert all(len(c) == 6 for c in coded)


def test_every_erasure_pattern_decodes_small_grid():
    # any k of the n coded symbols must reproduce the source exactly
    for k, n in [(1, 3), (2, 3), (3, 5), (4, 6), (8, 12)]:
        source = _payloads(k, 4, k * 100 + n)
        coded = mds_encode(source, n)
        code = MdsCode(k, n)
        for chosen in itertools.combinations(range(n), k):
            received = [(i, coded[i]) for i in chosen]
            assert mds_decode(received, code) == source, (k, n, chosen)


def test_oversupplied_symbols_still_decode():
    source = _payloads(4, 8, 3)
    coded = mds_encode(source, 10)
    code = MdsCode(4, 10)
    received = [(i, coded[i]) for i in (9, 2, 7, 5, 0, 3)]
    assert mds_decode(received, code) == source


def test_duplicate_consistent_symbols_tolerated_conflicts_rejected():
    source = _payloads(3, 4, 4)
    coded = mds_encode(source, 6)
    code = MdsCode(3, 6)
    received = [(4, coded[4]), (4, coded[4]), (1, coded[1]), (5, coded[5])]
    assert mds_decode(received, code) == source
    with pytest.raises(ParameterError):
        mds_decode([(4, coded[4]), (4, coded[5]), (1, coded[1])], code)


def test_insufficient_symbols_error():
    source = _payloads(4, 4, 5)
    coded = mds_encode(source, 8)
    code = MdsCode(4, 8)
    with pytest.raises(InsufficientSymbolsError):
        mds_decode([(0, coded[0]), (5, coded[5]), (6, coded[6])], code)


def test_code_is_linear():
    # the XOR of two codewords is the codeword of the XORed sources
    k, n, width = 4, 7, 6
    src_a = _payloads(k, width, 6)
    src_b = _payloads(k, width, 7)
    xor_src = [bytes(x ^ y for x, y in zip(a, b)) for a, b in zip(src_a, src_b)]
    coded_a = mds_encode(src_a, n)
    coded_b = mds_encode(src_b, n)
    coded_x = mds_encode(xor_src, n)
    for ca, cb, cx in zip(coded_a, coded_b, coded_x):
        assert bytes(x ^ y for x, y in zip(ca, cb)) == cx


def test_scaling_source_scales_codeword():
    k, n = 3, 6
    source = _payloads(k, 4, 8)
    factor = 0x7A31
    scaled_source = [
        elements_to_bytes(gf16.scale_vector(factor, bytes_to_elements(p)))
        for p in source
    ]
    coded = mds_encode(source, n)
    scaled_coded = mds_encode(scaled_source, n)
    for c, sc in zip(coded, scaled_coded):
        assert elements_to_bytes(gf16.scale_vector(factor, bytes_to_elements(c))) == sc


def test_large_code_roundtrip():
    source = _payloads(100, 2, 9)
    coded = mds_encode(source, 228)
    assert mds_decode(list(zip(range(128, 228), coded[128:228])), MdsCode(100, 228)) == source


def test_parameter_validation():
    with pytest.raises(ParameterError):
        MdsCode(0, 5)
    with pytest.raises(ParameterError):
        MdsCode(6, 5)
    with pytest.raises(ParameterError):
        MdsCode(2, 1 << 16)  # beyond the field's usable evaluation points
    with pytest.raises(ParameterError):
        mds_encode([b"abc"], 2)  # odd width
    with pytest.raises(ParameterError):
        mds_encode([b"abcd", b"ab"], 3)  # ragged widths
    with pytest.raises(ParameterError):
        mds_decode([(9, b"ab")], MdsCode(1, 4))  # index out of range


def test_byte_element_roundtrip():
    data = bytes(range(16))
    assert elements_to_bytes(bytes_to_elements(data)) == data
    # little-endian element order
    assert bytes_to_elements(b"\x01\x02")[0] == 0x0201
