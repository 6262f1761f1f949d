import itertools
import math

import numpy as np
import pytest

from d2dcache import randomized as rnd
from d2dcache.errors import (
    InfeasibleError,
    ParameterError,
    UnsupportedParameterError,
)


def _config(users=5, files=5, cache=2, file_bytes=400, symbols=200, rate=0.5,
            seed=0, selfish=()):
    return rnd.RandConfig(
        users=users, files=files, cache_size=cache, file_bytes=file_bytes,
        source_symbols=symbols, code_rate=rate, seed=seed, selfish=selfish,
    )


def test_config_validation():
    cfg = _config()
    assert cfg.code_length == 400
    assert cfg.cached_per_file == 80
    assert cfg.symbol_bytes == 2  # 2 * ceil(400 / 400)
    with pytest.raises(UnsupportedParameterError):
        _config(files=3)  # M*I/N not an integer
    with pytest.raises(InfeasibleError):
        _config(users=3, files=8, cache=2, symbols=800)  # M(K-S) <= N
    with pytest.raises(ParameterError):
        _config(rate=0.0)
    with pytest.raises(ParameterError):
        _config(rate=1.2)
    with pytest.raises(ParameterError):
        _config(users=64)  # beyond the 63-user bitmask packing
    with pytest.raises(ParameterError):
        _config(selfish=(0, 0))


def test_placement_sizes_and_determinism():
    cfg = _config(seed=11)
    placement = rnd.place(cfg)
    again = rnd.place(cfg)
    for user in range(cfg.users):
        for file_index in range(cfg.files):
            indices = placement.cached_indices(user, file_index)
            assert len(indices) == cfg.cached_per_file
            assert len(np.unique(indices)) == len(indices)
            assert indices.min() >= 0 and indices.max() < cfg.code_length
            assert list(indices) == sorted(indices)
            assert np.array_equal(indices, again.cached_indices(user, file_index))
    # different seed, different draw
    other = rnd.place(_config(seed=12))
    assert not all(
        np.array_equal(
            placement.cached_indices(u, f), other.cached_indices(u, f)
        )
        for u in range(cfg.users)
        for f in range(cfg.files)
    )


def test_exclusivity_partition_is_exact():
    cfg = _config(users=4, files=4, cache=2, symbols=100, rate=0.5, seed=3)
    placement = rnd.place(cfg)
    n = cfg.code_length
    for file_index in range(cfg.files):
        partition = rnd.exclusivity_partition(placement, file_index)
        holders_of = {
            idx: frozenset(
                u for u in range(cfg.users)
                if idx in set(placement.cached_indices(u, file_index).tolist())
            )
            for idx in range(n)
        }
        total = 0
        seen = set()
        for subset, indices in partition.items():
            total += len(indices)
            assert list(indices) == sorted(indices)
            for idx in indices:
                assert holders_of[idx] == frozenset(subset)
                assert idx not in seen
                seen.add(idx)
        assert total == n  # blocks partition all coded symbols exactly


def test_block_sizes_concentrate_around_expectation():
    # with I = 1e5 the exclusive-block sizes sit within 5 standard
    # deviations of the independent-inclusion expectation
    cfg = _config(users=4, files=4, cache=2, file_bytes=1000,
                  symbols=100_000, rate=0.8, seed=42)
    placement = rnd.place(cfg)
    n = cfg.code_length
    p_single = cfg.cached_per_file / n
    for holders in [(0,), (1, 2), (0, 1, 3), (0, 1, 2, 3)]:
        i = len(holders)
        p_block = p_single**i * (1 - p_single) ** (cfg.users - i)
        expected = n * p_block
        sigma = math.sqrt(n * p_block * (1 - p_block))
        size = placement.block_size(0, holders)
        assert abs(size - expected) <= 5 * sigma, (holders, size, expected)


def test_xor_zero_pad():
    assert rnd.xor_zero_pad([b"\x01\x02", b"\x03"]) == b"\x02\x02"
    assert rnd.xor_zero_pad([b"\xff"]) == b"\xff"
    assert rnd.xor_zero_pad([b"", b""]) == b""
    with pytest.raises(ParameterError):
        rnd.xor_zero_pad([])


def _packets_for_subset(packets, subset):
    return [p for p in packets if p.subset == subset]


def test_full_subset_segment_assignment_with_two_selfish():
    # 5 users, 0 and 1 selfish: in the full subset the three willing members
    # split every block into two segments; the lowest willing member stands
    # in as the excluded transmitter for selfish destinations
    cfg = _config(users=5, files=5, cache=2, symbols=200, rate=0.5,
                  seed=7, selfish=(0, 1))
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (0, 1, 2, 3, 4))
    full = _packets_for_subset(packets, (0, 1, 2, 3, 4))
    assert [p.sender for p in full] == [2, 3, 4]
    carried = {p.sender: sorted(part.destination for part in p.parts) for p in full}
    assert carried == {2: [3, 4], 3: [0, 1, 2, 4], 4: [0, 1, 2, 3]}
    for packet in full:
        for part in packet.parts:
            assert part.segment_count == 2
            assert part.holders == tuple(
                u for u in (0, 1, 2, 3, 4) if u != part.destination
            )
    # ascending transmitter order fixes the segment index
    by_dest = {
        (p.sender, part.destination): part.segment_index
        for p in full
        for part in p.parts
    }
    assert by_dest[(3, 2)] == 0 and by_dest[(4, 2)] == 1
    assert by_dest[(2, 3)] == 0 and by_dest[(4, 3)] == 1
    assert by_dest[(2, 4)] == 0 and by_dest[(3, 4)] == 1
    assert by_dest[(3, 0)] == 0 and by_dest[(4, 0)] == 1
    assert by_dest[(3, 1)] == 0 and by_dest[(4, 1)] == 1


def test_sole_willing_member_sends_whole_blocks():
    # subsets whose willing membership is a single user fall back to one
    # packet carrying every other member's block in full
    cfg = _config(users=4, files=4, cache=3, symbols=100, rate=0.5,
                  seed=5, selfish=(0, 1))
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (0, 1, 2, 3))
    solo = _packets_for_subset(packets, (0, 1, 2))
    assert [p.sender for p in solo] == [2]
    assert sorted(part.destination for part in solo[0].parts) == [0, 1]
    for part in solo[0].parts:
        assert part.segment_count == 1 and part.segment_index == 0


def test_all_selfish_subsets_are_skipped_and_empty_network_rejected():
    cfg = _config(users=4, files=4, cache=3, symbols=100, rate=0.5, selfish=(0, 1))
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (0, 1, 2, 3))
    assert (0, 1) not in {p.subset for p in packets}
    # a network with nobody willing to transmit cannot be configured at all
    with pytest.raises(InfeasibleError):
        _config(users=4, files=4, cache=3, symbols=100, rate=0.5,
                selfish=(0, 1, 2, 3))


def test_transmitter_caches_everything_it_sends():
    cfg = _config(users=4, files=4, cache=2, symbols=100, rate=0.5, seed=9,
                  selfish=(3,))
    placement = rnd.place(cfg)
    coded = [
        np.arange(cfg.code_length * s, cfg.code_length * (s + 1), dtype=np.uint16)
        .reshape(cfg.code_length, 1)
        for s in range(cfg.files)
    ]
    packets = rnd.deliver(cfg, placement, (3, 2, 1, 0), coded)
    for packet in packets:
        assert packet.sender not in cfg.selfish
        for part in packet.parts:
            assert part.destination != packet.sender
            assert packet.sender in part.holders
            cached = set(
                placement.cached_indices(packet.sender, part.file_index).tolist()
            )
            assert set(part.indices.tolist()) <= cached


def test_packet_volume_bound_per_subset():
    # every willing member sends one packet no longer than the ceil-split of
    # the subset's largest block
    cfg = _config(users=5, files=5, cache=2, symbols=500, rate=0.5, seed=13,
                  selfish=(1,))
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (4, 3, 2, 1, 0))
    for size in range(cfg.users, 1, -1):
        for subset in itertools.combinations(range(cfg.users), size):
            willing = [u for u in subset if u not in cfg.selfish]
            chunk = _packets_for_subset(packets, subset)
            if not willing:
                assert chunk == []
                continue
            assert len(chunk) == len(willing)
            largest = max(
                placement.block_size(part.file_index, part.holders)
                for p in chunk
                for part in p.parts
            )
            if len(willing) == 1:
                bound = largest
            else:
                bound = math.ceil(largest / (len(willing) - 1))
            for p in chunk:
                assert p.payload_symbols <= bound


def test_two_user_network_is_a_plain_exchange():
    cfg = _config(users=2, files=3, cache=2, symbols=90, rate=0.6, seed=2)
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (0, 1))
    assert [p.subset for p in packets] == [(0, 1), (0, 1)]
    assert {p.sender for p in packets} == {0, 1}
    for p in packets:
        assert len(p.parts) == 1
        assert p.parts[0].segment_count == 1


def test_index_only_run_carries_no_payload():
    cfg = _config(users=4, files=4, cache=2, symbols=100, rate=0.5, seed=1)
    placement = rnd.place(cfg)
    packets = rnd.deliver(cfg, placement, (0, 1, 2, 3), None)
    assert all(p.payload is None for p in packets)
    assert all(p.parts[0].indices is None for p in packets if p.parts)
    assert any(p.payload_symbols > 0 for p in packets)


def test_request_validation():
    cfg = _config(users=4, files=4, cache=2, symbols=100, rate=0.5)
    placement = rnd.place(cfg)
    with pytest.raises(ParameterError):
        rnd.deliver(cfg, placement, (0, 1, 2))
    with pytest.raises(ParameterError):
        rnd.deliver(cfg, placement, (0, 1, 2, 9))
