import inspect
from fractions import Fraction

import pytest

from d2dcache import analytics as an
from d2dcache import harness
from d2dcache.deterministic import DetConfig
from d2dcache.errors import ParameterError
from d2dcache.randomized import RandConfig


def test_library_is_deterministic_and_seed_sensitive():
    a = harness.make_library(3, 100, 7)
    b = harness.make_library(3, 100, 7)
    c = harness.make_library(3, 100, 8)
    assert a == b
    assert a != c
    assert [len(f) for f in a] == [100, 100, 100]
    assert harness.library_digest(a) == harness.library_digest(b)
    assert harness.library_digest(a) != harness.library_digest(c)


def test_deterministic_end_to_end_with_two_selfish_users():
    # odd file size forces padding; recovery must still be byte-exact
    cfg = DetConfig(4, 4, 3, 997, (0, 1))
    report = harness.run_deterministic(cfg, (0, 1, 2, 3), seed=1)
    assert report.all_ok
    assert all(o.byte_exact for o in report.per_user)
    assert report.empirical_rate == Fraction(1, 2)
    assert report.scheme == "det"
    assert report.requests == (0, 1, 2, 3)


def test_deterministic_repeated_requests_decode():
    cfg = DetConfig(4, 4, 2, 500, (3,))
    report = harness.run_deterministic(cfg, (2, 2, 2, 2), seed=0)
    assert report.all_ok


def test_deterministic_worst_case_exhaustive_is_clean():
    # all 256 request vectors with two selfish users: every decode byte-exact
    cfg = DetConfig(4, 4, 3, 120, (0, 1))
    out = harness.worst_case_error(cfg, request_sample="all")
    assert out.worst_failure_fraction == 0.0
    assert out.vectors_checked == 256


def test_decoders_see_only_the_broadcast_log_and_own_cache():
    # the decode entry points take the shared log, one user's cache, and the
    # request vector; no placement or library parameter exists to leak through
    det_params = list(inspect.signature(harness.decode_deterministic_user).parameters)
    assert det_params == ["config", "user", "log", "own_cache", "requests"]
    rand_params = list(inspect.signature(harness.decode_randomized_user).parameters)
    assert rand_params == ["config", "user", "log", "own_cache", "requests"]


def _rand_cfg(symbols, rate, seed, file_bytes=1000):
    return RandConfig(
        users=5, files=5, cache_size=2, file_bytes=file_bytes,
        source_symbols=symbols, code_rate=rate, seed=seed, selfish=(0, 1),
    )


def test_randomized_index_mode_succeeds_below_break_even():
    root = an.critical_code_rate_selfish(5, 5, 2, 2)
    for seed in range(6):
        report = harness.run_randomized(
            _rand_cfg(2000, 0.8 * root, seed), (0, 1, 2, 3, 4), mode="index"
        )
        assert report.all_ok, report.per_user
        assert report.min_symbol_margin is not None
        assert report.min_symbol_margin >= 0
        # rate accounting: total symbols sent over source symbols
        assert report.empirical_rate == Fraction(
            report.total_payload_bytes // report.config.symbol_bytes, 2000
        )


def test_randomized_index_mode_fails_above_break_even():
    # a near-unit code rate leaves too few distinct symbols to recover
    report = harness.run_randomized(
        _rand_cfg(2000, 0.99, 0), (0, 1, 2, 3, 4), mode="index"
    )
    assert not report.all_ok
    assert report.min_symbol_margin < 0
    shortfalls = [o for o in report.per_user if not o.ok]
    assert all(o.symbols_available < 2000 for o in shortfalls)


def test_randomized_payload_mode_byte_exact_below_break_even():
    root = an.critical_code_rate_selfish(5, 5, 2, 2)
    report = harness.run_randomized(
        _rand_cfg(500, 0.8 * root, 4, file_bytes=997), (4, 3, 2, 1, 0),
        mode="payload",
    )
    assert report.all_ok
    assert all(o.byte_exact for o in report.per_user)
    assert report.mode == "payload"


def test_randomized_payload_and_index_modes_agree_on_availability():
    root = an.critical_code_rate_selfish(5, 5, 2, 2)
    cfg = _rand_cfg(400, 0.8 * root, 9, file_bytes=800)
    requests = (1, 1, 0, 3, 2)
    idx = harness.run_randomized(cfg, requests, mode="index")
    pay = harness.run_randomized(cfg, requests, mode="payload")
    assert [o.symbols_available for o in idx.per_user] == [
        o.symbols_available for o in pay.per_user
    ]


def test_randomized_repeated_requests_decode():
    root = an.critical_code_rate_selfish(5, 5, 2, 2)
    report = harness.run_randomized(
        _rand_cfg(400, 0.8 * root, 2, file_bytes=640), (3, 3, 3, 3, 3),
        mode="payload",
    )
    assert report.all_ok


def test_randomized_worst_case_reports_failures_at_barely_feasible_rate():
    # unit code rate with minimal feasibility margin cannot serve everyone
    cfg = RandConfig(
        users=3, files=2, cache_size=1, file_bytes=200,
        source_symbols=100, code_rate=1.0, seed=0, selfish=(),
    )
    out = harness.worst_case_error(cfg, request_sample="all", seeds=(0, 1, 2, 3))
    assert out.vectors_checked == 8
    assert out.worst_failure_fraction > 0.0
    assert out.min_symbol_margin is not None and out.min_symbol_margin < 0


def test_run_randomized_rejects_unknown_mode():
    with pytest.raises(ParameterError):
        harness.run_randomized(_rand_cfg(400, 0.4, 0), (0, 1, 2, 3, 4), mode="bytes")


def test_library_reuse_and_placement_reuse_change_nothing():
    cfg = DetConfig(5, 5, 2, 300, (2,))
    library = harness.make_library(5, 300, 0)
    import d2dcache.deterministic as det

    placement = det.place(cfg, library)
    direct = harness.run_deterministic(cfg, (0, 1, 2, 3, 4), seed=0)
    reused = harness.run_deterministic(
        cfg, (0, 1, 2, 3, 4), seed=0, library=library, placement=placement
    )
    assert direct.per_user == reused.per_user
    assert direct.empirical_rate == reused.empirical_rate
