"""Command-line front end: single runs, cache-size sweeps, and the two-curve
rate comparison sweep, exported as CSV plus an optional JSON run manifest.

CSV schema (one row per point and seed):

    scheme,K,N,M,S,t,r,analytic_rate,empirical_rate,lower_bound,seed,decode_success

K = users, N = files, M = per-user cache size in files, S = selfish count,
t = replication factor (deterministic rows), r = code rate (randomized rows).
Rate columns carry 6 significant digits; columns that do not apply to a row
are left empty.  Reruns with the same spec and seeds are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import analytics, harness
from .deterministic import DetConfig, replication_factor
from .errors import D2DCacheError, ParameterError
from .randomized import RandConfig

CSV_HEADER = "scheme,K,N,M,S,t,r,analytic_rate,empirical_rate,lower_bound,seed,decode_success"

REQUEST_STREAM = 0x7E9  # RNG substream tag for drawn request vectors

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved run description; every field JSON-serializable."""

    scheme: str | None = None
    users: int | None = None
    files: int | None = None
    cache: int | None = None
    cache_range: tuple[int, int, int] | None = None
    selfish: int = 0
    selfish_set: tuple[int, ...] | None = None
    requests: tuple[int, ...] | None = None
    request_policy: str = "uniform"
    symbols: int = 1000
    rate: str | float = "auto"
    seeds: tuple[int, ...] = (0,)
    mode: str = "index"
    file_size: int = 4096
    out: str | None = None
    manifest: str | None = None
    sweep_figure2: bool = False

    def selfish_users(self) -> tuple[int, ...]:
        if self.selfish_set is not None:
            return self.selfish_set
        return tuple(range(self.selfish))


def significant(value) -> str:
    """Decimal with 6 significant digits, trailing zeros kept."""
    return f"{float(value):#.6g}"


@dataclass(frozen=True)
class Row:
    fields: tuple[str, ...]
    verified: bool | None  # None for analytic-only rows
    point: dict  # manifest record: scheme, M, t, r

    def line(self) -> str:
        return ",".join(self.fields)


def _row(
    scheme: str,
    users: int,
    files: int,
    cache: int,
    selfish: int,
    repl: int | None,
    code_rate: float | None,
    analytic,
    empirical,
    lower,
    seed: int | None,
    success: bool | None,
) -> Row:
    fields = (
        scheme,
        str(users),
        str(files),
        str(cache),
        str(selfish),
        "" if repl is None else str(repl),
        "" if code_rate is None else significant(code_rate),
        "" if analytic is None else significant(analytic),
        "" if empirical is None else significant(empirical),
        "" if lower is None else significant(lower),
        "" if seed is None else str(seed),
        "" if success is None else ("true" if success else "false"),
    )
    point = {
        "scheme": scheme,
        "M": cache,
        "t": repl,
        "r": None if code_rate is None else float(code_rate),
        "seed": seed,
    }
    return Row(fields, success, point)


def _drawn_requests(users: int, files: int, seed: int) -> tuple[int, ...]:
    rng = np.random.default_rng([seed, REQUEST_STREAM])
    return tuple(int(x) for x in rng.integers(0, files, size=users))


def _det_point(spec: ExperimentSpec, cache: int, seed: int) -> Row:
    users, files = spec.users, spec.files
    selfish = spec.selfish_users()
    config = DetConfig(users, files, cache, spec.file_size, selfish)
    analytic = float(
        analytics.deterministic_rate(users, files, cache, len(selfish))
    )
    lower = float(analytics.cutset_lower_bound(users, files, cache))

    if spec.request_policy == "worst-case":
        sample = "all" if files**users <= 4096 else 200
        wc = harness.worst_case_error(config, request_sample=sample, seeds=(seed,))
        probe = harness.run_deterministic(config, tuple(i % files for i in range(users)), seed)
        return _row(
            "det", users, files, cache, len(selfish), config.replication, None,
            analytic, float(probe.empirical_rate), lower, seed,
            wc.worst_failure_fraction == 0.0,
        )

    requests = spec.requests or _drawn_requests(users, files, seed)
    report = harness.run_deterministic(config, requests, seed)
    return _row(
        "det", users, files, cache, len(selfish), config.replication, None,
        analytic, float(report.empirical_rate), lower, seed, report.all_ok,
    )


def _resolve_code_rate(spec: ExperimentSpec, cache: int) -> float:
    if spec.rate == "auto":
        return analytics.critical_code_rate_selfish(
            spec.users, spec.files, cache, len(spec.selfish_users())
        )
    return float(spec.rate)


def _rand_point(spec: ExperimentSpec, cache: int, seed: int) -> Row:
    users, files = spec.users, spec.files
    selfish = spec.selfish_users()
    code_rate = _resolve_code_rate(spec, cache)
    config = RandConfig(
        users=users,
        files=files,
        cache_size=cache,
        file_bytes=spec.file_size,
        source_symbols=spec.symbols,
        code_rate=code_rate,
        seed=seed,
        selfish=selfish,
    )
    analytic = analytics.randomized_rate(users, files, cache, len(selfish), code_rate)
    lower = float(analytics.cutset_lower_bound(users, files, cache))

    if spec.request_policy == "worst-case":
        sample = "all" if files**users <= 4096 else 200
        wc = harness.worst_case_error(
            config, request_sample=sample, seeds=spec.seeds, mode=spec.mode
        )
        return _row(
            "rand", users, files, cache, len(selfish), None, code_rate,
            analytic, None, lower, seed, wc.worst_failure_fraction == 0.0,
        )

    requests = spec.requests or _drawn_requests(users, files, seed)
    report = harness.run_randomized(config, requests, mode=spec.mode)
    return _row(
        "rand", users, files, cache, len(selfish), None, code_rate,
        analytic, float(report.empirical_rate), lower, seed, report.all_ok,
    )


def _figure2_points(spec: ExperimentSpec) -> list[Callable[[], Row]]:
    """Analytic two-curve sweep over every cache size with an integer
    replication factor; deterministic rows where the selfish count is within
    tolerance, randomized rows where delivery is feasible."""
    users, files, selfish = spec.users, spec.files, spec.selfish
    jobs: list[Callable[[], Row]] = []
    for cache in range(1, files):
        if (cache * users) % files != 0:
            continue
        repl = cache * users // files
        if repl < 1 or repl > users - 1:
            continue
        lower = float(analytics.cutset_lower_bound(users, files, cache))
        if selfish <= repl - 1:
            jobs.append(_figure2_det_job(users, files, cache, selfish, repl, lower))
        if cache * (users - selfish) > files:
            jobs.append(_figure2_rand_job(users, files, cache, selfish, lower))
    return jobs


def _figure2_det_job(users, files, cache, selfish, repl, lower):
    def job() -> Row:
        analytic = float(analytics.deterministic_rate(users, files, cache, selfish))
        return _row(
            "det", users, files, cache, selfish, repl, None,
            analytic, None, lower, None, None,
        )

    return job


def _figure2_rand_job(users, files, cache, selfish, lower):
    def job() -> Row:
        code_rate = analytics.critical_code_rate_selfish(users, files, cache, selfish)
        analytic = analytics.randomized_rate(users, files, cache, selfish, code_rate)
        return _row(
            "rand", users, files, cache, selfish, None, code_rate,
            analytic, None, lower, None, None,
        )

    return job


def _cache_values(spec: ExperimentSpec) -> list[int]:
    if spec.cache_range is not None:
        lo, hi, step = spec.cache_range
        return list(range(lo, hi + 1, step))
    if spec.cache is None:
        raise ParameterError("cache size required: pass --cache or --cache-range")
    return [spec.cache]


def build_jobs(spec: ExperimentSpec) -> list[Callable[[], Row]]:
    if spec.sweep_figure2:
        return _figure2_points(spec)
    if spec.scheme not in ("det", "rand"):
        raise ParameterError("scheme must be 'det' or 'rand'")
    point = _det_point if spec.scheme == "det" else _rand_point
    jobs: list[Callable[[], Row]] = []
    for cache in _cache_values(spec):
        if spec.request_policy == "worst-case":
            # one sweep per cache size; randomized sweeps fold in all seeds
            jobs.append(lambda c=cache: point(spec, c, spec.seeds[0]))
            continue
        for seed in spec.seeds:
            jobs.append(lambda c=cache, s=seed: point(spec, c, s))
    return jobs


def run(spec: ExperimentSpec) -> int:
    """Execute one ExperimentSpec: write CSV rows (stdout unless --out),
    then the manifest.  Returns the process exit code."""
    _validate(spec)
    jobs = build_jobs(spec)
    out = open(spec.out, "w") if spec.out else sys.stdout
    lines = [CSV_HEADER]
    rows: list[Row] = []
    failures = 0
    checked = 0
    interrupted = False
    try:
        out.write(CSV_HEADER + "\n")
        out.flush()
        with ThreadPoolExecutor(max_workers=min(8, max(1, len(jobs)))) as pool:
            futures = [pool.submit(job) for job in jobs]
            try:
                for future in futures:
                    row = future.result()
                    rows.append(row)
                    lines.append(row.line())
                    out.write(row.line() + "\n")
                    out.flush()
                    if row.verified is not None:
                        checked += 1
                        if not row.verified:
                            failures += 1
            except KeyboardInterrupt:
                interrupted = True
                for future in futures:
                    future.cancel()
    finally:
        if spec.out:
            out.close()
    if interrupted:
        print("interrupted; partial results flushed", file=sys.stderr)
        return EXIT_INTERRUPTED

    if spec.manifest:
        _write_manifest(spec, rows, lines)
    if checked:
        print(
            f"summary: {checked - failures}/{checked} runs verified", file=sys.stderr
        )
    else:
        print(f"summary: {len(rows)} analytic rows", file=sys.stderr)
    return EXIT_VERIFICATION_FAILED if failures else EXIT_OK


def _validate(spec: ExperimentSpec) -> None:
    if spec.users is None or spec.files is None:
        raise ParameterError("--users and --files are required")
    if spec.sweep_figure2:
        return
    if spec.requests is not None and len(spec.requests) != spec.users:
        raise ParameterError(
            f"--requests lists {len(spec.requests)} entries for {spec.users} users"
        )
    if spec.mode not in ("index", "payload"):
        raise ParameterError("mode must be 'index' or 'payload'")
    if spec.request_policy not in ("explicit", "uniform", "worst-case"):
        raise ParameterError(
            "request policy must be 'explicit', 'uniform', or 'worst-case'"
        )
    if spec.request_policy == "explicit" and spec.requests is None:
        raise ParameterError("request policy 'explicit' needs --requests")


def _write_manifest(spec: ExperimentSpec, rows: list[Row], lines: list[str]) -> None:
    csv_bytes = ("\n".join(lines) + "\n").encode()
    library_hash = None
    if not spec.sweep_figure2 and spec.seeds:
        library_hash = harness.library_digest(
            harness.make_library(spec.files, spec.file_size, spec.seeds[0])
        )
    manifest = {
        "spec": _spec_as_json(spec),
        "resolved": {
            "seeds": list(spec.seeds),
            "library_hash": library_hash,
            "points": [row.point for row in rows],
        },
        "results_digest": hashlib.sha256(csv_bytes).hexdigest(),
    }
    with open(spec.manifest, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _spec_as_json(spec: ExperimentSpec) -> dict:
    record = asdict(spec)
    for key, value in record.items():
        if isinstance(value, tuple):
            record[key] = list(value)
    return record


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _parse_range(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) == 2:
        parts.append("1")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected A:B or A:B:STEP")
    lo, hi, step = (int(p) for p in parts)
    if step < 1 or hi < lo:
        raise argparse.ArgumentTypeError("expected A <= B and STEP >= 1")
    return lo, hi, step


def _parse_seeds(text: str, base: int) -> tuple[int, ...]:
    if "," in text:
        return _parse_int_list(text)
    count = int(text)
    if count < 1:
        raise argparse.ArgumentTypeError("seed count must be positive")
    return tuple(range(base, base + count))


def _parse_rate(text: str):
    return text if text == "auto" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dcache",
        description="Coded-caching experiments for D2D networks with selfish users.",
    )
    parser.add_argument("--spec", help="JSON spec file; explicit flags override it")
    parser.add_argument("--scheme", choices=["det", "rand"])
    parser.add_argument("--users", type=int, help="number of users K")
    parser.add_argument("--files", type=int, help="library size N")
    parser.add_argument("--cache", type=int, help="per-user cache size M in files")
    parser.add_argument(
        "--cache-range", type=_parse_range, metavar="A:B:STEP",
        help="sweep cache sizes A..B inclusive",
    )
    parser.add_argument(
        "--selfish", type=int, help="selfish user count (lowest indices by default)"
    )
    parser.add_argument(
        "--selfish-set", type=_parse_int_list, metavar="I,J,...",
        help="explicit selfish user indices",
    )
    parser.add_argument(
        "--requests", type=_parse_int_list, metavar="F0,F1,...",
        help="explicit request vector, one file index per user",
    )
    parser.add_argument(
        "--request-policy", choices=["explicit", "uniform", "worst-case"],
        help="how request vectors are chosen (default: uniform per seed)",
    )
    parser.add_argument("--symbols", type=int, help="source symbols per file I")
    parser.add_argument(
        "--rate", type=_parse_rate,
        help="code rate r in (0,1], or 'auto' for the break-even root",
    )
    parser.add_argument(
        "--seeds", help="seed count (e.g. 100) or explicit comma list (e.g. 0,7)"
    )
    parser.add_argument("--mode", choices=["index", "payload"])
    parser.add_argument("--file-size", type=int, help="file size in bytes")
    parser.add_argument("--out", help="CSV output path (default stdout)")
    parser.add_argument("--manifest", help="JSON run-manifest output path")
    parser.add_argument(
        "--sweep-figure2", action="store_true", default=None,
        help="analytic rate sweep over all integer-replication cache sizes",
    )
    return parser


def _load_spec_file(path: str) -> dict:
    with open(path) as handle:
        record = json.load(handle)
    allowed = set(ExperimentSpec.__dataclass_fields__)
    unknown = set(record) - allowed
    if unknown:
        raise ParameterError(f"unknown spec keys: {sorted(unknown)}")
    return record


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    base_seed = int(os.environ.get("D2DCACHE_SEED", "0"))
    spec = ExperimentSpec()
    if args.spec:
        record = _load_spec_file(args.spec)
        if "seeds" in record and isinstance(record["seeds"], int):
            record["seeds"] = list(range(base_seed, base_seed + record["seeds"]))
        for key in ("cache_range", "selfish_set", "requests", "seeds"):
            if record.get(key) is not None:
                record[key] = tuple(record[key])
        spec = replace(spec, **record)
    else:
        spec = replace(spec, seeds=(base_seed,))

    overrides = {}
    mapping = {
        "scheme": args.scheme,
        "users": args.users,
        "files": args.files,
        "cache": args.cache,
        "cache_range": args.cache_range,
        "selfish": args.selfish,
        "selfish_set": args.selfish_set,
        "requests": args.requests,
        "request_policy": args.request_policy,
        "symbols": args.symbols,
        "rate": args.rate,
        "mode": args.mode,
        "file_size": args.file_size,
        "out": args.out,
        "manifest": args.manifest,
        "sweep_figure2": args.sweep_figure2,
    }
    for key, value in mapping.items():
        if value is not None:
            overrides[key] = value
    if args.seeds is not None:
        overrides["seeds"] = _parse_seeds(args.seeds, base_seed)
    spec = replace(spec, **overrides)
    if spec.requests is not None and spec.request_policy == "uniform":
        spec = replace(spec, request_policy="explicit")
    return spec


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = resolve_spec(args)
        return run(spec)
    except (D2DCacheError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
