"""Multi-view outsourcing schemes.

Both schemes publish one seed trace plus key vectors; the analyst unrolls N
views, exactly one of which (index r, known only to the owner) reproduces the
owner's real anonymized trace.  Scheme one applies one signed count per
prefix-group partition and walks all partitions in lockstep; scheme two
first migrates every group onto fabricated prefixes and then re-groups the
distinct addresses independently in every fake view, so fake views carry
entirely fabricated prefix relations with the same cardinality profile.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, replace

from .errors import DomainError, MvanonError, PackageError, ProtocolError
from .migration import migrate, perm_sample
from .ppcipher import derive_key, parse_master_hex, pp_anonymize, pp_iter
from .randomness import DetRng, RandomStream
from .trace import Trace, group_by_prefix, map_addresses, parse_trace, serialize_trace

log = logging.getLogger(__name__)

_TS_MARK = 1 << 63


# ---------------------------------------------------------------------------
# key-vector arithmetic


def scheme1_seed_vector(vector: list[int], r: int) -> list[int]:
    """Seed counts that put the real trace r forward steps away: -r * V."""
    if r < 1:
        raise DomainError("real view index must be positive")
    return [-r * v for v in vector]


def scheme2_key_vectors(cstar: list[int], draws: list[list[int]], r: int) -> list[list[int]]:
    """Difference chain [V_0 .. V_N] over the per-address group-index states.

    draws supplies the fabricated states for iterations 0..N in order,
    skipping iteration r whose state is the migration-key expansion cstar.
    Summing V_1..V_i on top of the seed state therefore lands every address
    on its iteration-i group index, and iteration r is the real assignment.
    """
    n_views = len(draws)
    if not 1 <= r <= n_views:
        raise DomainError(f"real view index {r} outside [1, {n_views}]")
    if any(len(d) != len(cstar) for d in draws):
        raise DomainError("state vectors must all match the address count")
    states = []
    di = 0
    for i in range(n_views + 1):
        if i == r:
            states.append(list(cstar))
        else:
            states.append(list(draws[di]))
            di += 1
    vectors = [[s - c for s, c in zip(states[0], cstar)]]
    for i in range(1, n_views + 1):
        vectors.append([a - b for a, b in zip(states[i], states[i - 1])])
    return vectors


# ---------------------------------------------------------------------------
# partition boundary marking


def mark_boundaries(trace: Trace, partition_ends: list[int]) -> Trace:
    """Flag the last record of each partition: top timestamp bit + CSV column."""
    ends = set(partition_ends)
    if not ends:
        raise DomainError("no partition ends to mark")
    if any(e < 0 or e >= len(trace.records) for e in ends):
        raise DomainError("partition end out of range")
    records = []
    for idx, rec in enumerate(trace.records):
        if rec.timestamp & _TS_MARK or rec.boundary:
            raise DomainError(f"record {idx} already carries a boundary mark")
        if idx in ends:
            rec = replace(rec, timestamp=rec.timestamp | _TS_MARK, boundary=1)
        records.append(rec)
    return Trace(records=records, prefix_bits=trace.prefix_bits)


def unmark_boundaries(trace: Trace) -> Trace:
    """Undo mark_boundaries exactly; flags and timestamp bits must agree."""
    records = []
    for idx, rec in enumerate(trace.records):
        marked = bool(rec.timestamp & _TS_MARK)
        if marked != bool(rec.boundary):
            raise DomainError(f"record {idx}: timestamp mark and boundary flag disagree")
        if marked:
            rec = replace(rec, timestamp=rec.timestamp & ~_TS_MARK, boundary=0)
        records.append(rec)
    return Trace(records=records, prefix_bits=trace.prefix_bits)


def partition_ends_from_flags(trace: Trace) -> list[int]:
    ends = [idx for idx, rec in enumerate(trace.records) if rec.boundary]
    if not ends or ends[-1] != len(trace.records) - 1:
        raise PackageError("seed trace is missing partition boundary flags")
    return ends


# ---------------------------------------------------------------------------
# package model


@dataclass
class SeedPackage:
    """Everything the owner outsources: seed trace, walk key, vectors, counts."""

    scheme: int
    n_views: int
    master: bytes  # outsourced walk key (not the owner's private first-pass key)
    vectors: list[list[int]]
    seed: Trace
    d: int
    D: int
    p: int


@dataclass
class OwnerSecrets:
    """Owner-side state that must never reach the analyst."""

    r: int
    master0: bytes
    real_view: Trace


def _atomic_write(path: str, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_package(pkg: SeedPackage, dirpath: str) -> None:
    os.makedirs(dirpath, exist_ok=True)
    _atomic_write(os.path.join(dirpath, "seed.csv"), serialize_trace(pkg.seed))
    _atomic_write(os.path.join(dirpath, "key.hex"), pkg.master.hex() + "\n")
    rows = "".join(",".join(str(v) for v in vec) + "\n" for vec in pkg.vectors)
    _atomic_write(os.path.join(dirpath, "vectors.csv"), rows)
    meta = {"scheme": pkg.scheme, "N": pkg.n_views, "d": pkg.d, "D": pkg.D, "p": pkg.p}
    _atomic_write(
        os.path.join(dirpath, "meta.json"),
        json.dumps(meta, sort_keys=True, separators=(",", ": ")) + "\n",
    )


def load_package(dirpath: str) -> SeedPackage:
    if not os.path.isdir(dirpath):
        raise FileNotFoundError(f"package directory not found: {dirpath}")

    def member(name: str) -> str:
        path = os.path.join(dirpath, name)
        if not os.path.isfile(path):
            raise PackageError(f"package is missing {name}")
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return fh.read()

    try:
        meta = json.loads(member("meta.json"))
    except json.JSONDecodeError as exc:
        raise PackageError(f"meta.json is not valid JSON: {exc}") from exc
    for field in ("scheme", "N", "d", "D", "p"):
        if not isinstance(meta.get(field), int):
            raise PackageError(f"meta.json field {field} missing or not an integer")
    scheme, n_views, d, D, p = meta["scheme"], meta["N"], meta["d"], meta["D"], meta["p"]
    if scheme not in (1, 2):
        raise PackageError(f"unknown scheme tag {scheme}")
    if n_views < 1 or d < 1 or D < d or p not in (8, 16, 24):
        raise PackageError("meta.json counts out of range")

    try:
        master = parse_master_hex(member("key.hex"))
        seed = parse_trace(member("seed.csv"), prefix_bits=p)
    except PackageError:
        raise
    except MvanonError as exc:
        raise PackageError(f"package member malformed: {exc}") from exc

    vectors = []
    for lineno, line in enumerate(member("vectors.csv").split("\n"), start=1):
        if line == "":
            continue
        try:
            vectors.append([int(cell) for cell in line.rstrip("\r").split(",")])
        except ValueError as exc:
            raise PackageError(f"vectors.csv line {lineno} malformed") from exc

    if scheme == 1:
        if len(vectors) != 1 or len(vectors[0]) != d:
            raise PackageError("scheme 1 expects a single vector of d counts")
        if sorted(vectors[0]) != list(range(1, d + 1)):
            raise PackageError("scheme 1 vector must be a permutation of 1..d")
    else:
        if len(vectors) != n_views or any(len(vec) != D for vec in vectors):
            raise PackageError("scheme 2 expects N vectors of D counts")
    return SeedPackage(
        scheme=scheme, n_views=n_views, master=master, vectors=vectors, seed=seed, d=d, D=D, p=p
    )


# ---------------------------------------------------------------------------
# shared owner-side steps


def _require_unmarked(trace: Trace) -> None:
    if not trace.records:
        raise DomainError("trace has no records")
    for idx, rec in enumerate(trace.records):
        if rec.boundary or rec.timestamp & _TS_MARK:
            raise DomainError(f"record {idx}: input trace must not carry boundary marks")


def _first_pass(trace: Trace, master0: bytes) -> Trace:
    """Anonymize every address once under the owner's private key."""
    key0 = derive_key(master0)
    cache: dict[int, int] = {}

    def enc(ip: int) -> int:
        out = cache.get(ip)
        if out is None:
            out = pp_anonymize(ip, key0)
            cache[ip] = out
        return out

    return map_addresses(trace, enc)


def _shuffled(values: list[int], stream: RandomStream) -> list[int]:
    out = list(values)
    stream.shuffle(out)
    return out


# ---------------------------------------------------------------------------
# scheme one: per-partition signed walks over whole record blocks


def scheme1_owner(
    trace: Trace, master0: bytes, master: bytes, p: int, n_views: int, r: int, rng: DetRng
) -> tuple[SeedPackage, OwnerSecrets]:
    _require_unmarked(trace)
    if not 1 <= r <= n_views:
        raise DomainError(f"real view index {r} outside [1, {n_views}]")
    first = _first_pass(trace, master0)
    grouping = group_by_prefix(first, p)
    d = grouping.d

    buckets: list[list] = [[] for _ in range(d)]
    for rec in first.records:
        buckets[grouping.group_of[rec.src_ip]].append(rec)
    if any(not bucket for bucket in buckets):
        raise ProtocolError("every prefix group needs at least one source record")

    ordered = [rec for bucket in buckets for rec in bucket]
    ends, total = [], 0
    for bucket in buckets:
        total += len(bucket)
        ends.append(total - 1)
    real_view = Trace(records=ordered, prefix_bits=p)

    vector = perm_sample(d, rng.stream("scheme1-vector"))
    seed_counts = scheme1_seed_vector(vector, r)
    key = derive_key(master)
    seed_records = []
    cache: dict[tuple[int, int], int] = {}

    def walk(gi: int, ip: int) -> int:
        out = cache.get((gi, ip))
        if out is None:
            out = pp_iter(ip, key, seed_counts[gi])
            cache[(gi, ip)] = out
        return out

    for gi, bucket in enumerate(buckets):
        for rec in bucket:
            seed_records.append(
                replace(rec, src_ip=walk(gi, rec.src_ip), dst_ip=walk(gi, rec.dst_ip))
            )
    seed = mark_boundaries(Trace(records=seed_records, prefix_bits=p), ends)

    pkg = SeedPackage(
        scheme=1,
        n_views=n_views,
        master=master,
        vectors=[vector],
        seed=seed,
        d=d,
        D=grouping.D,
        p=p,
    )
    return pkg, OwnerSecrets(r=r, master0=master0, real_view=real_view)


def scheme1_views(pkg: SeedPackage) -> list[Trace]:
    """Unroll all N views: every step advances each partition by its count."""
    if pkg.scheme != 1:
        raise DomainError("package is not a scheme 1 package")
    vector = pkg.vectors[0]
    ends = partition_ends_from_flags(pkg.seed)
    if len(ends) != len(vector):
        raise PackageError(
            f"seed has {len(ends)} partitions but the vector holds {len(vector)} counts"
        )
    base = unmark_boundaries(pkg.seed)
    key = derive_key(pkg.master)

    blocks, start = [], 0
    for end in ends:
        blocks.append(range(start, end + 1))
        start = end + 1

    current: list[dict[int, int]] = []
    for gi, block in enumerate(blocks):
        values = {}
        for idx in block:
            rec = base.records[idx]
            values.setdefault(rec.src_ip, rec.src_ip)
            values.setdefault(rec.dst_ip, rec.dst_ip)
        current.append(values)

    views = []
    for _ in range(pkg.n_views):
        records = list(base.records)
        for gi, block in enumerate(blocks):
            values = current[gi]
            for v in values:
                values[v] = pp_iter(values[v], key, vector[gi])
            for idx in block:
                rec = base.records[idx]
                records[idx] = replace(rec, src_ip=values[rec.src_ip], dst_ip=values[rec.dst_ip])
        views.append(Trace(records=records, prefix_bits=pkg.p))
    return views


# ---------------------------------------------------------------------------
# scheme two: migration plus per-address regrouping walks


def scheme2_owner(
    trace: Trace, master0: bytes, master: bytes, p: int, n_views: int, r: int, rng: DetRng
) -> tuple[SeedPackage, OwnerSecrets]:
    _require_unmarked(trace)
    if not 1 <= r <= n_views:
        raise DomainError(f"real view index {r} outside [1, {n_views}]")
    first = _first_pass(trace, master0)
    grouping = group_by_prefix(first, p)
    key = derive_key(master)

    addr_map, mig_keys = migrate(grouping, key, rng)
    migrated = map_addresses(first, addr_map.__getitem__)
    migrated_distinct = [addr_map[ip] for ip in grouping.distinct]
    if len(set(migrated_distinct)) != len(migrated_distinct):
        raise ProtocolError("migration collided two distinct addresses; pick a new key")

    cstar = mig_keys.C_star
    draws = [
        _shuffled(cstar, rng.stream("scheme2-state", i)) for i in range(n_views + 1) if i != r
    ]
    vectors = scheme2_key_vectors(cstar, draws, r)

    seed_map = {
        mip: pp_iter(mip, key, count) for mip, count in zip(migrated_distinct, vectors[0])
    }
    if len(set(seed_map.values())) != len(seed_map):
        raise ProtocolError("seed transform collided two distinct addresses; pick a new key")
    seed = map_addresses(migrated, seed_map.__getitem__)
    seed.prefix_bits = p

    pkg = SeedPackage(
        scheme=2,
        n_views=n_views,
        master=master,
        vectors=vectors[1:],
        seed=seed,
        d=grouping.d,
        D=grouping.D,
        p=p,
    )
    migrated.prefix_bits = p
    return pkg, OwnerSecrets(r=r, master0=master0, real_view=migrated)


def scheme2_views(pkg: SeedPackage) -> list[Trace]:
    """Unroll all N views; partitions are the seed's distinct addresses in order."""
    if pkg.scheme != 2:
        raise DomainError("package is not a scheme 2 package")
    distinct = pkg.seed.distinct_ips()
    if len(distinct) != pkg.D:
        raise PackageError(
            f"seed holds {len(distinct)} distinct addresses but meta says D={pkg.D}"
        )
    key = derive_key(pkg.master)
    position = {ip: j for j, ip in enumerate(distinct)}
    current = list(distinct)
    views = []
    for vec in pkg.vectors:
        current = [pp_iter(ip, key, count) for ip, count in zip(current, vec)]
        view = map_addresses(pkg.seed, lambda ip: current[position[ip]])
        view.prefix_bits = pkg.p
        views.append(view)
    return views


def build_views(pkg: SeedPackage) -> list[Trace]:
    return scheme1_views(pkg) if pkg.scheme == 1 else scheme2_views(pkg)


# ---------------------------------------------------------------------------
# report pickup


def extract_report(reports: list, r: int):
    """Pick the real view's report (1-based).

    Plain indexed access: a production deployment would hide the access
    pattern behind an ORAM-style store, which is out of scope here.
    """
    if not 1 <= r <= len(reports):
        raise DomainError(f"report index {r} outside [1, {len(reports)}]")
    log.warning("report pickup reveals the access pattern; ORAM is not implemented")
    return reports[r - 1]
