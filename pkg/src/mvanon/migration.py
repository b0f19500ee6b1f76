"""Address migration: move every prefix group onto a fabricated prefix.

Each group's true prefix is zeroed (XOR with the group prefix value), then
the whole group is pushed through the prefix-preserving cipher a per-group
number of times.  Groups keep their internal prefix relations exactly;
relations across groups are destroyed, and different groups can be made to
collide on fabricated prefixes, which is what the multi-view schemes exploit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import DomainError
from .ppcipher import PPKey, pp_iter
from .randomness import DetRng, RandomStream
from .trace import PrefixGrouping


def perm_sample(d: int, stream: RandomStream) -> list[int]:
    """Non-repeating sample of [1..d]: a uniform permutation."""
    if d < 1:
        raise DomainError("need at least one group")
    values = list(range(1, d + 1))
    stream.shuffle(values)
    return values


def rand_indices(d: int, D: int, iteration: int, rng: DetRng) -> list[int]:
    """D iid-uniform group indices in [1..d]; the stream is labeled by iteration."""
    if d < 1 or D < 0:
        raise DomainError("need d >= 1 and D >= 0")
    stream = rng.stream(f"rand-indices-{d}-{D}", iteration)
    return [stream.randbelow(d) + 1 for _ in range(D)]


@dataclass
class MigrationKeys:
    """Per-group iteration counts C plus their per-address expansion C_star.

    C_star[j] is the count for the j-th distinct address in trace order, so it
    lines up with PrefixGrouping.distinct.
    """

    C: list[int]
    C_star: list[int]


def migrate(
    grouping: PrefixGrouping, key: PPKey, rng: DetRng
) -> tuple[dict[int, int], MigrationKeys]:
    """Map every distinct address to its migrated value.

    Returns the address map and the keys needed to undo it.
    """
    if grouping.d == 0:
        raise DomainError("grouping is empty")
    C = perm_sample(grouping.d, rng.stream("migration-keys"))
    p = grouping.prefix_bits
    addr_map: dict[int, int] = {}
    for gi, members in enumerate(grouping.members):
        prefix_mask = grouping.prefixes[gi] << (32 - p)
        for ip in members:
            addr_map[ip] = pp_iter(ip ^ prefix_mask, key, C[gi])
    C_star = [C[grouping.group_of[ip]] for ip in grouping.distinct]
    return addr_map, MigrationKeys(C=C, C_star=C_star)


def unmigrate(
    addr_map: dict[int, int], keys: MigrationKeys, grouping: PrefixGrouping, key: PPKey
) -> dict[int, int]:
    """Invert migrate: migrated value -> original address."""
    p = grouping.prefix_bits
    reverse: dict[int, int] = {}
    for gi, members in enumerate(grouping.members):
        prefix_mask = grouping.prefixes[gi] << (32 - p)
        for ip in members:
            migrated = addr_map.get(ip)
            if migrated is None:
                raise DomainError(f"address {ip} not in migration map")
            restored = pp_iter(migrated, key, -keys.C[gi]) ^ prefix_mask
            if restored != ip:
                raise DomainError(f"migration keys do not invert address {ip}")
            reverse[migrated] = ip
    return reverse


def serialize_key_vector(values: list[int]) -> str:
    """Single key vector as CSV with header 'i,v' and signed decimal values."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["i", "v"])
    for i, v in enumerate(values):
        writer.writerow([i, v])
    return out.getvalue()


def parse_key_vector(text: str) -> list[int]:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or rows[0] != ["i", "v"]:
        raise DomainError("key vector file must start with header 'i,v'")
    values = []
    for n, row in enumerate(rows[1:]):
        try:
            if len(row) != 2 or int(row[0]) != n:
                raise DomainError(f"key vector row {n} malformed: {row!r}")
            values.append(int(row[1]))
        except ValueError as exc:
            raise DomainError(f"key vector row {n} malformed: {row!r}") from exc
    return values
