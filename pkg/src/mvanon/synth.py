"""Synthetic flow traces for tests and demos.

Groups get distinct random prefixes at the requested width, members get
distinct suffixes, and every record's fingerprint is unique because
timestamps strictly increase.  By default both endpoints of a record come
from the same prefix group, which keeps record partitions aligned with
address groups; pass cross_group=True for arbitrary endpoint pairs.
"""

from __future__ import annotations

from .errors import DomainError
from .randomness import DetRng
from .trace import FlowRecord, Trace

_PROTOCOLS = (6, 17)
_DST_PORTS = (80, 443, 53, 22, 8080, 123)


def generate_trace(
    groups: int,
    ips_per_group,
    records_per_ip: int,
    prefix_bits: int,
    rng: DetRng,
    cross_group: bool = False,
) -> Trace:
    if prefix_bits not in (8, 16, 24):
        raise DomainError(f"prefix_bits must be 8, 16, or 24, got {prefix_bits}")
    if groups < 1 or records_per_ip < 1:
        raise DomainError("need at least one group and one record per address")
    cards = (
        list(ips_per_group)
        if not isinstance(ips_per_group, int)
        else [ips_per_group] * groups
    )
    if len(cards) != groups or any(c < 1 for c in cards):
        raise DomainError("cardinalities must list one positive count per group")
    if groups > (1 << prefix_bits):
        raise DomainError("more groups than prefixes at this width")

    stream = rng.stream("synth-trace")
    suffix_bits = 32 - prefix_bits

    prefixes: list[int] = []
    taken = set()
    while len(prefixes) < groups:
        candidate = stream.randbelow(1 << prefix_bits)
        if candidate not in taken:
            taken.add(candidate)
            prefixes.append(candidate)

    members: list[list[int]] = []
    for gi, card in enumerate(cards):
        if card > (1 << suffix_bits):
            raise DomainError("more addresses than suffixes at this width")
        group: list[int] = []
        seen = set()
        while len(group) < card:
            suffix = stream.randbelow(1 << suffix_bits)
            if suffix not in seen:
                seen.add(suffix)
                group.append((prefixes[gi] << suffix_bits) | suffix)
        members.append(group)

    everyone = [ip for group in members for ip in group]
    slots: list[tuple[int, int]] = []  # (group index, src address)
    for gi, group in enumerate(members):
        for ip in group:
            slots.extend((gi, ip) for _ in range(records_per_ip))
    stream.shuffle(slots)

    records = []
    timestamp = 1_600_000_000_000_000
    for gi, src in slots:
        timestamp += 1 + stream.randbelow(1000)
        dst = stream.choice(everyone) if cross_group else stream.choice(members[gi])
        records.append(
            FlowRecord(
                timestamp=timestamp,
                src_ip=src,
                dst_ip=dst,
                src_port=1024 + stream.randbelow(60000),
                dst_port=stream.choice(_DST_PORTS),
                protocol=stream.choice(_PROTOCOLS),
                packet_len=64 + stream.randbelow(1437),
            )
        )
    return Trace(records=records, prefix_bits=prefix_bits)
