"""Flow-trace model: records, CSV round-trip, prefix math, grouping.

Addresses live as unsigned 32-bit ints everywhere; dotted quads only exist
at the CSV boundary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

from .errors import DomainError, TraceParseError

CSV_HEADER = "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,packet_len,boundary"
_FIELDS = CSV_HEADER.split(",")

_U64 = (1 << 64) - 1
_U32 = (1 << 32) - 1
_U16 = (1 << 16) - 1


def ip_to_int(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise DomainError(f"not a dotted quad: {text!r}")
    value = 0
    for part in parts:
        if not part.isdigit() or (len(part) > 1 and part[0] == "0") or int(part) > 255:
            raise DomainError(f"bad octet in {text!r}")
        value = (value << 8) | int(part)
    return value


def int_to_ip(value: int) -> str:
    if value < 0 or value > _U32:
        raise DomainError(f"address out of 32-bit range: {value!r}")
    return f"{value >> 24}.{(value >> 16) & 0xFF}.{(value >> 8) & 0xFF}.{value & 0xFF}"


@dataclass(frozen=True, slots=True)
class FlowRecord:
    timestamp: int
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int
    packet_len: int
    boundary: int = 0

    def fingerprint(self) -> tuple:
        """Quasi-identifier left untouched by every anonymizing transform."""
        return (self.timestamp, self.src_port, self.dst_port, self.protocol, self.packet_len)


@dataclass
class Trace:
    """An ordered list of flow records plus the prefix width used to group them."""

    records: list[FlowRecord]
    prefix_bits: int = 16

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def distinct_ips(self) -> list[int]:
        """Distinct addresses over src then dst of each record, first-appearance order."""
        seen: dict[int, None] = {}
        for rec in self.records:
            seen.setdefault(rec.src_ip, None)
            seen.setdefault(rec.dst_ip, None)
        return list(seen)


_RANGES = {
    "timestamp": _U64,
    "src_port": _U16,
    "dst_port": _U16,
    "protocol": 255,
    "packet_len": _U32,
    "boundary": 1,
}


def parse_trace(text: str, prefix_bits: int = 16) -> Trace:
    """Parse the canonical CSV form; errors carry the 1-based line number."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceParseError("line 1: empty input, expected header")
    if lines[0].rstrip("\r") != CSV_HEADER:
        raise TraceParseError(f"line 1: bad header {lines[0]!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split(",")
        if len(cells) != 8:
            raise TraceParseError(f"line {lineno}: expected 8 fields, got {len(cells)}")
        try:
            src = ip_to_int(cells[1])
            dst = ip_to_int(cells[2])
        except DomainError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from exc
        numeric = {}
        for name, cell in zip(_FIELDS, cells):
            if name in ("src_ip", "dst_ip"):
                continue
            if not cell.isdigit():
                raise TraceParseError(f"line {lineno}: non-numeric {name} {cell!r}")
            value = int(cell)
            if value > _RANGES[name]:
                raise TraceParseError(f"line {lineno}: {name} out of range: {value}")
            numeric[name] = value
        records.append(
            FlowRecord(
                timestamp=numeric["timestamp"],
                src_ip=src,
                dst_ip=dst,
                src_port=numeric["src_port"],
                dst_port=numeric["dst_port"],
                protocol=numeric["protocol"],
                packet_len=numeric["packet_len"],
                boundary=numeric["boundary"],
            )
        )
    return Trace(records=records, prefix_bits=prefix_bits)


def serialize_trace(trace: Trace) -> str:
    """Render canonical CSV: LF endings, dotted quads without zero padding."""
    out = io.StringIO()
    out.write(CSV_HEADER)
    out.write("\n")
    for rec in trace.records:
        out.write(
            f"{rec.timestamp},{int_to_ip(rec.src_ip)},{int_to_ip(rec.dst_ip)},"
            f"{rec.src_port},{rec.dst_port},{rec.protocol},{rec.packet_len},{rec.boundary}\n"
        )
    return out.getvalue()


def load_trace(path, prefix_bits: int = 16) -> Trace:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_trace(fh.read(), prefix_bits=prefix_bits)


def shared_prefix_len(a: int, b: int) -> int:
    """Number of leading bits two addresses share; 32 when equal."""
    if a < 0 or a > _U32 or b < 0 or b > _U32:
        raise DomainError("addresses must be unsigned 32-bit")
    return 32 - (a ^ b).bit_length()


def build_pis(ips: list[int]) -> dict[tuple[int, int], int]:
    """Pairwise shared-prefix table keyed by position pairs (i, j), i < j."""
    table = {}
    for i in range(len(ips)):
        for j in range(i + 1, len(ips)):
            table[(i, j)] = shared_prefix_len(ips[i], ips[j])
    return table


@dataclass
class PrefixGrouping:
    """Distinct addresses bucketed by their top prefix_bits bits.

    Group order and member order both follow first appearance in the trace.
    """

    prefix_bits: int
    prefixes: list[int] = field(default_factory=list)
    members: list[list[int]] = field(default_factory=list)
    distinct: list[int] = field(default_factory=list)
    group_of: dict[int, int] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.members)

    @property
    def D(self) -> int:
        return len(self.distinct)

    @property
    def cards(self) -> list[int]:
        return [len(m) for m in self.members]


def group_by_prefix(trace: Trace, prefix_bits: int) -> PrefixGrouping:
    if prefix_bits not in (8, 16, 24):
        raise DomainError(f"prefix_bits must be 8, 16, or 24, got {prefix_bits}")
    grouping = PrefixGrouping(prefix_bits=prefix_bits)
    index_of_prefix: dict[int, int] = {}
    for ip in trace.distinct_ips():
        prefix = ip >> (32 - prefix_bits)
        gi = index_of_prefix.get(prefix)
        if gi is None:
            gi = len(grouping.members)
            index_of_prefix[prefix] = gi
            grouping.prefixes.append(prefix)
            grouping.members.append([])
        grouping.members[gi].append(ip)
        grouping.distinct.append(ip)
        grouping.group_of[ip] = gi
    return grouping


def map_addresses(trace: Trace, mapping) -> Trace:
    """Rewrite src/dst of every record through mapping(ip) -> ip."""
    records = [
        replace(rec, src_ip=mapping(rec.src_ip), dst_ip=mapping(rec.dst_ip))
        for rec in trace.records
    ]
    return Trace(records=records, prefix_bits=trace.prefix_bits)
