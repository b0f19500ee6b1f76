"""Adversary simulation and utility analytics.

The simulated adversary injected (or otherwise knows) one flow in each of
alpha distinct prefix groups: it holds the flow's original source address
plus its fingerprint, finds the flow again in every published view, throws
away views where the known addresses' prefix relations are wrong, and on
the surviving views extrapolates address prefixes from the known pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, MatchError
from .ppcipher import derive_key, pp_anonymize
from .randomness import DetRng
from .trace import Trace, group_by_prefix, map_addresses, shared_prefix_len

# ---------------------------------------------------------------------------
# background knowledge


@dataclass(frozen=True)
class KnownFlow:
    original_ip: int
    fingerprint: tuple
    side: str  # "src" or "dst": where the known address sits in the record


@dataclass
class AdversaryKnowledge:
    pairs: list[KnownFlow]
    prefix_bits: int

    @property
    def alpha(self) -> int:
        return len(self.pairs)


def _fingerprint_index(trace: Trace) -> dict[tuple, int]:
    index: dict[tuple, int] = {}
    for idx, rec in enumerate(trace.records):
        fp = rec.fingerprint()
        if fp in index:
            raise DomainError(f"fingerprint {fp} occurs twice; records are ambiguous")
        index[fp] = idx
    return index


def build_knowledge(
    trace: Trace, group_indices: list[int], prefix_bits: int, rng: DetRng
) -> AdversaryKnowledge:
    """Pick one known flow in each listed prefix group (0-based, trace order)."""
    if not group_indices:
        raise DomainError("adversary must know at least one group")
    if len(set(group_indices)) != len(group_indices):
        raise DomainError("known groups must be distinct")
    _fingerprint_index(trace)  # enforce the uniqueness precondition
    grouping = group_by_prefix(trace, prefix_bits)
    if any(g < 0 or g >= grouping.d for g in group_indices):
        raise DomainError(f"group index outside [0, {grouping.d})")
    stream = rng.stream("adversary-knowledge")
    pairs = []
    for g in group_indices:
        ip = stream.choice(grouping.members[g])
        occurrences = []
        for rec in trace.records:
            if rec.src_ip == ip:
                occurrences.append((rec.fingerprint(), "src"))
            if rec.dst_ip == ip:
                occurrences.append((rec.fingerprint(), "dst"))
        fp, side = stream.choice(occurrences)
        pairs.append(KnownFlow(original_ip=ip, fingerprint=fp, side=side))
    return AdversaryKnowledge(pairs=pairs, prefix_bits=prefix_bits)


def locate_known(view: Trace, knowledge: AdversaryKnowledge) -> list[tuple[int, int]]:
    """(original, anonymized) address pairs for every known flow in this view."""
    index = _fingerprint_index(view)
    located = []
    for known in knowledge.pairs:
        idx = index.get(known.fingerprint)
        if idx is None:
            raise MatchError(f"fingerprint {known.fingerprint} not present in view")
        rec = view.records[idx]
        anon = rec.src_ip if known.side == "src" else rec.dst_ip
        located.append((known.original_ip, anon))
    return located


# ---------------------------------------------------------------------------
# candidate elimination and prefix extrapolation


def _relations(ips: list[int], width: int) -> list[bool]:
    """Pairwise shared-prefix indicators at the grouping width."""
    flags = []
    for i in range(len(ips)):
        for j in range(i + 1, len(ips)):
            flags.append(shared_prefix_len(ips[i], ips[j]) >= width)
    return flags


def eliminate_fakes(views: list[Trace], knowledge: AdversaryKnowledge) -> list[int]:
    """1-based indices of views whose known addresses keep their prefix relations."""
    width = knowledge.prefix_bits
    originals = [known.original_ip for known in knowledge.pairs]
    want = _relations(originals, width)
    survivors = []
    for i, view in enumerate(views, start=1):
        located = locate_known(view, knowledge)
        if _relations([anon for _, anon in located], width) == want:
            survivors.append(i)
    return survivors


def extrapolate(view: Trace, located: list[tuple[int, int]]) -> dict[int, tuple[int, int]]:
    """Best prefix inference per distinct view address.

    Maps each address x in the view to (bits, original): x shares `bits`
    leading bits with some known anonymized address, so the adversary claims
    the first `bits` bits of that pair's original address for x.
    """
    if not located:
        raise DomainError("need at least one known pair")
    inferred = {}
    for x in view.distinct_ips():
        best_bits, best_orig = -1, None
        for orig, anon in located:
            bits = shared_prefix_len(x, anon)
            if bits > best_bits:
                best_bits, best_orig = bits, orig
        inferred[x] = (best_bits, best_orig)
    return inferred


# ---------------------------------------------------------------------------
# leakage scoring


@dataclass
class LeakageReport:
    candidates: list[int]
    F: list[float]  # F[i-1] = addresses with >= i leading bits correctly inferred
    compromised_pct: float  # fraction of packets with >= 8 bits known on either end


def leakage(views: list[Trace], knowledge: AdversaryKnowledge, original: Trace) -> LeakageReport:
    """Run elimination, then score extrapolation across the surviving views."""
    candidates = eliminate_fakes(views, knowledge)
    fp_to_original = {}
    for rec in original.records:
        fp = rec.fingerprint()
        if fp in fp_to_original:
            raise DomainError(f"fingerprint {fp} occurs twice in the original trace")
        fp_to_original[fp] = rec

    if not candidates:
        return LeakageReport(candidates=[], F=[0.0] * 32, compromised_pct=0.0)

    f_totals = [0] * 32
    compromised_total = 0.0
    for vi in candidates:
        view = views[vi - 1]
        located = locate_known(view, knowledge)
        inferred = extrapolate(view, located)
        correct_per_address: dict[int, int] = {}
        compromised = 0
        for rec in view.records:
            orig_rec = fp_to_original.get(rec.fingerprint())
            if orig_rec is None:
                raise MatchError("view record has no counterpart in the original trace")
            corrects = []
            for x, u in ((rec.src_ip, orig_rec.src_ip), (rec.dst_ip, orig_rec.dst_ip)):
                bits, basis = inferred[x]
                correct = min(bits, shared_prefix_len(basis, u))
                corrects.append(correct)
                if correct > correct_per_address.get(u, -1):
                    correct_per_address[u] = correct
            if max(corrects) >= 8:
                compromised += 1
        for count in correct_per_address.values():
            for i in range(1, min(count, 32) + 1):
                f_totals[i - 1] += 1
        compromised_total += compromised / len(view.records)

    n = len(candidates)
    return LeakageReport(
        candidates=candidates,
        F=[total / n for total in f_totals],
        compromised_pct=compromised_total / n,
    )


def baseline_views(trace: Trace, master: bytes) -> list[Trace]:
    """Single-view baseline: the whole trace under one prefix-preserving key."""
    key = derive_key(master)
    cache: dict[int, int] = {}

    def enc(ip: int) -> int:
        out = cache.get(ip)
        if out is None:
            out = pp_anonymize(ip, key)
            cache[ip] = out
        return out

    view = map_addresses(trace, enc)
    return [view]


def attack_report(
    knowledge: AdversaryKnowledge,
    n_views: int,
    leak: LeakageReport,
    eps: float,
    expected: float,
) -> dict:
    """Assemble the JSON-facing attack summary."""
    return {
        "alpha": knowledge.alpha,
        "N": n_views,
        "candidates": leak.candidates,
        "F": [round(x) for x in leak.F],
        "compromised_pct": leak.compromised_pct,
        "eps_exact": eps,
        "expected_candidates": expected,
    }


# ---------------------------------------------------------------------------
# utility analytics


@dataclass
class IpDistribution:
    temporal: list[int]  # distinct addresses per group, first-appearance order
    by_cardinality: list[int]  # same counts, largest group first


def ip_distribution(trace: Trace, prefix_bits: int) -> IpDistribution:
    grouping = group_by_prefix(trace, prefix_bits)
    cards = grouping.cards
    return IpDistribution(temporal=cards, by_cardinality=sorted(cards, reverse=True))


def packet_len_ecdf(trace: Trace) -> list[tuple[int, float]]:
    """Empirical CDF over packet lengths: (length, cumulative fraction) steps."""
    if not trace.records:
        raise DomainError("trace has no records")
    counts: dict[int, int] = {}
    for rec in trace.records:
        counts[rec.packet_len] = counts.get(rec.packet_len, 0) + 1
    total = len(trace.records)
    points = []
    running = 0
    for length in sorted(counts):
        running += counts[length]
        points.append((length, running / total))
    return points
