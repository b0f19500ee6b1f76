"""Indistinguishability analysis for multi-view anonymization.

The adversary knows one flow in each of alpha distinct prefix groups and
keeps a view as a real-trace candidate when those alpha addresses land in
pairwise-distinct groups.  Fake views regroup addresses uniformly at random
among all groupings with the trace's cardinality profile, so the survival
probability A is a ratio of exact integer counts; eps = -ln A measures how
well fakes blend in, and a closed-form lower bound on A gives a profile-free
eps upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError


def _check_profile(cards, alpha: int) -> None:
    if not cards:
        raise DomainError("cardinality profile is empty")
    if any(c < 1 for c in cards):
        raise DomainError("cardinalities must be positive")
    if alpha < 1 or alpha > len(cards):
        raise DomainError(f"alpha must be in [1, {len(cards)}], got {alpha}")


def n_total(cards: list[int]) -> int:
    """Number of distinct group assignments with this cardinality profile."""
    if not cards or any(c < 1 for c in cards):
        raise DomainError("cardinalities must be positive")
    total = math.factorial(sum(cards))
    for c in cards:
        total //= math.factorial(c)
    return total


def _elementary_symmetric(values: list[int], k: int) -> int:
    """Sum over all k-subsets of the product of the chosen values."""
    e = [0] * (k + 1)
    e[0] = 1
    for v in values:
        for j in range(min(k, len(e) - 1), 0, -1):
            e[j] += v * e[j - 1]
    return e[k]


def prob_candidate(cards: list[int], alpha: int) -> Fraction:
    """Probability a random grouping keeps alpha designated addresses apart.

    The designated addresses come from alpha distinct original groups; the
    grouping is uniform over all assignments with the given profile.
    """
    _check_profile(cards, alpha)
    D = sum(cards)
    numerator = math.factorial(alpha) * _elementary_symmetric(cards, alpha)
    denominator = 1
    for i in range(alpha):
        denominator *= D - i
    return Fraction(numerator, denominator)


def prob_candidate_bruteforce(cards: list[int], alpha: int) -> Fraction:
    """Oracle for prob_candidate: enumerate every grouping outright (D <= 10)."""
    _check_profile(cards, alpha)
    D = sum(cards)
    if D > 10:
        raise DomainError("brute force capped at D <= 10")
    # Original grouping: group g owns a contiguous run of addresses; the
    # designated known addresses are the first address of groups 0..alpha-1.
    designated = []
    start = 0
    for g, c in enumerate(cards):
        if g < alpha:
            designated.append(start)
        start += c
    labels = []
    for g, c in enumerate(cards):
        labels.extend([g] * c)

    hits = 0
    total = 0

    def assignments(remaining: list[int], chosen: list[int]):
        nonlocal hits, total
        if len(chosen) == D:
            total += 1
            picked = [chosen[i] for i in designated]
            if len(set(picked)) == alpha:
                hits += 1
            return
        seen = set()
        for idx, label in enumerate(remaining):
            if label in seen:
                continue
            seen.add(label)
            assignments(remaining[:idx] + remaining[idx + 1 :], chosen + [label])

    assignments(labels, [])
    return Fraction(hits, total)


def _neg_log(value: Fraction) -> float:
    if value <= 0:
        raise DomainError("probability must be positive")
    return math.log(value.denominator) - math.log(value.numerator)


def eps_exact(cards: list[int], alpha: int) -> float:
    """-ln A for the exact survival probability A."""
    return _neg_log(prob_candidate(cards, alpha))


def bound_candidate(d: int, D: int, alpha: int) -> Fraction:
    """Closed-form upper bound on A; tight when all groups have D/d members."""
    if d < 1 or D < d:
        raise DomainError("need 1 <= d <= D")
    if alpha < 1 or alpha > d:
        raise DomainError(f"alpha must be in [1, {d}], got {alpha}")
    value = Fraction(D, d) ** alpha
    for i in range(alpha):
        value *= Fraction(d - i, D - i)
    return value


def eps_bound(d: int, D: int, alpha: int) -> float:
    """-ln of the bound: a profile-free lower bound on eps_exact."""
    return _neg_log(bound_candidate(d, D, alpha))


def expected_candidates(eps: float, n_views: int) -> float:
    """e^-eps times the view count: how many views survive elimination on average."""
    if eps < 0 or n_views < 0:
        raise DomainError("eps and view count must be nonnegative")
    return math.exp(-eps) * n_views


def setup_leakage_ok(d: int, D: int, n_views: int) -> bool:
    """True when the key-vector space (2d-2)^D exceeds the published view count."""
    if d < 2:
        raise DomainError("need at least two groups")
    if D < 1 or n_views < 0:
        raise DomainError("need D >= 1 and a nonnegative view count")
    return (2 * d - 2) ** D > n_views


@dataclass
class EpsReport:
    cards: list[int]
    alpha: int
    A: Fraction
    eps_exact: float
    eps_bound: float
    expected_candidates: float | None = None


def make_eps_report(cards: list[int], alpha: int, n_views: int | None = None) -> EpsReport:
    A = prob_candidate(cards, alpha)
    exact = _neg_log(A)
    bound = eps_bound(len(cards), sum(cards), alpha)
    expected = expected_candidates(exact, n_views) if n_views is not None else None
    return EpsReport(
        cards=list(cards),
        alpha=alpha,
        A=A,
        eps_exact=exact,
        eps_bound=bound,
        expected_candidates=expected,
    )
