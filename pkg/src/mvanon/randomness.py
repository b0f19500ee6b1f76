"""Deterministic, labeled randomness.

Every random choice in the toolkit flows through a DetRng so that an owner
can regenerate any protocol artifact from the seed material alone.  Streams
are SHA-256 counter chains; distinct (purpose, iteration) labels give
computationally independent streams.
"""

from __future__ import annotations

import hashlib

from .errors import DomainError


def seed_from_hex(text: str) -> bytes:
    """Hash arbitrary-length hex material down to a 256-bit seed."""
    text = text.strip()
    try:
        raw = bytes.fromhex(text)
    except ValueError as exc:
        raise DomainError(f"seed is not hex: {text!r}") from exc
    return hashlib.sha256(b"seed:" + raw).digest()


def seed_from_parts(*parts: bytes) -> bytes:
    """Bind several byte strings into one seed, length-prefixed to avoid splices."""
    h = hashlib.sha256()
    for part in parts:
        h.update(len(part).to_bytes(8, "big"))
        h.update(part)
    return h.digest()


class RandomStream:
    """One labeled stream: an SHA-256 counter generator with a bit buffer."""

    def __init__(self, seed: bytes, purpose: str, iteration: int):
        tag = purpose.encode("utf-8")
        self._base = hashlib.sha256(
            seed + len(tag).to_bytes(4, "big") + tag + iteration.to_bytes(8, "big", signed=True)
        ).digest()
        self._counter = 0
        self._bits = 0
        self._nbits = 0

    def _refill(self) -> None:
        block = hashlib.sha256(self._base + self._counter.to_bytes(8, "big")).digest()
        self._counter += 1
        self._bits = (self._bits << 256) | int.from_bytes(block, "big")
        self._nbits += 256

    def getrandbits(self, k: int) -> int:
        if k < 0:
            raise DomainError("bit count must be nonnegative")
        while self._nbits < k:
            self._refill()
        self._nbits -= k
        value = self._bits >> self._nbits
        self._bits &= (1 << self._nbits) - 1
        return value

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise DomainError("randbelow needs a positive bound")
        k = (n - 1).bit_length()
        while True:
            value = self.getrandbits(k)
            if value < n:
                return value

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        if hi < lo:
            raise DomainError("empty range")
        return lo + self.randbelow(hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise DomainError("choice from empty sequence")
        return seq[self.randbelow(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates; uniform over all orderings."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order random."""
        if k < 0 or k > len(seq):
            raise DomainError("sample size out of range")
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]


class DetRng:
    """Factory for labeled streams off one 256-bit seed."""

    def __init__(self, seed: bytes):
        if len(seed) != 32:
            raise DomainError("DetRng seed must be 32 bytes")
        self.seed = seed

    @classmethod
    def from_hex(cls, text: str) -> "DetRng":
        return cls(seed_from_hex(text))

    def stream(self, purpose: str, iteration: int = 0) -> RandomStream:
        return RandomStream(self.seed, purpose, iteration)
