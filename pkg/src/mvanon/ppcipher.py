"""Prefix-preserving address cipher.

A 256-bit master key splits into an AES-128 key and a 128-bit pad block.
Bit i of the output is the input bit XORed with a one-bit PRF of the
preceding input bits: the i-1 bit prefix overwrites the top of the pad
block, the block is encrypted, and the least significant bit of the
ciphertext is the PRF value.  Two addresses sharing k leading bits
therefore share exactly k leading output bits, and the transform is
invertible with the key.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import DomainError, IterationLimitError, KeyFormatError

# Default cap on |j| for iterated application; protocol indices are tiny,
# anything near this bound indicates a bug or hostile input.
MAX_ITERATIONS = 1 << 20

_MASK32 = (1 << 32) - 1
# _LOW_MASKS[i] keeps the low 128-i bits of the pad block.
_LOW_MASKS = tuple((1 << (128 - i)) - 1 for i in range(33))


@dataclass(frozen=True)
class PPKey:
    """Cipher key: 16-byte AES key plus 16-byte pad block."""

    cipher_key: bytes
    pad_block: bytes

    def __post_init__(self):
        if len(self.cipher_key) != 16 or len(self.pad_block) != 16:
            raise KeyFormatError("cipher_key and pad_block must be 16 bytes each")


def derive_key(master: bytes) -> PPKey:
    """Split a 256-bit master key into (cipher_key, pad_block)."""
    if len(master) != 32:
        raise KeyFormatError(f"master key must be 32 bytes, got {len(master)}")
    return PPKey(cipher_key=master[:16], pad_block=master[16:])


def parse_master_hex(text: str) -> bytes:
    """Decode key-file content: 64 lowercase hex chars, optional trailing newline."""
    if text.endswith("\n"):
        text = text[:-1]
    if text.endswith("\r"):
        text = text[:-1]
    if len(text) != 64 or any(c not in "0123456789abcdef" for c in text):
        raise KeyFormatError("master key file must hold exactly 64 lowercase hex characters")
    return bytes.fromhex(text)


def load_key_file(path) -> PPKey:
    with open(path, "r", encoding="utf-8") as fh:
        return derive_key(parse_master_hex(fh.read()))


@lru_cache(maxsize=1024)
def _cipher_for(cipher_key: bytes) -> Cipher:
    return Cipher(algorithms.AES(cipher_key), modes.ECB())


def _encrypt_blocks(cipher_key: bytes, data: bytes) -> bytes:
    # Single substitution point for the 128-bit block cipher.
    enc = _cipher_for(cipher_key).encryptor()
    return enc.update(data) + enc.finalize()


def _check_ip(ip: int) -> None:
    if ip < 0 or ip > _MASK32:
        raise DomainError(f"address out of 32-bit range: {ip!r}")


def pp_anonymize(ip: int, key: PPKey) -> int:
    """Encrypt one address, preserving shared-prefix lengths under a fixed key."""
    _check_ip(ip)
    pad = int.from_bytes(key.pad_block, "big")
    blocks = bytearray(512)
    # Block i carries the i-bit prefix over the pad block; block 0 is the pad
    # block untouched, so the first output bit uses a prefix-free PRF value.
    blocks[0:16] = key.pad_block
    for i in range(1, 32):
        padded = ((ip >> (32 - i)) << (128 - i)) | (pad & _LOW_MASKS[i])
        blocks[16 * i : 16 * i + 16] = padded.to_bytes(16, "big")
    ct = _encrypt_blocks(key.cipher_key, bytes(blocks))
    out = 0
    for i in range(32):
        out = (out << 1) | (((ip >> (31 - i)) & 1) ^ (ct[16 * i + 15] & 1))
    return out


def pp_deanonymize(ip: int, key: PPKey) -> int:
    """Invert pp_anonymize.  Sequential: output bit i feeds the PRF for bit i+1."""
    _check_ip(ip)
    pad = int.from_bytes(key.pad_block, "big")
    # ECB has no inter-block state, so one streaming encryptor matches 32
    # independent encryptions while paying the setup cost once.
    enc = _cipher_for(key.cipher_key).encryptor()
    out = 0  # recovered prefix, low-aligned
    for i in range(32):
        if i == 0:
            padded = pad
        else:
            padded = (out << (128 - i)) | (pad & _LOW_MASKS[i])
        f = enc.update(padded.to_bytes(16, "big"))[15] & 1
        out = (out << 1) | (((ip >> (31 - i)) & 1) ^ f)
    return out


def pp_iter(ip: int, key: PPKey, count: int, max_iterations: int = MAX_ITERATIONS) -> int:
    """Apply the cipher |count| times: forward if count > 0, inverse if count < 0.

    Signed counts compose additively, so applying i then j equals applying
    i + j in one call.
    """
    if abs(count) > max_iterations:
        raise IterationLimitError(f"|{count}| exceeds iteration cap {max_iterations}")
    value = ip
    if count >= 0:
        for _ in range(count):
            value = pp_anonymize(value, key)
    else:
        for _ in range(-count):
            value = pp_deanonymize(value, key)
    return value
