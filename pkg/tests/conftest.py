import hashlib

import pytest

from mvanon import DetRng, derive_key, generate_trace

# Master keys must look uniformly random: the position-i PRF block is the
# address prefix written over the pad block, so a pad with long zero runs
# collapses neighboring positions into one block and the walk degenerates.
MASTER1 = hashlib.sha256(b"mvanon test master one").digest()
MASTER2 = hashlib.sha256(b"mvanon test master two").digest()


@pytest.fixture
def key1():
    return derive_key(MASTER1)


@pytest.fixture
def key2():
    return derive_key(MASTER2)


@pytest.fixture
def rng():
    return DetRng(b"\x07" * 32)


def make_rng(tag: int) -> DetRng:
    return DetRng(bytes([tag % 256]) * 32)


def small_trace(tag: int = 0, groups: int = 3, ips_per_group=2, records_per_ip: int = 3,
                prefix_bits: int = 16, cross_group: bool = False):
    return generate_trace(
        groups=groups,
        ips_per_group=ips_per_group,
        records_per_ip=records_per_ip,
        prefix_bits=prefix_bits,
        rng=make_rng(tag),
        cross_group=cross_group,
    )
