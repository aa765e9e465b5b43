import hashlib
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pebblechain import ContractError, UnknownProviderError
from pebblechain.hashing import (
    CombineMode,
    HashProvider,
    Registry,
    chain_input,
    check_digest,
    combine,
    compress,
    default_registry,
    evaluate,
    get_provider,
    mix64,
    registry,
)
from reference import ref_mix, ref_mix64_hash, ref_unmix

# frozen from tests/reference.py; mix64(1) is also the published MurmurHash3 fmix64 value
MIX64_ONE = 0xB456BCFC34C2CB2C
DIGEST_0_TO_15 = bytes.fromhex("27114817306abf9e")
DIGEST_ABC = bytes.fromhex("7abf885e1a556029")


def test_zero_is_a_fixed_point():
    assert mix64(0) == 0
    assert evaluate("mix64-test", bytes(8)) == bytes(8)


def test_frozen_values():
    assert mix64(1) == MIX64_ONE
    assert evaluate("mix64-test", b"\x01") == struct.pack("<Q", MIX64_ONE)
    assert evaluate("mix64-test", bytes(range(16))) == DIGEST_0_TO_15
    assert evaluate("mix64-test", b"abc") == DIGEST_ABC


def test_short_inputs_are_zero_padded():
    assert evaluate("mix64-test", b"abc") == evaluate("mix64-test", b"abc" + bytes(5))
    assert evaluate("mix64-test", b"") == bytes(8)


def test_long_inputs_fold_blocks():
    a, b = 0x0706050403020100, 0x0F0E0D0C0B0A0908
    assert evaluate("mix64-test", bytes(range(16))) == struct.pack("<Q", mix64(mix64(a) ^ b))


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_mix_matches_reference_and_inverts(x):
    assert mix64(x) == ref_mix(x)
    assert ref_unmix(mix64(x)) == x


@given(st.binary(max_size=100))
def test_mix64_digest_matches_reference(data):
    assert evaluate("mix64-test", data) == ref_mix64_hash(data)


@given(st.binary(max_size=64))
def test_hashlib_providers(data):
    assert evaluate("sha256", data) == hashlib.sha256(data).digest()
    assert evaluate("sha1", data) == hashlib.sha1(data).digest()
    assert evaluate("sha3-256", data) == hashlib.sha3_256(data).digest()


def test_at_least_three_production_providers():
    production = [n for n in registry.names() if n != "mix64-test"]
    assert len(production) >= 3
    assert len({get_provider(n).width for n in registry.names()}) >= 2


def test_compress_is_length_prefixed():
    assert compress("sha256", b"ab") == hashlib.sha256(struct.pack("<Q", 2) + b"ab").digest()
    # without the prefix, trailing zero padding would collide
    assert compress("mix64-test", b"a") != compress("mix64-test", b"a\x00")
    assert len(compress("sha1", b"")) == 20


def test_combine_modes():
    v, c = bytes([1, 2, 3, 4, 5, 6, 7, 8]), bytes([8, 7, 6, 5, 4, 3, 2, 1])
    assert combine(v, c, "concat") == v + c
    assert combine(v, c, CombineMode.XOR) == bytes(a ^ b for a, b in zip(v, c))
    with pytest.raises(ContractError):
        combine(v, c[:4], "xor")
    assert chain_input(v, None, "xor") == v


def test_unknown_provider_message():
    with pytest.raises(UnknownProviderError) as info:
        evaluate("md4-nope", b"")
    assert "unknown hash provider" in str(info.value)
    with pytest.raises(KeyError):
        get_provider("md4-nope")


def test_external_provider_registration():
    reg = default_registry()
    reg.register(HashProvider("sha512-256", 32, lambda b: hashlib.sha512(b).digest()[:32]))
    assert "sha512-256" in reg
    with pytest.raises(ContractError):
        reg.register(HashProvider("sha512-256", 32, lambda b: b))
    assert "sha512-256" not in registry  # the shared registry is untouched


def test_provider_contract():
    with pytest.raises(ContractError):
        HashProvider("bad name", 8, lambda b: b)
    with pytest.raises(ContractError):
        HashProvider("tiny", 4, lambda b: b)
    wrong = HashProvider("wrong-width", 8, lambda b: b"short")
    with pytest.raises(ContractError):
        wrong(b"x")
    with pytest.raises(ContractError):
        check_digest("sha256", bytes(8))


def test_registry_is_sorted_and_iterable():
    reg = Registry()
    reg.register(HashProvider("b", 8, lambda x: bytes(8)))
    reg.register(HashProvider("a", 8, lambda x: bytes(8)))
    assert list(reg) == ["a", "b"]
