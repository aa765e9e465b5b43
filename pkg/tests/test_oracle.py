import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SEED
from pebblechain import ContractError, build_chain, compress, element_at, evaluate
from pebblechain.oracle import dump
from reference import ref_compress, ref_exposure

# frozen from tests/reference.py: three forward applications from SEED
N3_ELEMENTS = ["6a5d3545d53ab65a", "e21b2b8bc34a6e7d", "2ccbc234fcbc56b4", "0100000000000000"]


def test_frozen_small_chain():
    chain = build_chain("mix64-test", SEED, 3)
    assert [v.hex() for v in reversed(chain.elements)] == N3_ELEMENTS
    assert chain.seed == SEED and chain.element_at(3) == SEED
    assert chain.front.hex() == N3_ELEMENTS[0]
    assert chain.exposure() == [bytes.fromhex(h) for h in N3_ELEMENTS[1:]]


def test_recurrence_holds_everywhere():
    chain = build_chain("sha256", evaluate("sha256", b"s"), 20)
    for q in range(2, 21):
        assert element_at(chain, q - 1) == evaluate("sha256", element_at(chain, q))


@given(st.lists(st.binary(max_size=12), min_size=1, max_size=20), st.sampled_from(["mix64-test", "sha1"]))
@settings(max_examples=50)
def test_evidence_binding_matches_reference(chunks, provider):
    seed = evaluate(provider, b"e")
    n = len(chunks)
    chain = build_chain(provider, seed, n, evidence=chunks)
    compressed = [ref_compress(provider, c) for c in chunks]
    ref = ref_exposure(provider, seed, n + 1, compressed)
    assert list(reversed(chain.elements)) == ref
    assert chain.evidence == tuple(compress(provider, c) for c in chunks)


def test_evidence_changes_every_shallower_element():
    chunks = [b"a", b"b", b"c", b"d"]
    plain = build_chain("mix64-test", SEED, 4, evidence=chunks)
    altered = build_chain("mix64-test", SEED, 4, evidence=[b"a", b"X", b"c", b"d"])
    # the second step produces v_2; everything from there to the front differs
    assert plain.element_at(3) == altered.element_at(3)
    assert all(plain.element_at(q) != altered.element_at(q) for q in (1, 2))
    assert plain.front != altered.front


def test_out_of_range_and_contracts():
    chain = build_chain("mix64-test", SEED, 4)
    with pytest.raises(IndexError):
        element_at(chain, 0)
    with pytest.raises(IndexError):
        element_at(chain, 5)
    with pytest.raises(ContractError):
        build_chain("mix64-test", SEED, 0)
    with pytest.raises(ContractError):
        build_chain("mix64-test", SEED, 3, evidence=[b"x"])
    with pytest.raises(ContractError):
        build_chain("mix64-test", bytes(4), 3)


def test_dump_format():
    text = dump(build_chain("mix64-test", SEED, 3))
    lines = text.splitlines()
    assert lines[0] == "pebblechain-oracle v1 mix64-test concat 3"
    assert lines[1:] == [f"{q}\t{h}" for q, h in enumerate(N3_ELEMENTS[1:], start=1)]


def test_no_duplicates_at_two_to_the_twenty():
    chain = build_chain("mix64-test", SEED, 2**20)
    assert len(set(chain.elements)) == len(chain.elements)
