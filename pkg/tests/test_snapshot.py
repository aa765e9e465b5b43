import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SEED, seed_for
from pebblechain import FormatError, build_chain, finalize, grow_step, growth_init
from pebblechain import snapshot
from pebblechain.traversal import run


def test_growing_header_and_pebble_lines():
    state = growth_init(SEED, "mix64-test")
    for _ in range(6):
        grow_step(state)
    text = snapshot.dumps(state)
    lines = text.splitlines()
    assert lines[0] == "pebblechain-state v1 mix64-test concat 7"
    assert lines[1] == "phase growing"
    assert sum(line.startswith("pebble ") for line in lines) == 2
    assert lines[-1] == state.grow_value.hex()
    assert snapshot.dumps(snapshot.loads(text)) == text


def test_initial_state_round_trip():
    text = snapshot.dumps(growth_init(SEED, "mix64-test"))
    assert snapshot.dumps(snapshot.loads(text)) == text


@given(
    st.integers(min_value=1, max_value=200),
    st.integers(min_value=0, max_value=200),
    st.sampled_from(["mix64-test", "sha1", "sha256"]),
    st.booleans(),
)
@settings(max_examples=40, deadline=None)
def test_resume_anywhere(total, emitted, provider, with_evidence):
    seed = seed_for(provider)
    chunks = [bytes([i % 256]) * (i % 5) for i in range(total - 1)]
    state = growth_init(seed, provider, keep_evidence=with_evidence)
    for c in chunks:
        grow_step(state, c if with_evidence else None)
    text = snapshot.dumps(state)
    state = snapshot.loads(text)
    assert snapshot.dumps(state) == text
    if total < 2:
        return
    handoff = finalize(state)
    emitted = min(emitted, total)
    first = run(handoff.traversal, emitted)
    text = snapshot.dumps(handoff)
    resumed = snapshot.loads(text)
    assert snapshot.dumps(resumed) == text
    rest = run(resumed.traversal)
    oracle = build_chain(provider, seed, total, evidence=chunks + [b""] if with_evidence else None)
    assert first + rest == oracle.exposure()


def test_snapshot_of_finalized_growth_state_is_refused():
    state = growth_init(SEED, "mix64-test")
    grow_step(state)
    finalize(state)
    with pytest.raises(FormatError):
        snapshot.dumps(state)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda ls: ["nonsense"] + ls[1:],
        lambda ls: [ls[0].replace("v1", "v9")] + ls[1:],
        lambda ls: [ls[0], "phase sideways"] + ls[2:],
        lambda ls: ls[:2] + ["seed zz"] + ls[3:],
        lambda ls: ls[:-1] + ["00"],
        lambda ls: ls[:4] + ["pebble 1 2"] + ls[4:],
        lambda ls: ls[:2],
    ],
)
def test_malformed_snapshots(mutate):
    state = growth_init(SEED, "mix64-test")
    for _ in range(5):
        grow_step(state)
    lines = snapshot.dumps(state).splitlines()
    with pytest.raises(FormatError):
        snapshot.loads("\n".join(mutate(lines)) + "\n")


def test_unknown_provider_in_header():
    text = snapshot.dumps(growth_init(SEED, "mix64-test")).replace("mix64-test", "nope", 1)
    with pytest.raises(KeyError):
        snapshot.loads(text)


def test_files(tmp_path):
    state = growth_init(SEED, "mix64-test")
    for _ in range(9):
        grow_step(state)
    path = tmp_path / "s.state"
    snapshot.save(state, path)
    assert snapshot.dumps(snapshot.load(path)) == path.read_text()
