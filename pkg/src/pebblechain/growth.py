"""Online fractal hash-chain growth.

Grows a chain one element at a time without knowing its final length, and
keeps exactly the pebbles Jakobsson's traversal needs. Each step costs one
hash evaluation. :func:`finalize` adds the seed pebble and hands a ready
:class:`~pebblechain.traversal.TraversalState` to the exposure phase.

Coordinates
-----------
``distance_from_seed`` counts hash applications from the seed, so the seed
is 0 and the newest element is ``total_hash_elements - 1``.

``position`` lives in a window of ``2**exponent`` positions, where
``2**exponent`` is the smallest power of two that is at least
``total_hash_elements``. In that window a pebble sits at
``2**exponent - distance_from_seed``. This is why positions only change when
the window doubles (all shift by the old window size) or when a pebble is
refreshed to the front (it drops by ``move_increment``). :func:`index_map`
turns a window position into a position of the grown chain, where the newest
element is position 1 and the seed is position ``total_hash_elements``.

A pebble is refreshed when ``total == move_increment + distance_from_seed + 1``.
This is the only trigger that keeps every refreshed pebble exactly
``move_increment`` elements nearer the front.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ContractError, StateError
from .hashing import DEFAULT_MODE, CombineMode, chain_input, check_digest, compress, evaluate, get_provider
from .traversal import Pebble, TraversalState


@dataclass
class GrowthState:
    seed: bytes
    grow_value: bytes
    provider: str
    mode: CombineMode = DEFAULT_MODE
    total_hash_elements: int = 1
    grow_pebble: int = 1
    exponent: int = 1
    pebbles: list[Pebble] = field(default_factory=list)
    finalized: bool = False
    evidence_log: list[bytes | None] | None = None  # step-aligned c(E), kept only on request
    hash_count: int = 0
    max_pebbles: int = 0
    bound_steps: int = 0

    @property
    def window(self) -> int:
        return 2**self.exponent

    @property
    def sigma(self) -> int:
        """Pebble count once finalized (growth pebbles plus the seed pebble)."""
        return self.exponent

    def distance_from_front(self, p: Pebble) -> int:
        return self.total_hash_elements - p.distance_from_seed


def growth_init(
    seed: bytes,
    provider: str,
    mode: CombineMode | str = DEFAULT_MODE,
    *,
    keep_evidence: bool = False,
) -> GrowthState:
    p = get_provider(provider)
    seed = check_digest(p, seed)
    return GrowthState(
        seed=seed,
        grow_value=seed,
        provider=p.name,
        mode=CombineMode(mode),
        evidence_log=[] if keep_evidence else None,
    )


def initialize_pebble(j: int, value: bytes) -> Pebble:
    if j < 1:
        raise ContractError(f"pebble index must be >= 1, got {j}")
    return Pebble(
        position=2**j,
        destination=2**j,
        start_increment=3 * 2**j,
        dest_increment=2 ** (j + 1),
        move_increment=2 ** (j + 1),
        value=value,
        origin_index=j,
    )


def _is_power_of_two(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def grow_step(
    state: GrowthState,
    evidence: bytes | None = None,
    *,
    compressed: bytes | None = None,
) -> bytes:
    """Append one element; returns the new ``grow_value``.

    ``evidence`` is a raw chunk bound into this step; ``compressed`` is its
    already-computed ``c(E)``.
    """
    if state.finalized:
        raise StateError("growth phase is over; the chain was finalized")
    if evidence is not None and compressed is not None:
        raise ContractError("pass either evidence or compressed, not both")
    if evidence is not None:
        compressed = compress(state.provider, evidence)
    if compressed is not None:
        compressed = check_digest(state.provider, compressed)
        state.bound_steps += 1
    if state.evidence_log is not None:
        state.evidence_log.append(compressed)

    state.grow_value = evaluate(state.provider, chain_input(state.grow_value, compressed, state.mode))
    state.hash_count += 1
    state.total_hash_elements += 1
    total = state.total_hash_elements
    newest = total - 1  # distance_from_seed of grow_value

    if total - 1 >= 2 and _is_power_of_two(total - 1):
        state.exponent += 1
        for p in state.pebbles:
            p.position += 2 ** (state.exponent - 1)
        peb = initialize_pebble(state.grow_pebble, state.grow_value)
        peb.distance_from_seed = newest
        state.pebbles.append(peb)
        state.grow_pebble += 1
    else:
        for p in state.pebbles:
            if total == p.move_increment + p.distance_from_seed + 1:
                p.value = state.grow_value
                p.distance_from_seed = newest
                p.position -= p.move_increment

    # index_map(position) == total - distance_from_seed follows from this one
    window = 1 << state.exponent
    for p in state.pebbles:
        assert p.position == window - p.distance_from_seed, (total, p)
    if len(state.pebbles) > state.max_pebbles:
        state.max_pebbles = len(state.pebbles)
    return state.grow_value


def grow(state: GrowthState, steps: int) -> GrowthState:
    for _ in range(steps):
        grow_step(state)
    return state


def index_map(state: GrowthState | "ExposureHandoff", i: int) -> int:
    """Window position ``i`` -> grown-chain position: ``i - (2**sigma - total)``."""
    sigma = state.sigma
    total = state.total_hash_elements
    if total > 2**sigma:
        raise ContractError(f"total {total} exceeds 2**sigma = {2**sigma}")
    return i - (2**sigma - total)


@dataclass
class ExposureHandoff:
    traversal: TraversalState
    total_hash_elements: int
    index_offset: int
    sigma: int
    grow_value: bytes
    seed: bytes

    @property
    def current_position(self) -> int:
        """Front of the grown chain counted from the seed side: ``total_hash_elements``."""
        return self.total_hash_elements

    @property
    def current_value(self) -> bytes:
        return self.grow_value


def finalize(state: GrowthState, evidence: Sequence[bytes | None] | None = None) -> ExposureHandoff:
    """Place the seed pebble and switch to the exposure phase.

    ``evidence`` is the step-aligned list of compressed evidence; it defaults
    to the state's own log and is required if any step was evidence-bound.
    """
    if state.finalized:
        raise StateError("chain already finalized")
    if state.total_hash_elements < 2:
        raise ContractError("a one-element chain has nothing to traverse")
    if evidence is None:
        evidence = state.evidence_log
    if evidence is not None:
        evidence = tuple(None if c is None else bytes(c) for c in evidence)
        if len(evidence) != state.total_hash_elements - 1:
            raise ContractError(f"need {state.total_hash_elements - 1} evidence entries, got {len(evidence)}")
        if all(c is None for c in evidence):
            evidence = None
    if state.bound_steps and evidence is None:
        raise ContractError("evidence-bound chain needs its evidence to be traversed")

    seed_pebble = initialize_pebble(state.grow_pebble, state.seed)
    seed_pebble.distance_from_seed = 0
    assert seed_pebble.position == state.window
    state.pebbles.append(seed_pebble)
    state.pebbles.sort(key=lambda p: p.position)
    for p in state.pebbles:
        p.destination = p.position
    state.finalized = True
    state.max_pebbles = max(state.max_pebbles, len(state.pebbles))

    offset = state.window - state.total_hash_elements
    traversal = TraversalState(
        n=state.window,
        current_position=offset,
        current_value=state.grow_value,
        pebbles=state.pebbles,
        provider=state.provider,
        mode=state.mode,
        evidence=evidence,
        offset=offset,
    )
    return ExposureHandoff(
        traversal=traversal,
        total_hash_elements=state.total_hash_elements,
        index_offset=offset,
        sigma=len(state.pebbles),
        grow_value=state.grow_value,
        seed=state.seed,
    )
