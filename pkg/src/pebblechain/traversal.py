"""Jakobsson's amortized preimage traversal.

A :class:`TraversalState` holds ``k`` pebbles for a chain of ``n = 2**k``
positions and emits positions ``1..n`` one per :func:`traversal_step`, using
O(log n) storage and O(log n) amortized hash work per element.

The same machinery runs the exposure phase of the online growth algorithm.
There the pebbles live in a ``2**sigma`` window whose first ``offset``
positions were never generated; see :mod:`pebblechain.growth`.

The ``law_*`` functions are closed forms of the pebble bookkeeping used by
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import ContractError, ExhaustedError
from .hashing import CombineMode, chain_input, get_provider
from .oracle import FullChain


@dataclass
class Pebble:
    position: int
    destination: int
    start_increment: int
    dest_increment: int
    value: bytes
    move_increment: int = 0
    distance_from_seed: int = 0
    disposed: bool = False
    origin_index: int = 0
    back_moves: int = 0  # instrumentation only; never persisted

    @property
    def in_transit(self) -> bool:
        return not self.disposed and self.position != self.destination


@dataclass(frozen=True)
class BackMove:
    step: int  # current position at which the move happened
    origin_index: int
    count: int  # k: how many back moves this pebble has made so far
    position: int
    destination: int
    disposed: bool


def _sort_key(p: Pebble) -> tuple:
    # ties on position: larger destination first
    return (p.disposed, p.position, -p.destination)


@dataclass
class TraversalState:
    n: int
    current_position: int
    current_value: bytes
    pebbles: list[Pebble]
    provider: str
    mode: CombineMode
    evidence: tuple[bytes | None, ...] | None = None  # step-aligned compressed evidence
    offset: int = 0
    hash_count: int = 0
    max_live: int = 0  # steps never add pebbles, so this is the count at setup
    back_log: list[BackMove] = field(default_factory=list)
    disposals: list[tuple[int, int]] = field(default_factory=list)  # (step, origin_index)

    def __post_init__(self) -> None:
        self.pebbles.sort(key=_sort_key)
        self.max_live = max(self.max_live, self.live_count)
        provider = get_provider(self.provider)
        provider(self.current_value)  # width check once; the hot path calls the raw function
        self._h = provider.fn

    @property
    def live(self) -> list[Pebble]:
        return [p for p in self.pebbles if not p.disposed]

    @property
    def live_count(self) -> int:
        return sum(1 for p in self.pebbles if not p.disposed)

    @property
    def chain_length(self) -> int:
        """Number of positions this state will emit in total."""
        return self.n - self.offset

    @property
    def emitted(self) -> int:
        return self.current_position - self.offset

    @property
    def exhausted(self) -> bool:
        return self.current_position >= self.n

    def exposure_position(self, position: int) -> int:
        """Window position -> position in the emitted chain (1 = first out)."""
        return position - self.offset

    def hash_from(self, value: bytes, position: int) -> bytes:
        """One application of ``h``: the element at ``position`` to ``position - 1``."""
        self.hash_count += 1
        if self.evidence is None:
            return self._h(value)
        return self._h(chain_input(value, self.evidence[self.n - position], self.mode))

    def __iter__(self) -> Iterator[bytes]:
        while not self.exhausted:
            yield traversal_step(self)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def jakobsson_setup(chain: FullChain) -> TraversalState:
    n = chain.n
    if n < 2 or not _is_power_of_two(n):
        raise ContractError(f"Jakobsson setup needs n = 2**k with k >= 1, got {n}")
    k = n.bit_length() - 1
    pebbles = [
        Pebble(
            position=2**j,
            destination=2**j,
            start_increment=3 * 2**j,
            dest_increment=2 ** (j + 1),
            move_increment=2 ** (j + 1),
            value=chain.element_at(2**j),
            origin_index=j,
        )
        for j in range(1, k + 1)
    ]
    return TraversalState(
        n=n,
        current_position=0,
        current_value=chain.front,
        pebbles=pebbles,
        provider=chain.provider,
        mode=chain.mode,
        evidence=chain.evidence,
    )


def find_value(state: TraversalState, target: int, exclude: Pebble | None = None) -> bytes:
    """Element at ``target``, hashed down from the nearest stored pebble at or above it."""
    best = None
    for p in state.pebbles:
        if p.disposed or p is exclude or p.position < target:
            continue
        if best is None or p.position < best.position:
            best = p
    if best is None:
        raise AssertionError(f"no stored value at or above position {target}")
    value = best.value
    for q in range(best.position, target, -1):
        value = state.hash_from(value, q)
    return value


def traversal_step(state: TraversalState) -> bytes:
    """Advance one position and return the element disclosed there.

    Emission and relocation of the first pebble happen as one step.
    """
    if state.current_position >= state.n:
        raise ExhaustedError("chain exhausted")
    state.current_position += 1
    cur = state.current_position

    moved = False
    for p in state.pebbles:
        if p.position != p.destination and not p.disposed:
            p.value = state.hash_from(state.hash_from(p.value, p.position), p.position - 1)
            p.position -= 2
            moved = True

    first = state.pebbles[0]
    if cur % 2:
        assert first.position == cur + 1, (cur, first)
        out = state.hash_from(first.value, first.position)
    else:
        assert first.position == cur, (cur, first)
        out = first.value
        first.position += first.start_increment
        first.destination += first.dest_increment
        first.back_moves += 1
        if first.destination > state.n:
            first.disposed = True
            state.disposals.append((cur, first.origin_index))
        else:
            first.value = find_value(state, first.position, exclude=first)
        state.back_log.append(
            BackMove(cur, first.origin_index, first.back_moves, first.position, first.destination, first.disposed)
        )
        moved = True
    # Sorting on odd steps too keeps the list ordered at every observation
    # point; in-transit pebbles can overtake a parked one between relocations.
    if moved:
        state.pebbles.sort(key=_sort_key)

    state.current_value = out
    return out


def trace_row(state: TraversalState, emitted: bytes) -> str:
    """Tab-separated row for the step just taken: step, digest, live positions, disposals."""
    cur = state.current_position
    positions = ",".join(str(state.exposure_position(p.position)) for p in state.live)
    gone = ",".join(f"p{origin}" for step, origin in state.disposals if step == cur)
    return f"{state.emitted}\t{emitted.hex()}\t{positions or '-'}\t{gone or '-'}"


def law_destination(j: int, k: int) -> int:
    """D(j, k): destination of origin-j pebble after k back moves."""
    return 2**j + k * 2 ** (j + 1)


def law_position_bound(j: int, k: int) -> int:
    """P(j, k): upper bound on its position after k back moves."""
    return 2**j + k * 3 * 2**j


def law_back_moves(j: int, n: int) -> int:
    """Back moves of origin-j pebble over the first n/2 emissions, n = 2**(k+1)."""
    if not _is_power_of_two(n) or n < 4:
        raise ContractError(f"n must be 2**(k+1) with k >= 1, got {n}")
    k = n.bit_length() - 2
    if not 1 <= j < k:
        raise ContractError(f"need 1 <= j < k={k}, got j={j}")
    return 2 ** (k - j - 1)


def law_reindex(position: int, k: int) -> int:
    """R_k: shift a position down by 2**k after half the chain is emitted."""
    return position - 2**k


def run(state: TraversalState, steps: int | None = None) -> list[bytes]:
    """Take ``steps`` traversal steps (all remaining when None)."""
    if steps is None:
        steps = state.n - state.current_position
    return [traversal_step(state) for _ in range(steps)]


def positions_of(pebbles: Sequence[Pebble]) -> list[int]:
    return sorted(p.position for p in pebbles if not p.disposed)
