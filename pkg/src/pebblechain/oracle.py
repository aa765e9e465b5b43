"""Brute-force reference chain.

Materializes every element so the pebble engines can be checked against it.
Positions follow the exposure convention: position 1 is disclosed first and
position ``n`` is the seed; ``element_at(q)`` is ``v_q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ContractError
from .hashing import (
    DEFAULT_MODE,
    CombineMode,
    chain_input,
    check_digest,
    compress,
    evaluate,
    get_provider,
)


@dataclass(frozen=True)
class FullChain:
    provider: str
    mode: CombineMode
    elements: tuple[bytes, ...]  # v_n, v_{n-1}, ..., v_0
    evidence: tuple[bytes, ...] | None = field(default=None)  # step-aligned: evidence[s-1] maps v_{n-s+1} -> v_{n-s}

    @property
    def n(self) -> int:
        return len(self.elements) - 1

    @property
    def seed(self) -> bytes:
        return self.elements[0]

    @property
    def front(self) -> bytes:
        """``v_0``, the newest element."""
        return self.elements[-1]

    def element_at(self, position: int) -> bytes:
        return element_at(self, position)

    def exposure(self) -> list[bytes]:
        """Elements in disclosure order, positions 1..n."""
        return [self.elements[self.n - q] for q in range(1, self.n + 1)]


def build_chain(
    provider: str,
    seed: bytes,
    n: int,
    evidence: Sequence[bytes] | None = None,
    mode: CombineMode | str = DEFAULT_MODE,
    *,
    compressed: Sequence[bytes] | None = None,
) -> FullChain:
    """Compute ``v_n .. v_0`` by ``n`` forward applications from ``seed``.

    ``evidence`` holds raw chunks ``E_n .. E_1`` (compressed here); pass
    ``compressed`` instead when the ``c(E_i)`` values are already known.
    """
    if n < 1:
        raise ContractError(f"chain length must be >= 1, got {n}")
    if evidence is not None and compressed is not None:
        raise ContractError("pass either evidence or compressed, not both")
    p = get_provider(provider)
    mode = CombineMode(mode)
    seed = check_digest(p, seed)
    if evidence is not None:
        compressed = [compress(p, e) for e in evidence]
    if compressed is not None:
        compressed = tuple(bytes(c) for c in compressed)
        if len(compressed) != n:
            raise ContractError(f"need {n} evidence entries, got {len(compressed)}")
        for c in compressed:
            check_digest(p, c)

    elements = [seed]
    v = seed
    for s in range(n):
        v = evaluate(p, chain_input(v, compressed[s] if compressed else None, mode))
        elements.append(v)
    return FullChain(p.name, mode, tuple(elements), compressed)


def element_at(chain: FullChain, position: int) -> bytes:
    if not 1 <= position <= chain.n:
        raise IndexError(f"position {position} outside 1..{chain.n}")
    return chain.elements[chain.n - position]


def dump(chain: FullChain) -> str:
    """Golden-file text: a header, then ``position<TAB>hex`` in disclosure order."""
    lines = [f"pebblechain-oracle v1 {chain.provider} {chain.mode.value} {chain.n}"]
    lines += [f"{q}\t{chain.element_at(q).hex()}" for q in range(1, chain.n + 1)]
    return "\n".join(lines) + "\n"
