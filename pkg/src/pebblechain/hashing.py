"""Hash providers, evidence compression and the combine operator.

Digests are plain ``bytes`` whose length equals the owning provider's width.
Providers live in a :class:`Registry`; the module-level :data:`registry`
ships with ``mix64-test`` plus a handful of standard ``hashlib`` functions.
"""

from __future__ import annotations

import enum
import hashlib
import struct
import threading
from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import ContractError, UnknownProviderError

MASK64 = (1 << 64) - 1
TEST_PROVIDER = "mix64-test"


class CombineMode(str, enum.Enum):
    XOR = "xor"
    CONCAT = "concat"


DEFAULT_MODE = CombineMode.CONCAT


def mix64(x: int) -> int:
    """64-bit finalizer mix (three xor-shifts, two multiplies)."""
    x &= MASK64
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & MASK64
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & MASK64
    x ^= x >> 33
    return x


def mix64_digest(data: bytes) -> bytes:
    # Inputs shorter than one block are zero padded; longer ones are folded
    # block by block as x <- mix(x ^ block).
    if len(data) == 8:
        # single block: mix64 inlined, this is the traversal hot path
        x = int.from_bytes(data, "little")
        x ^= x >> 33
        x = (x * 0xFF51AFD7ED558CCD) & MASK64
        x ^= x >> 33
        x = (x * 0xC4CEB9FE1A85EC53) & MASK64
        x ^= x >> 33
        return x.to_bytes(8, "little")
    if len(data) % 8:
        data = data + bytes(8 - len(data) % 8)
    if not data:
        data = bytes(8)
    x = 0
    for (block,) in struct.iter_unpack("<Q", data):
        x = mix64(x ^ block)
    return struct.pack("<Q", x)


@dataclass(frozen=True)
class HashProvider:
    name: str
    width: int
    fn: Callable[[bytes], bytes]

    def __post_init__(self) -> None:
        if not self.name or any(c.isspace() for c in self.name) or ":" in self.name or "," in self.name:
            raise ContractError(f"invalid provider name {self.name!r}")
        if self.width < 8:
            raise ContractError(f"provider {self.name!r}: width must be >= 8, got {self.width}")

    def __call__(self, data: bytes) -> bytes:
        out = self.fn(bytes(data))
        if len(out) != self.width:
            raise ContractError(f"provider {self.name!r} returned {len(out)} bytes, declared {self.width}")
        return out


def _hashlib_fn(algorithm: str, **kwargs) -> Callable[[bytes], bytes]:
    def fn(data: bytes) -> bytes:
        return hashlib.new(algorithm, data, **kwargs).digest()

    return fn


def _blake2b(size: int) -> Callable[[bytes], bytes]:
    def fn(data: bytes) -> bytes:
        return hashlib.blake2b(data, digest_size=size).digest()

    return fn


class Registry:
    """Name -> provider map. Providers are immutable once registered."""

    def __init__(self) -> None:
        self._providers: dict[str, HashProvider] = {}
        self._lock = threading.Lock()

    def register(self, provider: HashProvider) -> HashProvider:
        with self._lock:
            if provider.name in self._providers:
                raise ContractError(f"provider {provider.name!r} already registered")
            self._providers[provider.name] = provider
        return provider

    def get(self, name: str | HashProvider) -> HashProvider:
        if isinstance(name, HashProvider):
            return name
        try:
            return self._providers[name]
        except KeyError:
            raise UnknownProviderError(name) from None

    def __contains__(self, name: object) -> bool:
        return name in self._providers

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._providers))

    def names(self) -> list[str]:
        return sorted(self._providers)


def default_registry() -> Registry:
    reg = Registry()
    reg.register(HashProvider(TEST_PROVIDER, 8, mix64_digest))
    reg.register(HashProvider("sha1", 20, _hashlib_fn("sha1")))
    reg.register(HashProvider("sha256", 32, _hashlib_fn("sha256")))
    reg.register(HashProvider("sha3-256", 32, _hashlib_fn("sha3_256")))
    reg.register(HashProvider("blake2b-160", 20, _blake2b(20)))
    return reg


registry = default_registry()


def get_provider(provider: str | HashProvider) -> HashProvider:
    return registry.get(provider)


def evaluate(provider: str | HashProvider, data: bytes) -> bytes:
    """Apply the one-way function ``h`` of ``provider`` to ``data``."""
    return get_provider(provider)(data)


def compress(provider: str | HashProvider, evidence: bytes) -> bytes:
    """Fixed-width digest of an evidence chunk: h(len_le64 || evidence)."""
    return evaluate(provider, struct.pack("<Q", len(evidence)) + bytes(evidence))


def combine(v: bytes, c: bytes, mode: CombineMode | str = DEFAULT_MODE) -> bytes:
    mode = CombineMode(mode)
    if mode is CombineMode.XOR:
        if len(v) != len(c):
            raise ContractError(f"xor needs equal widths, got {len(v)} and {len(c)}")
        return bytes(a ^ b for a, b in zip(v, c))
    return bytes(v) + bytes(c)


def chain_input(value: bytes, compressed: bytes | None, mode: CombineMode | str) -> bytes:
    """Bytes fed to ``h`` for one chain step, with or without bound evidence."""
    if compressed is None:
        return value
    return combine(value, compressed, mode)


def check_digest(provider: str | HashProvider, value: bytes) -> bytes:
    p = get_provider(provider)
    if len(value) != p.width:
        raise ContractError(f"digest width {len(value)} does not match {p.name} width {p.width}")
    return bytes(value)
