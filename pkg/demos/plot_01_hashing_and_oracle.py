"""
Hash providers and the reference chain
======================================

Every chain in the package is built from a named hash provider. The
``mix64-test`` provider is a fast 64-bit mixer meant for tests and demos.
The hashlib providers (``sha1``, ``sha256`` and friends) are the ones to use
for anything real.
"""

# %%
# Providers are looked up by name in a registry.
from pebblechain import build_chain, compress, evaluate, registry

print(registry.names())
print(evaluate("mix64-test", (1).to_bytes(8, "little")).hex())

# %%
# Evidence is compressed to one digest before it is folded into the chain.
print(compress("sha256", b"photo-0001.jpg").hex())

# %%
# The oracle builds a whole chain in memory. Position ``n`` holds the seed and
# each step toward position 1 is one more hash application. Exposure order
# walks from position 1 back to the seed.
seed = (1).to_bytes(8, "little")
chain = build_chain("mix64-test", seed, 8)
for position in range(1, 9):
    print(position, chain.element_at(position).hex())
assert chain.exposure()[-1] == seed
