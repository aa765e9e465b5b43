"""
Walking a chain backwards with logarithmic storage
==================================================

A chain of length 2^k is exposed from its front back to the seed while
keeping only k stored values ("pebbles"). Each step costs a handful of hash
evaluations.
"""

# %%
from pebblechain import build_chain, jakobsson_setup, traversal_step
from pebblechain.traversal import positions_of

seed = (1).to_bytes(8, "little")
chain = build_chain("mix64-test", seed, 16)
state = jakobsson_setup(chain)
print("pebbles at", positions_of(state.pebbles))

# %%
# Each step emits the next value in exposure order. Pebbles slide toward the
# front as they are needed and are dropped once their position is emitted.
emitted = []
while not state.exhausted:
    emitted.append(traversal_step(state))
    print(f"{state.current_position:>3}  live {positions_of(state.live)}")

assert emitted == chain.exposure()
print("hash evaluations:", state.hash_count, "for", len(emitted), "values")
