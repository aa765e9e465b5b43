"""Online fractal hash chains, Jakobsson preimage traversal and a digital
chain-of-custody layer built on them."""

from .errors import (
    ContractError,
    ExhaustedError,
    FormatError,
    PebbleChainError,
    PolicyError,
    StateError,
    UnknownProviderError,
)
from .growth import ExposureHandoff, GrowthState, finalize, grow, grow_step, growth_init, index_map, initialize_pebble
from .hashing import (
    TEST_PROVIDER,
    CombineMode,
    HashProvider,
    Registry,
    combine,
    compress,
    evaluate,
    mix64,
    registry,
)
from .oracle import FullChain, build_chain, element_at
from .traversal import (
    Pebble,
    TraversalState,
    find_value,
    jakobsson_setup,
    law_back_moves,
    law_destination,
    law_position_bound,
    law_reindex,
    traversal_step,
)

__version__ = "0.1.0"
