"""Exception hierarchy shared by all pebblechain modules."""


class PebbleChainError(Exception):
    pass


class ContractError(PebbleChainError, ValueError):
    """A caller broke an operation's precondition."""


class UnknownProviderError(PebbleChainError, KeyError):
    def __str__(self) -> str:
        return f"unknown hash provider: {self.args[0]!r}"


class StateError(PebbleChainError):
    """Operation not allowed in the object's current phase."""


class ExhaustedError(StateError):
    """Every element of the chain has already been emitted."""


class PolicyError(PebbleChainError):
    pass


class FormatError(PebbleChainError, ValueError):
    """A snapshot, ledger or disclosure file could not be parsed."""
