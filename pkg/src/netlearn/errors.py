"""Exception hierarchy shared by the library and the CLI exit codes."""


class NetlearnError(Exception):
    exit_code = 1


class InputError(NetlearnError, ValueError):
    """Malformed or out-of-range input (CLI exit 1)."""

    exit_code = 1


class BudgetExceededError(NetlearnError):
    """Exhaustive search refused because the profile space is too large (CLI exit 2)."""

    exit_code = 2


class InvariantError(NetlearnError, RuntimeError):
    """An internal invariant was breached (CLI exit 3)."""

    exit_code = 3


class SupermodularityError(InvariantError):
    """Iterated best response broke monotonicity or its sweep budget."""
