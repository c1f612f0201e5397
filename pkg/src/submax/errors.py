"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent caller input (dimension mismatch, bad index, ...)."""


class DomainError(ValueError):
    """A kernel was evaluated outside its admissible domain.

    For the queueing kernel this signals an unstable load (s >= 1).
    """


class OracleGuardError(RuntimeError):
    """An exhaustive oracle was requested at a size beyond its guard.

    The oracles enumerate 2^N points or all bases; the guard exists so a
    misconfigured experiment fails loudly instead of running for hours.
    """
