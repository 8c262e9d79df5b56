"""Exception types shared by every module."""


class InputError(ValueError):
    """Malformed or inconsistent input (bad vertex ids, arities, groups, maps)."""


class ClosureViolation(InputError):
    """A vertex set that should be closed under the functions is not."""


class PreconditionError(InputError):
    """An operation was called outside the situation it is defined for."""


class ResourceLimit(RuntimeError):
    """A configured cap on an exponential search or a witness size was hit."""
