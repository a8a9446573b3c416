"""Exception types shared across the package."""


class CrdtError(Exception):
    """Base class for all package errors."""


class ContractError(CrdtError):
    """An API contract was violated (reentrant send, stale child handle, ...)."""


class DecodeError(CrdtError):
    """A byte sequence could not be decoded as the expected structure."""


class LoadError(CrdtError):
    """A saved state is incompatible with the registered component tree."""
