"""Shared exception types.

Exit-code mapping in the CLI relies on this hierarchy: ValidationError -> 1,
ProviderError -> 2, anything else -> 3.
"""


class TableSyncError(Exception):
    """Base class for all package errors."""


class ValidationError(TableSyncError):
    """Bad input data: schema violations, unknown codes, out-of-range refs."""


class ProviderError(TableSyncError):
    """Translation or embedding backend failure (possibly retryable)."""


class ConflictError(TableSyncError):
    """State-machine violation: decision on an already-decided record."""


class ConvergenceError(TableSyncError):
    """Fixpoint synchronization exceeded its round cap."""
