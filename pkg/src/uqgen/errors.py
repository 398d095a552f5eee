"""Exception hierarchy shared across the toolkit.

CLI exit codes map onto these: ConfigError -> 2, BackendError/CapabilityError -> 3,
DataError -> 4.
"""

from __future__ import annotations


class UQGenError(Exception):
    """Base class for every toolkit error."""


class ConfigError(UQGenError):
    pass


class DataError(UQGenError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BackendError(UQGenError):
    """A generator backend failed (transport, server error, exhausted retries)."""

    def __init__(self, message: str, retriable: bool = True):
        super().__init__(message)
        self.retriable = retriable


class CapabilityError(BackendError):
    """The backend cannot do what was asked (no logprobs, no forced prefix, topk too large)."""

    def __init__(self, message: str):
        super().__init__(message, retriable=False)


class ProviderError(UQGenError):
    """An embedding or syntax provider failed."""

    def __init__(self, provider_id: str, message: str, retriable: bool = True):
        super().__init__(f"[{provider_id}] {message}")
        self.provider_id = provider_id
        self.retriable = retriable


class ParseFailure(UQGenError):
    """Source text could not be parsed by a syntax provider."""


class InferenceError(UQGenError):
    """Multi-inference collection failed; ``partial`` holds the generations obtained so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = list(partial or [])


class JudgeError(UQGenError):
    pass
