"""Exceptions raised by chain access and analysis entry points."""

from __future__ import annotations


class GatewayError(Exception):
    """Chain data could not be read."""


class SourceUnavailable(GatewayError):
    """Network or filesystem failure reaching the data source."""


class NotInFixture(GatewayError, LookupError):
    """Fixture mode: the account is not listed (distinct from an empty-code account)."""


class TraceUnsupported(GatewayError):
    """The endpoint does not implement transaction-trace replay."""


class MissingCode(LookupError):
    """Bytecode needed for a verdict could not be obtained."""

    def __init__(self, address, cause: Exception | None = None):
        super().__init__(f"no code available for {address}" + (f": {cause}" if cause else ""))
        self.address = address


class StorageUnavailable(LookupError):
    """A storage read needed for an admin report failed."""

    def __init__(self, address, slot: int, cause: Exception | None = None):
        super().__init__(f"cannot read slot {slot:#x} of {address}" + (f": {cause}" if cause else ""))
        self.address = address
        self.slot = slot
