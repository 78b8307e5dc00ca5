"""Uniform read-only access to chain data, live or from fixtures."""

from __future__ import annotations

import os

from ..errors import GatewayError, NotInFixture, SourceUnavailable, TraceUnsupported
from .base import ENDPOINT_ENV_VARS, BlockRef, DataSource, Gateway, RetryPolicy
from .cache import CachedBackend
from .fixture import FixtureBackend
from .rpc import RpcBackend


def endpoint_from_env() -> str | None:
    for name in ENDPOINT_ENV_VARS:
        value = os.environ.get(name)
        if value:
            return value
    return None


def open_source(source: DataSource) -> Gateway:
    if source.mode == "fixture":
        backend = FixtureBackend(source.fixture_dir)
    else:
        backend = RpcBackend(source.endpoint, max_in_flight=source.max_in_flight, retry=source.retry)
    if source.cache_path is not None:
        backend = CachedBackend(backend, source.cache_path)
    return Gateway(backend, source)


__all__ = [
    "BlockRef",
    "CachedBackend",
    "DataSource",
    "FixtureBackend",
    "Gateway",
    "GatewayError",
    "NotInFixture",
    "RetryPolicy",
    "RpcBackend",
    "SourceUnavailable",
    "TraceUnsupported",
    "endpoint_from_env",
    "open_source",
]
