"""Source configuration and the accessor every analysis module reads through."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from ..evm.types import Address, word_from

ENDPOINT_ENV_VARS = ("PROXYSCOPE_RPC_URL", "ETH_RPC_URL")


@dataclass(frozen=True, order=True)
class BlockRef:
    number: int

    def __post_init__(self):
        if not isinstance(self.number, int) or self.number < 0:
            raise ValueError(f"block number must be a non-negative integer, got {self.number!r}")

    def __int__(self) -> int:
        return self.number

    def __str__(self) -> str:
        return str(self.number)


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff: float = 0.5  # seconds before the second attempt; doubles after that
    timeout: float = 60.0


@dataclass(frozen=True)
class DataSource:
    """Either a live JSON-RPC endpoint or a fixture directory, plus an optional cache."""

    mode: str  # "live" or "fixture"
    endpoint: str | None = None
    max_in_flight: int = 8
    retry: RetryPolicy = RetryPolicy()
    fixture_dir: Path | None = None
    cache_path: Path | None = None

    def __post_init__(self):
        if self.mode == "live":
            if not self.endpoint:
                raise ValueError("live mode needs an endpoint URL")
            if self.max_in_flight < 1:
                raise ValueError("max_in_flight must be >= 1")
        elif self.mode == "fixture":
            if self.fixture_dir is None:
                raise ValueError("fixture mode needs a directory")
        else:
            raise ValueError(f"unknown source mode {self.mode!r}")

    @classmethod
    def live(cls, endpoint: str, *, max_in_flight: int = 8, retry: RetryPolicy = RetryPolicy(),
             cache_path=None) -> DataSource:
        return cls("live", endpoint=endpoint, max_in_flight=max_in_flight, retry=retry,
                   cache_path=Path(cache_path) if cache_path else None)

    @classmethod
    def fixture(cls, directory, *, cache_path=None) -> DataSource:
        return cls("fixture", fixture_dir=Path(directory), cache_path=Path(cache_path) if cache_path else None)


class Backend(Protocol):
    def get_code(self, account: Address, at: BlockRef) -> bytes: ...

    def get_storage(self, account: Address, slot: int, at: BlockRef) -> int: ...

    def replay_block(self, at: BlockRef) -> bytes: ...


class Gateway:
    """Thread-safe read-only accessor over a backend, memoizing code and storage reads."""

    def __init__(self, backend: Backend, source: DataSource | None = None):
        self.backend = backend
        self.source = source
        self._lock = threading.Lock()
        self._code: dict[tuple[Address, BlockRef], bytes] = {}
        self._storage: dict[tuple[Address, int, BlockRef], int] = {}

    def get_code(self, account, at: BlockRef) -> bytes:
        key = (Address(account), at)
        with self._lock:
            hit = self._code.get(key)
        if hit is None:
            hit = bytes(self.backend.get_code(key[0], at))
            with self._lock:
                self._code[key] = hit
        return hit

    def get_storage(self, account, slot, at: BlockRef) -> int:
        key = (Address(account), word_from(slot), at)
        with self._lock:
            hit = self._storage.get(key)
        if hit is None:
            hit = int(self.backend.get_storage(key[0], key[1], at))
            with self._lock:
                self._storage[key] = hit
        return hit

    def replay_block(self, at: BlockRef) -> bytes:
        return self.backend.replay_block(at)

    def code_lookup(self, at: BlockRef):
        return lambda account: self.get_code(account, at)

    def storage_read(self, at: BlockRef):
        return lambda account, slot: self.get_storage(account, slot, at)
