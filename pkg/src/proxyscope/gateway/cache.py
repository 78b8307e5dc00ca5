"""Write-once, content-addressed on-disk cache in front of any backend.

Each read is keyed by ``(method, account or block, slot, block)``; the key's
SHA-256 names a file under ``<cache>/<first two hex chars>/``. Files hold the
raw value bytes: runtime code, a 32-byte storage word, or the trace document.
A file is never rewritten once present.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path

from ..errors import SourceUnavailable
from ..evm.types import Address, word_from
from .base import Backend, BlockRef


def cache_key(method: str, subject: str, slot: int | None, at: BlockRef) -> str:
    text = json.dumps([method, subject, None if slot is None else hex(slot), int(at)])
    return hashlib.sha256(text.encode()).hexdigest()


class CachedBackend:
    def __init__(self, inner: Backend, directory):
        self.inner = inner
        self.root = Path(directory)
        self._lock = threading.Lock()

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / key

    def _load(self, key: str) -> bytes | None:
        try:
            return self.path_for(key).read_bytes()
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise SourceUnavailable(f"cache read failed: {exc}") from exc

    def _store(self, key: str, value: bytes) -> None:
        final = self.path_for(key)
        with self._lock:
            if final.exists():
                return
            try:
                final.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=final.parent, prefix=".tmp-")
                try:
                    with os.fdopen(fd, "wb") as fh:
                        fh.write(value)
                    os.link(tmp, final)
                except FileExistsError:
                    pass
                finally:
                    os.unlink(tmp)
            except OSError as exc:
                raise SourceUnavailable(f"cache write failed: {exc}") from exc

    def _cached(self, key: str, fetch) -> bytes:
        hit = self._load(key)
        if hit is not None:
            return hit
        value = fetch()
        self._store(key, value)
        return value

    def get_code(self, account: Address, at: BlockRef) -> bytes:
        key = cache_key("eth_getCode", str(Address(account)), None, at)
        return self._cached(key, lambda: bytes(self.inner.get_code(account, at)))

    def get_storage(self, account: Address, slot: int, at: BlockRef) -> int:
        slot = word_from(slot)
        key = cache_key("eth_getStorageAt", str(Address(account)), slot, at)
        raw = self._cached(key, lambda: int(self.inner.get_storage(account, slot, at)).to_bytes(32, "big"))
        return int.from_bytes(raw, "big")

    def replay_block(self, at: BlockRef) -> bytes:
        key = cache_key("trace_replayBlockTransactions", str(int(at)), None, at)
        return self._cached(key, lambda: bytes(self.inner.replay_block(at)))
