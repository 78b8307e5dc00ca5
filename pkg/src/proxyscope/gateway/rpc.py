"""JSON-RPC client for an archive node with trace support."""

from __future__ import annotations

import itertools
import json
import threading
import time

import requests

from ..errors import SourceUnavailable, TraceUnsupported
from ..evm.types import Address, hex_to_bytes, word_from
from .base import BlockRef, RetryPolicy

METHOD_NOT_FOUND = -32601
TRACE_METHOD = "trace_replayBlockTransactions"
TRACE_REMEDIATION = (
    f"the endpoint does not offer {TRACE_METHOD}; use an archive node with the trace "
    "module enabled (e.g. Erigon or Nethermind with tracing, or OpenEthereum/Parity)"
)


class _RpcError(Exception):
    def __init__(self, error: dict):
        super().__init__(f"{error.get('code')}: {error.get('message')}")
        self.code = error.get("code")


class RpcBackend:
    """Bounded-concurrency JSON-RPC reads with retries and exponential backoff."""

    def __init__(self, endpoint: str, *, max_in_flight: int = 8, retry: RetryPolicy = RetryPolicy()):
        self.endpoint = endpoint
        self.retry = retry
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._local = threading.local()
        self._ids = itertools.count(1)

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = self._local.session = requests.Session()
        return session

    def _post(self, method: str, params: list) -> bytes:
        payload = {"jsonrpc": "2.0", "id": next(self._ids), "method": method, "params": params}
        with self._slots:
            response = self._session().post(self.endpoint, json=payload, timeout=self.retry.timeout)
        response.raise_for_status()
        return response.content

    def call(self, method: str, params: list) -> tuple[object, bytes]:
        """The ``result`` field and the raw response body."""
        last: Exception | None = None
        delay = self.retry.backoff
        for attempt in range(self.retry.attempts):
            if attempt:
                time.sleep(delay)
                delay *= 2
            try:
                body = self._post(method, params)
                doc = json.loads(body)
                if doc.get("error"):
                    raise _RpcError(doc["error"])
                return doc.get("result"), body
            except _RpcError as exc:
                if exc.code == METHOD_NOT_FOUND:
                    if method == TRACE_METHOD:
                        raise TraceUnsupported(TRACE_REMEDIATION) from exc
                    raise SourceUnavailable(f"{method} not supported by {self.endpoint}") from exc
                last = exc
            except (requests.RequestException, ValueError, AttributeError) as exc:
                last = exc
        raise SourceUnavailable(f"{method} failed after {self.retry.attempts} attempts: {last}") from last

    def get_code(self, account: Address, at: BlockRef) -> bytes:
        result, _ = self.call("eth_getCode", [str(Address(account)), hex(int(at))])
        return hex_to_bytes(result or "0x")

    def get_storage(self, account: Address, slot: int, at: BlockRef) -> int:
        result, _ = self.call("eth_getStorageAt", [str(Address(account)), hex(word_from(slot)), hex(int(at))])
        return word_from(result or "0x0")

    def replay_block(self, at: BlockRef) -> bytes:
        _, body = self.call(TRACE_METHOD, [hex(int(at)), ["trace"]])
        return body
