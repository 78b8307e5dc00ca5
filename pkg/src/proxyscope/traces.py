"""Parity-style transaction traces and the fallback-forwarding proxy rule."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evm.types import ZERO_ADDRESS, Address, Selector, hex_to_bytes


class MalformedTrace(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


KNOWN_CALL_TYPES = frozenset(
    {"call", "delegatecall", "staticcall", "callcode", "create", "create2", "selfdestruct"}
)


@dataclass(frozen=True)
class TraceAction:
    call_type: str
    sender: Address
    to: Address
    input: bytes
    trace_path: tuple[int, ...]
    tx_hash: bytes
    block: int | None = None

    @property
    def known_type(self) -> bool:
        return self.call_type in KNOWN_CALL_TYPES


@dataclass(frozen=True)
class ProxyEvidence:
    proxy: Address
    target: Address
    tx_hash: bytes
    block: int | None
    selector: Selector | None = None
    # Calls the proxy made in the same frame before delegating, as (callee, selector).
    prior_calls: tuple[tuple[Address, Selector | None], ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "proxy": str(self.proxy),
            "target": str(self.target),
            "tx_hash": "0x" + self.tx_hash.hex(),
            "block": self.block,
            "selector": str(self.selector) if self.selector else None,
        }


def _addr(value) -> Address:
    if not value:
        return ZERO_ADDRESS
    return Address(value)


def _action(entry: dict, tx_hash: bytes, block: int | None) -> TraceAction:
    action = entry.get("action") or {}
    kind = entry.get("type", "call")
    if kind == "call":
        call_type = action.get("callType", "call")
        sender, to = action.get("from"), action.get("to")
        data = action.get("input", "0x")
    elif kind == "create":
        call_type = "create2" if action.get("creationMethod") == "create2" else "create"
        sender = action.get("from")
        to = (entry.get("result") or {}).get("address")
        data = action.get("init", "0x")
    elif kind == "suicide":
        call_type = "selfdestruct"
        sender, to = action.get("address"), action.get("refundAddress")
        data = "0x"
    else:
        call_type = kind
        sender, to = action.get("from"), action.get("to")
        data = action.get("input", "0x")
    if entry.get("blockNumber") is not None:
        block = int(entry["blockNumber"])
    return TraceAction(
        call_type=str(call_type),
        sender=_addr(sender),
        to=_addr(to),
        input=hex_to_bytes(data or "0x"),
        trace_path=tuple(int(i) for i in entry.get("traceAddress", [])),
        tx_hash=tx_hash,
        block=block,
    )


def _tx_objects(text: str) -> list[tuple[int, object]]:
    """Top-level array elements with the byte offset each starts at."""
    decoder = json.JSONDecoder()
    i = len(text) - len(text.lstrip())
    if text.startswith("{", i):
        try:
            envelope, _ = decoder.raw_decode(text, i)
        except json.JSONDecodeError as exc:
            raise MalformedTrace(exc.msg, exc.pos) from None
        if isinstance(envelope, dict) and "error" in envelope:
            raise MalformedTrace(f"node returned an error: {envelope['error']}", i)
        if not isinstance(envelope, dict) or not isinstance(envelope.get("result"), list):
            raise MalformedTrace("expected a JSON-RPC envelope with a result array", i)
        start = text.index('"result"', i)
        i = text.index("[", start)
    if not text.startswith("[", i):
        raise MalformedTrace("expected a JSON array of transactions", i)
    out: list[tuple[int, object]] = []
    i += 1
    while True:
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        if text.startswith("]", i):
            return out
        try:
            obj, end = decoder.raw_decode(text, i)
        except json.JSONDecodeError as exc:
            raise MalformedTrace(exc.msg, exc.pos) from None
        out.append((i, obj))
        i = end
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        if text.startswith(",", i):
            i += 1
        elif not text.startswith("]", i):
            raise MalformedTrace("expected ',' or ']'", i)


def parse_trace(document: bytes | str, block: int | None = None) -> list[TraceAction]:
    """One action per trace frame, in document order.

    Accepts the bare ``trace_replayBlockTransactions`` result array or the full
    JSON-RPC envelope around it. Unknown frame types are kept verbatim.
    """
    text = document.decode("utf-8") if isinstance(document, (bytes, bytearray)) else document
    actions: list[TraceAction] = []
    for offset, tx in _tx_objects(text):
        if not isinstance(tx, dict) or not isinstance(tx.get("trace", []), list):
            raise MalformedTrace("transaction entry must be an object with a trace array", offset)
        try:
            tx_hash = hex_to_bytes(tx.get("transactionHash") or "0x")
            for entry in tx.get("trace", []):
                actions.append(_action(entry, tx_hash, block))
        except (ValueError, TypeError, AttributeError) as exc:
            raise MalformedTrace(f"bad trace frame: {exc}", offset) from None
    return actions


def _selector(data: bytes) -> Selector | None:
    return Selector(data[:4]) if len(data) >= 4 else None


def detect_proxy_calls(actions: list[TraceAction]) -> set[ProxyEvidence]:
    """Parent/child frames where the child DELEGATECALLs with the parent's exact input."""
    frames: dict[tuple[bytes, tuple[int, ...]], TraceAction] = {}
    for a in actions:
        frames[(a.tx_hash, a.trace_path)] = a

    evidence: set[ProxyEvidence] = set()
    for child in actions:
        if child.call_type != "delegatecall" or not child.trace_path or not child.input:
            continue
        parent = frames.get((child.tx_hash, child.trace_path[:-1]))
        if parent is None or parent.input != child.input or child.sender != parent.to:
            continue
        if child.sender == child.to:
            continue
        prior = []
        parent_path, index = child.trace_path[:-1], child.trace_path[-1]
        for j in range(index):
            sib = frames.get((child.tx_hash, parent_path + (j,)))
            if sib is not None and sib.sender == child.sender and sib.call_type in ("call", "staticcall"):
                prior.append((sib.to, _selector(sib.input)))
        evidence.add(
            ProxyEvidence(
                proxy=child.sender,
                target=child.to,
                tx_hash=child.tx_hash,
                block=child.block,
                selector=_selector(child.input),
                prior_calls=tuple(prior),
            )
        )
    return evidence


def created_via_create2(actions: list[TraceAction]) -> dict[Address, bool]:
    """Creation method for every contract deployed within ``actions``."""
    return {a.to: a.call_type == "create2" for a in actions if a.call_type in ("create", "create2")}
