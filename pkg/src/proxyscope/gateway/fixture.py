"""Offline chain data laid out as a directory of JSON documents.

Layout::

    manifest.json            {"format": "proxyscope-fixtures", "version": 1,
                              "block": <pinned number>, "blocks": [<numbers with traces>]}
    accounts/<address>.json  {"address": "0x..", "code": "0x..", "storage": {"0x<slot>": "0x<word>"}}
    traces/<number>.json     trace_replayBlockTransactions result (bare array or JSON-RPC envelope)
    labels.json              optional ground truth used by tests and fixtures-validate

Account files are named by lowercase hex address. Every read answers for the
pinned block regardless of the block requested.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from ..errors import NotInFixture, SourceUnavailable
from ..evm.types import Address, hex_to_bytes, word_from
from .base import BlockRef

FORMAT = "proxyscope-fixtures"
VERSION = 1


class FixtureBackend:
    def __init__(self, directory):
        self.root = Path(directory)
        try:
            self.manifest = json.loads((self.root / "manifest.json").read_text())
        except (OSError, ValueError) as exc:
            raise SourceUnavailable(f"cannot read fixture manifest in {self.root}: {exc}") from exc
        if self.manifest.get("format") != FORMAT or self.manifest.get("version") != VERSION:
            raise SourceUnavailable(f"{self.root / 'manifest.json'} is not a version {VERSION} fixture manifest")
        self.pinned = BlockRef(int(self.manifest["block"]))
        self.blocks = sorted(int(b) for b in self.manifest.get("blocks", []))
        self._accounts: dict[Address, dict] = {}
        self._lock = threading.Lock()

    def account_path(self, account: Address) -> Path:
        return self.root / "accounts" / f"{Address(account).hex()}.json"

    def trace_path(self, at: BlockRef) -> Path:
        return self.root / "traces" / f"{int(at)}.json"

    def _account(self, account: Address) -> dict:
        account = Address(account)
        with self._lock:
            doc = self._accounts.get(account)
        if doc is not None:
            return doc
        path = self.account_path(account)
        if not path.exists():
            raise NotInFixture(f"{account} is not listed in {self.root}")
        try:
            raw = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise SourceUnavailable(f"cannot read {path}: {exc}") from exc
        doc = {
            "code": hex_to_bytes(raw.get("code") or "0x"),
            "storage": {word_from(k): word_from(v) for k, v in (raw.get("storage") or {}).items()},
        }
        with self._lock:
            self._accounts[account] = doc
        return doc

    def get_code(self, account: Address, at: BlockRef) -> bytes:
        return self._account(account)["code"]

    def get_storage(self, account: Address, slot: int, at: BlockRef) -> int:
        return self._account(account)["storage"].get(word_from(slot), 0)

    def replay_block(self, at: BlockRef) -> bytes:
        path = self.trace_path(at)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise SourceUnavailable(f"no trace file for block {at}: {path}") from exc

    def labels(self) -> dict:
        path = self.root / "labels.json"
        return json.loads(path.read_text()) if path.exists() else {}

    def accounts(self) -> list[Address]:
        return sorted(Address(p.stem) for p in (self.root / "accounts").glob("*.json"))


def write_account(root: Path, address: Address, code: bytes = b"", storage: dict[int, int] | None = None) -> Path:
    path = Path(root) / "accounts" / f"{Address(address).hex()}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "address": str(Address(address)),
        "code": "0x" + bytes(code).hex(),
        "storage": {f"{k:#x}": f"{v:#x}" for k, v in sorted((storage or {}).items()) if v},
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def write_manifest(root: Path, pinned: int, blocks: list[int]) -> Path:
    path = Path(root) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"format": FORMAT, "version": VERSION, "block": pinned, "blocks": sorted(blocks)}
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def validate(directory) -> list[str]:
    """Problems found in a fixture directory; empty when it is well formed."""
    from ..traces import MalformedTrace, parse_trace

    problems: list[str] = []
    try:
        backend = FixtureBackend(directory)
    except SourceUnavailable as exc:
        return [str(exc)]
    for path in sorted((backend.root / "accounts").glob("*.json")):
        try:
            raw = json.loads(path.read_text())
            addr = Address(raw["address"])
            if addr.hex() != path.stem:
                problems.append(f"{path.name}: address field {addr} does not match file name")
            hex_to_bytes(raw.get("code") or "0x")
            for k, v in (raw.get("storage") or {}).items():
                word_from(k), word_from(v)
        except (ValueError, KeyError, TypeError) as exc:
            problems.append(f"{path.name}: {exc}")
    for number in backend.blocks:
        try:
            parse_trace(backend.replay_block(BlockRef(number)), block=number)
        except SourceUnavailable as exc:
            problems.append(str(exc))
        except MalformedTrace as exc:
            problems.append(f"traces/{number}.json: {exc}")
    return problems
