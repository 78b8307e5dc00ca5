"""Per-block and per-proxy analysis shared by the subcommands."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from ..admin import DEFAULT_ADMIN_DEPTH, FingerprintDB, resolve_admin
from ..classify import Category, classify
from ..classify.heuristics import cluster_key
from ..classify.verdict import getter_slots
from ..dataflow import DEFAULT_BUDGET, ResolutionKind, primary_resolution, resolve_delegate_target
from ..errors import GatewayError, MissingCode, StorageUnavailable
from ..evm.types import Address
from ..gateway import BlockRef, Gateway
from ..traces import MalformedTrace, ProxyEvidence, created_via_create2, detect_proxy_calls, parse_trace
from ..uups import DEFAULT_INIT_SLOT, audit_uups


@dataclass(frozen=True)
class Settings:
    budget: int = DEFAULT_BUDGET
    admin_depth: int = DEFAULT_ADMIN_DEPTH
    init_slot: int = DEFAULT_INIT_SLOT
    fingerprints: FingerprintDB = field(default_factory=FingerprintDB.default)


def ordered_evidence(document: bytes, number: int) -> tuple[list[ProxyEvidence], dict[Address, bool]]:
    """Proxy evidence in the order the forwarding frames appear in the block."""
    actions = parse_trace(document, block=number)
    position = {}
    for i, a in enumerate(actions):
        if a.call_type == "delegatecall":
            position.setdefault((a.tx_hash, a.sender, a.to), i)
    found = detect_proxy_calls(actions)
    ordered = sorted(found, key=lambda e: (position.get((e.tx_hash, e.proxy, e.target), -1), str(e.proxy)))
    return ordered, created_via_create2(actions)


def analyze(gw: Gateway, ev: ProxyEvidence, at: BlockRef, settings: Settings, create2: bool | None = None) -> dict:
    """One JSON-ready record: verdict, cluster, admin report and UUPS audit."""
    code_lookup = gw.code_lookup(at)
    storage_read = gw.storage_read(at)
    record: dict = {
        "type": "verdict",
        "address": str(ev.proxy),
        "block": ev.block,
        "evidence": ev.to_json(),
        "verdict": None,
        "cluster": None,
        "admin": None,
        "uups_audit": None,
        "error": None,
    }
    try:
        code = code_lookup(ev.proxy)
        verdict = classify(ev, code, code_lookup, storage_read, budget=settings.budget, created_via_create2=create2)
    except (MissingCode, GatewayError) as exc:
        record["error"] = f"classification withheld: {exc}"
        return record
    record["verdict"] = verdict.to_json()
    record["cluster"] = "0x" + cluster_key(code).hex()
    if verdict.upgradeable:
        try:
            report = resolve_admin(
                ev.proxy, verdict, storage_read, code_lookup, settings.fingerprints,
                depth=settings.admin_depth, budget=settings.budget,
            )
            record["admin"] = report.to_json()
        except (StorageUnavailable, MissingCode, GatewayError) as exc:
            record["admin"] = {"withheld": str(exc)}
    if verdict.category is Category.UUPS:
        try:
            findings = audit_uups(
                ev.proxy, ev.target, storage_read, code_lookup,
                init_slot=settings.init_slot, budget=settings.budget,
            )
            record["uups_audit"] = findings.to_json()
        except (StorageUnavailable, MissingCode, GatewayError) as exc:
            record["uups_audit"] = {"verdict": "inconclusive", "withheld": str(exc)}
    return record


class Analyzer:
    """Memoizes proxy analyses across blocks; safe to share between worker threads."""

    def __init__(self, gw: Gateway, at: BlockRef, settings: Settings):
        self.gw, self.at, self.settings = gw, at, settings
        self._lock = threading.Lock()
        self._done: dict[tuple, dict] = {}

    def block(self, number: int) -> dict:
        """{"block", "records", "error"} for one block; errors are captured, not raised."""
        try:
            document = self.gw.replay_block(BlockRef(number))
            evidence, create2 = ordered_evidence(document, number)
        except (GatewayError, MalformedTrace, OSError) as exc:
            return {"block": number, "records": [], "error": f"{type(exc).__name__}: {exc}"}
        records = []
        seen: set[Address] = set()
        for ev in evidence:
            if ev.proxy in seen:
                continue
            seen.add(ev.proxy)
            key = (ev.proxy, ev.target, create2.get(ev.proxy))
            with self._lock:
                cached = self._done.get(key)
            if cached is None:
                cached = analyze(self.gw, ev, self.at, self.settings, create2.get(ev.proxy))
                with self._lock:
                    self._done.setdefault(key, cached)
            record = dict(cached)
            record["block"] = number
            record["evidence"] = ev.to_json()
            records.append(record)
        return {"block": number, "records": records, "error": None}


def infer_target(gw: Gateway, proxy: Address, at: BlockRef, budget: int = DEFAULT_BUDGET) -> Address | None:
    """Current delegate target of ``proxy`` read from code and storage, without a trace."""
    code = gw.get_code(proxy, at)
    res = primary_resolution(resolve_delegate_target(code, budget))
    if res.kind is ResolutionKind.HARDCODED:
        return res.address
    if res.kind is ResolutionKind.FROM_SLOT:
        word = gw.get_storage(proxy, res.slot.word, at)
        return Address.from_word(word) if word else None
    if res.kind is ResolutionKind.FROM_EXTERNAL_CALL:
        callee = res.callee
        if callee.kind is ResolutionKind.HARDCODED:
            beacon = callee.address
        elif callee.kind is ResolutionKind.FROM_SLOT:
            word = gw.get_storage(proxy, callee.slot.word, at)
            beacon = Address.from_word(word) if word else None
        else:
            beacon = None
        if beacon is None:
            return None
        slots, constants = getter_slots(gw.get_code(beacon, at), res.selector, budget)
        if slots:
            word = gw.get_storage(beacon, slots[0].word, at)
            return Address.from_word(word) if word else None
        if constants:
            return Address.from_word(constants[0])
    return None


def evidence_for(gw: Gateway, proxy: Address, target: Address | None, at: BlockRef, budget: int) -> ProxyEvidence:
    """Evidence for a single-address command; the target is inferred when not given."""
    if target is None:
        target = infer_target(gw, proxy, at, budget)
    if target is None:
        raise LookupError(f"cannot infer the delegate target of {proxy}; pass --target")
    return ProxyEvidence(proxy=proxy, target=target, tx_hash=b"", block=int(at))
