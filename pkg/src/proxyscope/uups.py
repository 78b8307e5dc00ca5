"""Uninitialized-implementation audit for UUPS proxy pairs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .dataflow import (
    DEFAULT_BUDGET,
    AssignmentFinding,
    Entry,
    ResolutionKind,
    Tag,
    TargetResolution,
    all_assignments,
    find_slot_assignments,
    interpret,
)
from .dataflow.analysis import resolve_value
from .errors import GatewayError, MissingCode, StorageUnavailable
from .evm.types import Address, Selector, word_to_hex

DEFAULT_INIT_SLOT = 0


class UupsVerdict(enum.Enum):
    EXPLOITABLE = "exploitable"
    TAKEOVER_ONLY = "takeover-only"
    NOT_VULNERABLE = "not-vulnerable"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class UupsFindings:
    implementation: Address
    initialized: bool
    init_selector: Selector | None
    direct_call_guard: bool
    selfdestruct_present: bool
    mutable_delegatecall: tuple[Selector | None, TargetResolution] | None
    verdict: UupsVerdict
    reason: str = ""
    evidence: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        md = None
        if self.mutable_delegatecall is not None:
            sel, res = self.mutable_delegatecall
            md = {"selector": str(sel) if sel else "fallback", "resolution": res.to_json()}
        return {
            "implementation": str(self.implementation),
            "initialized": self.initialized,
            "init_selector": str(self.init_selector) if self.init_selector else None,
            "direct_call_guard": self.direct_call_guard,
            "selfdestruct_present": self.selfdestruct_present,
            "mutable_delegatecall": md,
            "verdict": self.verdict.value,
            "reason": self.reason,
            "evidence": self.evidence,
        }


def _owner_words(events) -> set[int]:
    """Slots whose content some path compares CALLER against."""
    words = set()
    for ev in events:
        for c in ev.conditions:
            other = c.other_side(Tag.CALLER)
            if other is not None and other.tag is Tag.STORAGE and other.slot.word is not None:
                words.add(other.slot.word)
    return words


def _owner_entries(code: bytes, owner_words: set[int], budget: int) -> list[AssignmentFinding]:
    out = [
        f
        for f in all_assignments(code, budget)
        if f.slot.word in owner_words
        and f.writer_selector is not None
        and f.guard is None
        and (f.value_taint or f.value_tag is Tag.CALLER)
    ]
    return sorted(out, key=lambda f: (f.offset, str(f.writer_selector)))


def _self_gate(events) -> tuple[bool, bool, list[int]]:
    """(every path gated, some gate is of an unrecognised shape, gate offsets)."""
    gated, exotic, offsets = True, False, []
    for ev in events:
        here = False
        for c in ev.conditions:
            other = c.other_side(Tag.SELF)
            if other is None:
                continue
            if other.tag is Tag.CONST or (other.tag is Tag.STORAGE and other.slot.word is not None):
                here = True
                offsets.append(c.offset)
            else:
                exotic = True
        gated = gated and here
    return gated and bool(events), exotic, sorted(set(offsets))


def audit_uups(
    proxy: Address,
    implementation: Address,
    storage_read,
    code_lookup,
    *,
    init_slot: int = DEFAULT_INIT_SLOT,
    budget: int = DEFAULT_BUDGET,
) -> UupsFindings:
    """Can anyone seize ``implementation`` directly, and would that let them destroy it?

    The implementation is taken over when it was never initialized and some
    function lets any caller write the slot its access checks read. It is
    exploitable when the new owner can then reach SELFDESTRUCT, or a
    DELEGATECALL into an address they control.
    """
    try:
        code = bytes(code_lookup(implementation))
    except (GatewayError, LookupError) as exc:
        raise MissingCode(implementation, exc) from exc
    if not code:
        raise MissingCode(implementation)
    try:
        init_word = int(storage_read(implementation, init_slot))
    except (GatewayError, LookupError, OSError) as exc:
        raise StorageUnavailable(implementation, init_slot, exc) from exc

    interp = interpret(code, Entry.DISPATCH, budget)
    incomplete = interp.truncated or interp.error is not None
    evidence: dict = {
        "proxy": str(proxy),
        "init_slot": word_to_hex(init_slot),
        "init_word": word_to_hex(init_word),
    }

    destructs = sorted({ev.offset for ev in interp.of_kind("SELFDESTRUCT")})
    mutable = None
    unresolved_calls = []
    for ev in interp.of_kind("DELEGATECALL"):
        res = resolve_value(ev.operands[1], ev.offset)
        if res.kind is ResolutionKind.FROM_CALLDATA:
            mutable = (ev.selector, res)
        elif res.kind is ResolutionKind.FROM_SLOT:
            if any(f.value_taint for f in find_slot_assignments(code, res.slot, budget)):
                mutable = (ev.selector, res)
        elif res.kind is ResolutionKind.UNRESOLVED:
            unresolved_calls.append(ev.offset)
        if mutable is not None:
            evidence["delegatecall_offset"] = ev.offset
            break
    evidence["selfdestruct_offsets"] = destructs

    sstores = interp.of_kind("SSTORE")
    entries = _owner_entries(code, _owner_words(sstores), budget)
    entry = entries[0] if entries else None
    gate, exotic, gate_offsets = False, False, []
    if entry is not None:
        evidence["owner_slot"] = word_to_hex(entry.slot.word)
        evidence["owner_sstore_offset"] = entry.offset
        paths = [ev for ev in sstores if ev.offset == entry.offset and ev.selector == entry.writer_selector]
        gate, exotic, gate_offsets = _self_gate(paths)
        evidence["direct_call_guard_offsets"] = gate_offsets

    def done(verdict: UupsVerdict, reason: str) -> UupsFindings:
        return UupsFindings(
            implementation=implementation,
            initialized=init_word != 0,
            init_selector=entry.writer_selector if entry else None,
            direct_call_guard=gate,
            selfdestruct_present=bool(destructs),
            mutable_delegatecall=mutable,
            verdict=verdict,
            reason=reason,
            evidence=evidence,
        )

    if init_word != 0:
        return done(UupsVerdict.NOT_VULNERABLE, "initialized")
    if entry is None:
        if incomplete:
            return done(UupsVerdict.INCONCLUSIVE, "analysis incomplete")
        return done(UupsVerdict.NOT_VULNERABLE, "no unguarded owner-setting function")
    if gate:
        return done(UupsVerdict.NOT_VULNERABLE, "direct calls blocked")
    if exotic:
        return done(UupsVerdict.INCONCLUSIVE, "unrecognised direct-call guard")
    if destructs or mutable is not None:
        return done(UupsVerdict.EXPLOITABLE, "selfdestruct reachable" if destructs else "mutable delegatecall")
    if unresolved_calls or incomplete:
        evidence["unresolved_delegatecalls"] = unresolved_calls
        return done(UupsVerdict.INCONCLUSIVE, "analysis incomplete")
    return done(UupsVerdict.TAKEOVER_ONLY, "no destruction channel")
