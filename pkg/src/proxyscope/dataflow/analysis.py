"""Delegate-target resolution, slot-assignment search and caller-guard extraction."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..evm.types import Address, Selector
from .interpreter import DEFAULT_BUDGET, Condition, Entry, Event, interpret
from .values import AbstractValue, SlotExpr, SlotKind, Tag


class ResolutionKind(enum.Enum):
    HARDCODED = "hardcoded"
    FROM_SLOT = "from-slot"
    FROM_EXTERNAL_CALL = "from-external-call"
    FROM_CALLDATA = "from-calldata"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class TargetResolution:
    kind: ResolutionKind
    address: Address | None = None
    slot: SlotExpr | None = None
    callee: TargetResolution | None = None
    selector: Selector | None = None
    evidence: tuple[int, ...] = ()
    reason: str | None = None

    @classmethod
    def unresolved(cls, reason: str, evidence: tuple[int, ...] = ()) -> TargetResolution:
        return cls(ResolutionKind.UNRESOLVED, reason=reason, evidence=evidence)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "evidence": list(self.evidence)}
        if self.address is not None:
            out["address"] = str(self.address)
        if self.slot is not None:
            out["slot"] = self.slot.to_json()
        if self.callee is not None:
            out["callee"] = self.callee.to_json()
        if self.selector is not None:
            out["selector"] = str(self.selector)
        if self.reason is not None:
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class DelegateSite:
    offset: int | None
    resolution: TargetResolution


def resolve_value(value: AbstractValue, site: int) -> TargetResolution:
    """Classify where an address operand came from."""
    if value.tag is Tag.CONST:
        return TargetResolution(ResolutionKind.HARDCODED, address=Address.from_word(value.word), evidence=(site,))
    if value.tag is Tag.STORAGE:
        if value.slot.kind is SlotKind.UNKNOWN:
            return TargetResolution.unresolved("slot expression not constant", (site,))
        ev = (site,) if value.site is None else (value.site, site)
        return TargetResolution(ResolutionKind.FROM_SLOT, slot=value.slot, evidence=ev)
    if value.tag is Tag.EXTERNAL:
        callee = resolve_value(value.callee, value.site)
        return TargetResolution(
            ResolutionKind.FROM_EXTERNAL_CALL,
            callee=callee,
            selector=value.call_selector,
            evidence=(value.site, site),
        )
    if value.tag is Tag.CALLDATA:
        return TargetResolution(ResolutionKind.FROM_CALLDATA, evidence=(site,))
    return TargetResolution.unresolved(f"{value.tag.value} address operand", (site,))


def _merge(resolutions: list[TargetResolution], site: int) -> TargetResolution:
    first = resolutions[0]
    if all(r == first for r in resolutions[1:]):
        return first
    return TargetResolution.unresolved("paths disagree on the target", (site,))


def resolve_delegate_target(code: bytes, budget: int = DEFAULT_BUDGET) -> list[DelegateSite]:
    """One resolution per DELEGATECALL reachable from the fallback path."""
    interp = interpret(code, Entry.FALLBACK, budget)
    by_site: dict[int, list[TargetResolution]] = {}
    for ev in interp.of_kind("DELEGATECALL"):
        by_site.setdefault(ev.offset, []).append(resolve_value(ev.operands[1], ev.offset))
    sites = [DelegateSite(off, _merge(rs, off)) for off, rs in sorted(by_site.items())]
    if not sites and (interp.error is not None or interp.truncated):
        reason = str(interp.error) if interp.error is not None else "analysis budget exhausted"
        sites = [DelegateSite(None, TargetResolution.unresolved(reason))]
    return sites


def primary_resolution(sites: list[DelegateSite]) -> TargetResolution:
    """The first resolved site, else the first site, else Unresolved."""
    for s in sites:
        if s.resolution.kind is not ResolutionKind.UNRESOLVED:
            return s.resolution
    if sites:
        return sites[0].resolution
    return TargetResolution.unresolved("no DELEGATECALL on the fallback path")


@dataclass(frozen=True)
class Guard:
    """What CALLER is required to equal: a literal address or a storage slot's content."""

    address: Address | None = None
    slot: SlotExpr | None = None
    offset: int = -1

    def to_json(self) -> dict:
        out: dict = {"offset": self.offset}
        if self.address is not None:
            out["address"] = str(self.address)
        if self.slot is not None:
            out["slot"] = self.slot.to_json()
        return out


def guard_from_conditions(conds: tuple[Condition, ...], subject: Tag = Tag.CALLER) -> Guard | None:
    for c in conds:
        if not c.equal:
            continue
        other = c.other_side(subject)
        if other is None:
            continue
        if other.tag is Tag.CONST:
            return Guard(address=Address.from_word(other.word), offset=c.offset)
        if other.tag is Tag.STORAGE and other.slot.kind is not SlotKind.UNKNOWN:
            return Guard(slot=other.slot, offset=c.offset)
    return None


def _common_guard(events: list[Event]) -> Guard | None:
    guards = [guard_from_conditions(ev.conditions) for ev in events]
    if not guards or any(g is None for g in guards):
        return None
    first = guards[0]
    same = all(g.address == first.address and g.slot == first.slot for g in guards)
    return first if same else None


@dataclass(frozen=True)
class AssignmentFinding:
    slot: SlotExpr
    writer_selector: Selector | None  # None: reached from the fallback path
    value_taint: bool
    guard: Guard | None
    offset: int
    value_tag: Tag = Tag.OPAQUE
    path_offsets: tuple[int, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "slot": self.slot.to_json(),
            "writer_selector": str(self.writer_selector) if self.writer_selector else "fallback",
            "value_taint": self.value_taint,
            "value_source": self.value_tag.value,
            "guard": self.guard.to_json() if self.guard else None,
            "sstore_offset": self.offset,
            "path_offsets": list(self.path_offsets),
        }


def _stores(code: bytes, budget: int) -> dict[tuple, list[Event]]:
    grouped: dict[tuple, list[Event]] = {}
    for ev in interpret(code, Entry.DISPATCH, budget).of_kind("SSTORE"):
        slot_v, value = ev.operands
        key = (ev.offset, ev.selector, value.taint, value.tag, slot_v.as_slot())
        grouped.setdefault(key, []).append(ev)
    return grouped


def all_assignments(code: bytes, budget: int = DEFAULT_BUDGET) -> set[AssignmentFinding]:
    out = set()
    for (offset, selector, taint, tag, slot), events in _stores(code, budget).items():
        path = tuple(sorted({c.offset for ev in events for c in ev.conditions}))
        out.add(AssignmentFinding(slot, selector, taint, _common_guard(events), offset, tag, path))
    return out


def find_slot_assignments(code: bytes, slot: SlotExpr, budget: int = DEFAULT_BUDGET) -> set[AssignmentFinding]:
    """Every SSTORE whose slot resolves to the same word as ``slot``."""
    target = slot.word
    if target is None:
        raise ValueError("cannot search for assignments to an unknown slot")
    return {f for f in all_assignments(code, budget) if f.slot.word == target}


def extract_caller_guard(code: bytes, writer: AssignmentFinding, budget: int = DEFAULT_BUDGET) -> Guard | None:
    """The CALLER check present on every path to ``writer``'s SSTORE, if any."""
    events = [
        ev
        for ev in interpret(code, Entry.DISPATCH, budget).of_kind("SSTORE")
        if ev.offset == writer.offset and ev.selector == writer.writer_selector
        and ev.operands[1].taint == writer.value_taint
    ]
    return _common_guard(events)
