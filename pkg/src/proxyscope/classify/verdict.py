"""Forwarder / upgradeable decision procedure."""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

from ..dataflow import (
    DEFAULT_BUDGET,
    AssignmentFinding,
    Entry,
    ResolutionKind,
    SlotExpr,
    SlotKind,
    Tag,
    TargetResolution,
    find_slot_assignments,
    interpret,
    primary_resolution,
    resolve_delegate_target,
)
from ..errors import GatewayError, MissingCode
from ..evm.inspect import literal_locations
from ..evm.types import Address, Selector
from ..traces import ProxyEvidence
from .heuristics import detect_transparent, metamorphic_risk

CodeLookup = Callable[[Address], bytes]
StorageRead = Callable[[Address, int], int]


class Category(enum.Enum):
    FORWARDER = "forwarder"
    REGULAR = "regular"
    UUPS = "uups"
    BEACON = "beacon"


class Flag(str, enum.Enum):
    TRANSPARENT = "transparent-heuristic"
    METAMORPHIC = "metamorphic-risk"
    TRUNCATED = "truncated-analysis"


FORWARDER_REASONS = (
    "hardcoded",
    "code-embedded-constant",
    "immutable-in-code",
    "slot-never-assigned",
    "beacon-immutable",
    "unresolved",
)


@dataclass(frozen=True)
class Verdict:
    subject: Address
    target: Address
    category: Category
    resolution: TargetResolution
    reason: str | None = None  # forwarders only
    assignments: frozenset[AssignmentFinding] = frozenset()
    flags: frozenset[Flag] = frozenset()
    # Account whose code holds the upgrade writer, and whose storage it runs on.
    writer_code: Address | None = None
    writer_storage: Address | None = None
    beacon: Address | None = None

    @property
    def upgradeable(self) -> bool:
        return self.category is not Category.FORWARDER

    @property
    def label(self) -> str:
        if self.category is Category.FORWARDER:
            return f"forwarder:{self.reason}"
        return f"upgradeable:{self.category.value}"

    def tainted_assignments(self) -> list[AssignmentFinding]:
        return sorted((f for f in self.assignments if f.value_taint), key=lambda f: (f.offset, str(f.writer_selector)))

    def evidence_offsets(self) -> list[int]:
        offs = set(self.resolution.evidence)
        for f in self.assignments:
            offs.add(f.offset)
            offs.update(f.path_offsets)
        return sorted(offs)

    def to_json(self) -> dict:
        return {
            "address": str(self.subject),
            "target": str(self.target),
            "class": self.category.value,
            "label": self.label,
            "reason": self.reason,
            "flags": sorted(f.value for f in self.flags),
            "resolution": self.resolution.to_json(),
            "assignments": [f.to_json() for f in self.tainted_assignments()],
            "writer_code": str(self.writer_code) if self.writer_code else None,
            "beacon": str(self.beacon) if self.beacon else None,
            "evidence_offsets": self.evidence_offsets(),
        }


def _fetch(code_lookup: CodeLookup, address: Address) -> bytes:
    try:
        return bytes(code_lookup(address))
    except MissingCode:
        raise
    except (GatewayError, LookupError) as exc:
        raise MissingCode(address, exc) from exc


def _tainted(code: bytes, slot: SlotExpr, budget: int) -> frozenset[AssignmentFinding]:
    return frozenset(f for f in find_slot_assignments(code, slot, budget) if f.value_taint)


def getter_slots(code: bytes, selector: Selector | None, budget: int = DEFAULT_BUDGET):
    """Storage slots (and constants) returned by ``selector`` on ``code``."""
    slots: list[SlotExpr] = []
    constants: list[int] = []
    for ev in interpret(code, Entry.DISPATCH, budget).of_kind("RETURN"):
        if selector is not None and ev.selector != selector:
            continue
        v = ev.data
        if v is None:
            continue
        if v.tag is Tag.STORAGE and v.slot.kind is not SlotKind.UNKNOWN and v.slot not in slots:
            slots.append(v.slot)
        elif v.tag is Tag.CONST:
            constants.append(v.word)
    return slots, constants


def _beacon_address(
    callee: TargetResolution,
    selector: Selector | None,
    evidence: ProxyEvidence,
    storage_read: StorageRead | None,
) -> Address | None:
    if callee.kind is ResolutionKind.HARDCODED:
        return callee.address
    if callee.kind is ResolutionKind.FROM_SLOT and storage_read is not None:
        try:
            word = storage_read(evidence.proxy, callee.slot.word)
        except (GatewayError, LookupError):
            word = 0
        if word:
            return Address.from_word(word)
    # Fall back to the trace: the frame the proxy queried right before delegating.
    for to, sel in reversed(evidence.prior_calls):
        if selector is None or sel == selector:
            return to
    return None


def classify(
    evidence: ProxyEvidence,
    proxy_code: bytes,
    code_lookup: CodeLookup,
    storage_read: StorageRead | None = None,
    *,
    budget: int = DEFAULT_BUDGET,
    created_via_create2: bool | None = None,
) -> Verdict:
    """Decide whether the proxy in ``evidence`` can have its target changed.

    Checks run in order: the target literally embedded in code; a target slot
    the proxy itself can overwrite from calldata (regular); the same slot
    overwritten by the logic contract (UUPS); a target fetched from another
    contract whose own slot is overwritable (beacon). Anything else is a
    forwarder, flagged when the analysis could not resolve the target.
    """
    proxy_code = bytes(proxy_code)
    if not proxy_code:
        raise MissingCode(evidence.proxy)
    subject, target = evidence.proxy, evidence.target

    flags: set[Flag] = set()
    if metamorphic_risk(proxy_code, created_via_create2) == "at-risk":
        flags.add(Flag.METAMORPHIC)
    if detect_transparent(proxy_code, budget):
        flags.add(Flag.TRANSPARENT)

    sites = resolve_delegate_target(proxy_code, budget)
    resolution = primary_resolution(sites)
    if interpret(proxy_code, Entry.FALLBACK, budget).truncated:
        flags.add(Flag.TRUNCATED)

    def verdict(category: Category, reason: str | None = None, **kw) -> Verdict:
        return Verdict(subject, target, category, resolution, reason, flags=frozenset(flags), **kw)

    where = literal_locations(proxy_code, target)
    if where:
        if where & {"push20", "push"}:
            return verdict(Category.FORWARDER, "hardcoded")
        if "push32" in where:
            return verdict(Category.FORWARDER, "immutable-in-code")
        return verdict(Category.FORWARDER, "code-embedded-constant")

    kind = resolution.kind
    if kind is ResolutionKind.HARDCODED:
        return verdict(Category.FORWARDER, "hardcoded")

    if kind is ResolutionKind.FROM_SLOT:
        if interpret(proxy_code, Entry.DISPATCH, budget).truncated:
            flags.add(Flag.TRUNCATED)
        own = _tainted(proxy_code, resolution.slot, budget)
        if own:
            return verdict(Category.REGULAR, assignments=own, writer_code=subject, writer_storage=subject)
        logic_code = _fetch(code_lookup, target)
        logic = _tainted(logic_code, resolution.slot, budget)
        if logic:
            return verdict(Category.UUPS, assignments=logic, writer_code=target, writer_storage=subject)
        return verdict(Category.FORWARDER, "slot-never-assigned")

    if kind is ResolutionKind.FROM_EXTERNAL_CALL:
        beacon = _beacon_address(resolution.callee, resolution.selector, evidence, storage_read)
        if beacon is None:
            flags.add(Flag.TRUNCATED)
            return verdict(Category.FORWARDER, "unresolved")
        beacon_code = _fetch(code_lookup, beacon)
        slots, constants = getter_slots(beacon_code, resolution.selector, budget)
        found: set[AssignmentFinding] = set()
        for slot in slots:
            found |= _tainted(beacon_code, slot, budget)
        if found:
            return verdict(
                Category.BEACON,
                assignments=frozenset(found),
                writer_code=beacon,
                writer_storage=beacon,
                beacon=beacon,
            )
        if not slots and not constants:
            flags.add(Flag.TRUNCATED)
        return verdict(Category.FORWARDER, "beacon-immutable", beacon=beacon)

    flags.add(Flag.TRUNCATED)
    return verdict(Category.FORWARDER, "unresolved")
