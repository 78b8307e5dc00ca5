"""Abstract interpretation of proxy bytecode: target resolution and assignment search."""

from .analysis import (
    AssignmentFinding,
    DelegateSite,
    Guard,
    ResolutionKind,
    TargetResolution,
    all_assignments,
    extract_caller_guard,
    find_slot_assignments,
    guard_from_conditions,
    primary_resolution,
    resolve_delegate_target,
)
from .interpreter import (
    DEFAULT_BUDGET,
    Condition,
    Entry,
    Event,
    Interpretation,
    MalformedJumpTable,
    interpret,
)
from .values import UNKNOWN_SLOT, AbstractValue, SlotExpr, SlotKind, Tag

__all__ = [
    "DEFAULT_BUDGET",
    "UNKNOWN_SLOT",
    "AbstractValue",
    "AssignmentFinding",
    "Condition",
    "DelegateSite",
    "Entry",
    "Event",
    "Guard",
    "Interpretation",
    "MalformedJumpTable",
    "ResolutionKind",
    "SlotExpr",
    "SlotKind",
    "Tag",
    "TargetResolution",
    "all_assignments",
    "extract_caller_guard",
    "find_slot_assignments",
    "guard_from_conditions",
    "interpret",
    "primary_resolution",
    "resolve_delegate_target",
]
