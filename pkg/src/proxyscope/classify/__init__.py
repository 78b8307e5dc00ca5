"""Forwarder vs. upgradeable classification and system clustering."""

from .heuristics import (
    cluster,
    cluster_key,
    detect_eternal_storage,
    detect_transparent,
    mask_push20,
    metamorphic_risk,
)
from .verdict import FORWARDER_REASONS, Category, Flag, Verdict, classify, getter_slots

__all__ = [
    "FORWARDER_REASONS",
    "Category",
    "Flag",
    "Verdict",
    "classify",
    "cluster",
    "cluster_key",
    "detect_eternal_storage",
    "detect_transparent",
    "getter_slots",
    "mask_push20",
    "metamorphic_risk",
]
