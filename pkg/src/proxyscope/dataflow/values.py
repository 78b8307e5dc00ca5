"""Abstract values tracked by the interpreter."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..evm.types import WORD_MASK, Address, Selector, keccak256, word_to_hex


class SlotKind(enum.Enum):
    CONCRETE = "concrete"
    KECCAK = "keccak"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class SlotExpr:
    """A storage location: a literal word, ``keccak256(preimage)``, or unknown."""

    kind: SlotKind
    concrete: int | None = None
    preimage: bytes | None = None

    @classmethod
    def at(cls, word: int) -> SlotExpr:
        return cls(SlotKind.CONCRETE, concrete=word & WORD_MASK)

    @classmethod
    def keccak_of(cls, preimage: bytes) -> SlotExpr:
        return cls(SlotKind.KECCAK, preimage=bytes(preimage))

    @property
    def word(self) -> int | None:
        if self.kind is SlotKind.CONCRETE:
            return self.concrete
        if self.kind is SlotKind.KECCAK:
            return int.from_bytes(keccak256(self.preimage), "big")
        return None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.word is not None:
            out["word"] = word_to_hex(self.word)
        if self.preimage is not None:
            out["preimage"] = "0x" + self.preimage.hex()
        return out

    def __str__(self) -> str:
        if self.kind is SlotKind.CONCRETE:
            return f"slot[{self.concrete:#x}]"
        if self.kind is SlotKind.KECCAK:
            return f"slot[keccak(0x{self.preimage.hex()})]"
        return "slot[?]"


UNKNOWN_SLOT = SlotExpr(SlotKind.UNKNOWN)


class Tag(enum.Enum):
    CONST = "constant"
    CALLDATA = "calldata"
    STORAGE = "storage"
    CALLER = "caller"
    SELF = "self"  # ADDRESS: the executing account
    EXTERNAL = "external-return"
    OPAQUE = "opaque"


@dataclass(frozen=True, slots=True)
class Predicate:
    """``left == right``, or its negation when ``negated``."""

    left: AbstractValue
    right: AbstractValue
    negated: bool = False

    def flip(self) -> Predicate:
        return Predicate(self.left, self.right, not self.negated)

    def operands(self) -> tuple[AbstractValue, AbstractValue]:
        return self.left, self.right


@dataclass(frozen=True, slots=True)
class AbstractValue:
    tag: Tag
    word: int | None = None
    # STORAGE: the slot loaded.
    slot: SlotExpr | None = None
    # Offset of the SLOAD or call that produced the value.
    site: int | None = None
    # EXTERNAL: the callee value and the selector sent.
    callee: AbstractValue | None = None
    call_selector: Selector | None = None
    taint: bool = False
    # CONST produced by hashing constant memory.
    preimage: bytes | None = None
    # CALLDATA: "raw" for calldataload(0), "selector" once shifted down to 4 bytes.
    calldata_role: str | None = None
    # OPAQUE: the comparison this value encodes, if any.
    pred: Predicate | None = None

    @property
    def is_const(self) -> bool:
        return self.tag is Tag.CONST

    def as_slot(self) -> SlotExpr:
        if self.tag is Tag.CONST:
            if self.preimage is not None:
                return SlotExpr.keccak_of(self.preimage)
            return SlotExpr.at(self.word)
        return UNKNOWN_SLOT

    def __str__(self) -> str:
        t = "*" if self.taint else ""
        if self.tag is Tag.CONST:
            return f"{self.word:#x}"
        if self.tag is Tag.STORAGE:
            return f"SLOAD({self.slot}){t}"
        if self.tag is Tag.EXTERNAL:
            return f"RET@{self.site}({self.callee}){t}"
        if self.pred is not None:
            op = "!=" if self.pred.negated else "=="
            return f"({self.pred.left} {op} {self.pred.right}){t}"
        if self.calldata_role == "selector":
            return "msg.sig"
        return self.tag.value + t


def const(word: int, preimage: bytes | None = None) -> AbstractValue:
    return AbstractValue(Tag.CONST, word=word & WORD_MASK, preimage=preimage)


def opaque(taint: bool = False) -> AbstractValue:
    return _OPAQUE_T if taint else _OPAQUE


_OPAQUE = AbstractValue(Tag.OPAQUE)
_OPAQUE_T = AbstractValue(Tag.OPAQUE, taint=True)
CALLER = AbstractValue(Tag.CALLER)
SELF = AbstractValue(Tag.SELF)
CALLDATA = AbstractValue(Tag.CALLDATA, taint=True)


def address_of(value: AbstractValue) -> Address | None:
    if value.tag is Tag.CONST:
        return Address.from_word(value.word)
    return None
