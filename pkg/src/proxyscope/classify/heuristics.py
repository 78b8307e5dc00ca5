"""Side checks that annotate verdicts without changing them."""

from __future__ import annotations

import re

from ..dataflow import DEFAULT_BUDGET, Entry, Tag, interpret
from ..dataflow.interpreter import Condition
from ..evm.disasm import Program, disassemble
from ..evm.types import keccak256


def _caller_operand(c: Condition):
    other = c.other_side(Tag.CALLER)
    if other is None:
        return None
    if other.tag is Tag.CONST:
        return ("address", other.word & ((1 << 160) - 1))
    if other.tag is Tag.STORAGE and other.slot.word is not None:
        return ("slot", other.slot.word)
    return None


def detect_transparent(code: bytes, budget: int = DEFAULT_BUDGET) -> bool:
    """Does a CALLER-vs-admin comparison split the upgrade path from the forwarding path?

    True when some DELEGATECALL is reached only after CALLER compared unequal
    to an admin value, and some calldata-driven SSTORE is reached after CALLER
    compared equal to that same value.
    """
    prog = Program(bytes(code))
    if not prog.has_opcode("CALLER") or not prog.has_opcode("DELEGATECALL"):
        return False
    interp = interpret(code, Entry.DISPATCH, budget)
    not_admin: set = set()
    for ev in interp.of_kind("DELEGATECALL"):
        for c in ev.conditions:
            key = _caller_operand(c)
            if key is not None and not c.equal:
                not_admin.add(key)
    if not not_admin:
        return False
    for ev in interp.of_kind("SSTORE"):
        if not ev.operands[1].taint:
            continue
        for c in ev.conditions:
            if c.equal and _caller_operand(c) in not_admin:
                return True
    return False


def metamorphic_risk(code: bytes, created_via_create2: bool | None) -> str:
    """``ruled-out``, ``at-risk`` or ``unknown`` for in-place code replacement.

    A contract can only be redeployed at its own address if it came from
    CREATE2 and can self-destruct, directly or through a DELEGATECALL/CALLCODE
    into code that does.
    """
    prog = Program(bytes(code))
    channel = prog.has_opcode("SELFDESTRUCT", "DELEGATECALL", "CALLCODE")
    if created_via_create2 is False or not channel:
        return "ruled-out"
    if created_via_create2:
        return "at-risk"
    return "unknown"


_PRIMITIVES = {
    "uint": "uint", "uint256": "uint", "int": "int", "int256": "int",
    "bool": "bool", "address": "address", "string": "string", "bytes": "bytes",
    "bytes32": "bytes32",
}
_MAPPING = re.compile(
    r"mapping\s*\(\s*bytes32\s*=>\s*(\w+)\s*\)\s*(?:(?:public|internal|private)\s+)?(\w+)\s*;"
)
_FUNCTION = re.compile(r"function\s+(\w+)\s*\(([^)]*)\)[^{;]*\{")


def _function_bodies(source: str) -> list[tuple[str, str, str]]:
    out = []
    for m in _FUNCTION.finditer(source):
        depth, i = 1, m.end()
        while i < len(source) and depth:
            depth += {"{": 1, "}": -1}.get(source[i], 0)
            i += 1
        out.append((m.group(1), m.group(2), source[m.end() : i - 1]))
    return out


def detect_eternal_storage(source_text: str) -> bool:
    """Does the source declare per-type ``bytes32``-keyed mappings with get/set pairs?

    Needs at least two distinct primitive types, each with a mapping, a
    function that returns an entry of it, and a function that assigns one.
    """
    source = re.sub(r"//[^\n]*|/\*.*?\*/", "", source_text, flags=re.S)
    stores: dict[str, str] = {}
    for m in _MAPPING.finditer(source):
        kind = _PRIMITIVES.get(m.group(1))
        if kind is not None:
            stores[m.group(2)] = kind
    if len(set(stores.values())) < 2:
        return False
    bodies = _function_bodies(source)
    complete: set[str] = set()
    for var, kind in stores.items():
        read = re.compile(rf"return\s+{re.escape(var)}\s*\[")
        write = re.compile(rf"{re.escape(var)}\s*\[[^\]]*\]\s*=(?!=)")
        has_get = any(read.search(body) for _, _, body in bodies)
        has_set = any(write.search(body) for _, _, body in bodies)
        if has_get and has_set:
            complete.add(kind)
    return len(complete) >= 2


def mask_push20(code: bytes) -> bytes:
    """``code`` with every PUSH20 operand zeroed."""
    out = bytearray(code)
    for ins in disassemble(code):
        if ins.name == "PUSH20":
            end = min(len(code), ins.offset + 21)
            out[ins.offset + 1 : end] = bytes(end - ins.offset - 1)
    return bytes(out)


def cluster_key(code: bytes) -> bytes:
    return keccak256(mask_push20(bytes(code)))


def cluster(verdicts, code_lookup) -> dict:
    """Map each verdict's subject address to the digest of its PUSH20-masked code."""
    return {v.subject: cluster_key(code_lookup(v.subject)) for v in verdicts}
