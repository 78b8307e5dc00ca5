"""Static, pattern-level queries over runtime bytecode."""

from __future__ import annotations

from .disasm import Instruction, code_section_end, disassemble
from .types import Address, Selector, keccak256

# Instructions allowed between a comparison and its JUMPI without breaking the
# dispatch shape (stack shuffles and the jump-target push).
_GLUE = frozenset({"ISZERO", "PUSH1", "PUSH2", "PUSH3", "PUSH4"}) | {
    f"{k}{n}" for k in ("DUP", "SWAP") for n in range(1, 17)
}
_WINDOW = 4


def _dispatch_compare(stream: list[Instruction], i: int) -> bool:
    """Does the PUSH4 at ``i`` feed an EQ, or SUB/XOR then ISZERO, then a JUMPI?"""
    j = i + 1
    limit = min(len(stream), i + 1 + _WINDOW)
    while j < limit and stream[j].name.startswith(("DUP", "SWAP")):
        j += 1
    if j >= limit:
        return False
    cmp = stream[j].name
    if cmp not in ("EQ", "SUB", "XOR"):
        return False
    saw_iszero = False
    for k in range(j + 1, min(len(stream), j + 1 + _WINDOW)):
        name = stream[k].name
        if name == "JUMPI":
            # SUB/XOR are non-zero on mismatch; only the ISZERO form jumps
            # into the body.
            return cmp == "EQ" or saw_iszero
        if name not in _GLUE:
            return False
        saw_iszero |= name == "ISZERO"
    return False


def extract_selectors(code: bytes) -> set[Selector]:
    """Selectors compared against in a dispatch table (EQ, SUB+ISZERO, XOR+ISZERO)."""
    stream = [ins for ins in disassemble(code) if ins.offset < code_section_end(code)]
    found: set[Selector] = set()
    for i, ins in enumerate(stream):
        if ins.name == "PUSH4" and not ins.truncated and _dispatch_compare(stream, i):
            found.add(Selector(ins.immediate))
    return found


def compute_create2_address(factory: Address, salt: int | bytes, init_code: bytes) -> Address:
    """``keccak256(0xff ++ factory ++ salt ++ keccak256(init_code))[12:]``."""
    if isinstance(salt, int):
        salt = salt.to_bytes(32, "big")
    if len(salt) != 32:
        raise ValueError("salt must be 32 bytes")
    digest = keccak256(b"\xff" + bytes(Address(factory)) + salt + keccak256(init_code))
    return Address(digest[12:])


def literal_locations(code: bytes, target: Address) -> set[str]:
    """Where ``target`` appears: any of ``{"push20", "push32", "raw"}``.

    PUSH immediates are searched over the whole code; the raw 20-byte window
    search stops at the metadata trailer.
    """
    needle = bytes(target)
    where: set[str] = set()
    for ins in disassemble(code):
        if ins.immediate is not None and len(ins.immediate) >= 20 and needle in ins.immediate:
            where.add("push20" if ins.name == "PUSH20" else "push32" if ins.name == "PUSH32" else "push")
    if needle in code[: code_section_end(code)]:
        where.add("raw")
    return where


def contains_address_literal(code: bytes, target: Address) -> bool:
    return bool(literal_locations(code, target))


def code_digest(code: bytes) -> bytes:
    return keccak256(code)
