"""Linear-sweep disassembly of runtime bytecode."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from . import opcodes


@dataclass(frozen=True, slots=True)
class Instruction:
    offset: int
    opcode: int
    name: str
    # PUSH operand, zero-padded to its full width when the code ends early.
    immediate: bytes | None = None
    truncated: bool = False

    @property
    def size(self) -> int:
        return 1 + (len(self.immediate) if self.immediate is not None else 0)

    @property
    def value(self) -> int | None:
        if self.immediate is None:
            return None
        return int.from_bytes(self.immediate, "big")

    def __str__(self) -> str:
        text = f"{self.offset:04x}  {self.name}"
        if self.immediate is not None:
            text += " 0x" + self.immediate.hex()
        if self.truncated:
            text += "  (truncated)"
        return text


def disassemble(code: bytes) -> list[Instruction]:
    """Decode every byte of ``code``; undefined opcodes become ``INVALID``."""
    out: list[Instruction] = []
    pc = 0
    n = len(code)
    while pc < n:
        op = code[pc]
        info = opcodes.info(op)
        width = info.immediate_size
        if width:
            raw = code[pc + 1 : pc + 1 + width]
            truncated = len(raw) < width
            out.append(Instruction(pc, op, info.name, raw.ljust(width, b"\x00"), truncated))
            pc += 1 + width
        else:
            out.append(Instruction(pc, op, info.name))
            pc += 1
    return out


def serialize(instructions: list[Instruction]) -> bytes:
    """Inverse of :func:`disassemble`; a truncated PUSH keeps its zero padding."""
    buf = bytearray()
    for ins in instructions:
        buf.append(ins.opcode)
        if ins.immediate is not None:
            buf += ins.immediate
    return bytes(buf)


_METADATA_MARKERS = (b"\xa1\x65bzzr", b"\xa2\x65bzzr", b"\xa2\x64ipfs", b"\xa3\x64ipfs")


def code_section_end(code: bytes) -> int:
    """Offset where solc's CBOR metadata trailer starts, or ``len(code)``."""
    if len(code) >= 2:
        length = int.from_bytes(code[-2:], "big")
        start = len(code) - 2 - length
        if 0 <= start < len(code) - 2 and any(
            code.startswith(marker, start) for marker in _METADATA_MARKERS
        ):
            return start
    best = -1
    for marker in _METADATA_MARKERS:
        best = max(best, code.rfind(marker))
    return best if best >= 0 else len(code)


@dataclass(frozen=True)
class Program:
    """Disassembled code with offset lookup."""

    code: bytes

    @cached_property
    def instructions(self) -> list[Instruction]:
        return disassemble(self.code)

    @cached_property
    def index(self) -> dict[int, int]:
        return {ins.offset: i for i, ins in enumerate(self.instructions)}

    @cached_property
    def jumpdests(self) -> frozenset[int]:
        return frozenset(ins.offset for ins in self.instructions if ins.name == "JUMPDEST")

    def at(self, offset: int) -> Instruction | None:
        i = self.index.get(offset)
        return None if i is None else self.instructions[i]

    @cached_property
    def code_end(self) -> int:
        return code_section_end(self.code)

    def has_opcode(self, *names: str) -> bool:
        """Whether any instruction before the metadata trailer is one of ``names``."""
        wanted = set(names)
        end = self.code_end
        return any(ins.name in wanted for ins in self.instructions if ins.offset < end)
