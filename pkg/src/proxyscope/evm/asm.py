"""A tiny label-aware assembler for handwritten EVM fixtures.

Syntax, whitespace separated::

    PUSH1 0x80 PUSH1 0x40 MSTORE      mnemonics with explicit-width operands
    PUSH 0x1234                       smallest PUSH that fits
    @body JUMPI                       PUSH2 of a label's offset
    body:                             define a label and emit JUMPDEST
    .bytes 0xdeadbeef                 raw bytes
    ; comment                         to end of line
"""

from __future__ import annotations

from .opcodes import BY_NAME
from .types import hex_to_bytes


class AssemblyError(ValueError):
    pass


def _int(token: str) -> int:
    try:
        return int(token, 0)
    except ValueError:
        raise AssemblyError(f"bad operand {token!r}") from None


def _tokens(source: str) -> list[str]:
    out: list[str] = []
    for line in source.splitlines():
        line = line.split(";", 1)[0]
        out.extend(line.split())
    return out


def assemble(source: str) -> bytes:
    toks = _tokens(source)
    # (kind, payload) items; label pushes are resolved in the second pass.
    items: list[tuple[str, object]] = []
    labels: dict[str, int] = {}
    pc = 0
    i = 0
    while i < len(toks):
        tok = toks[i]
        i += 1
        if tok.endswith(":"):
            name = tok[:-1]
            if name in labels:
                raise AssemblyError(f"duplicate label {name!r}")
            labels[name] = pc
            items.append(("raw", bytes([BY_NAME["JUMPDEST"]])))
            pc += 1
        elif tok.startswith("@"):
            items.append(("label", tok[1:]))
            pc += 3
        elif tok == ".bytes":
            data = hex_to_bytes(toks[i])
            i += 1
            items.append(("raw", data))
            pc += len(data)
        elif tok.upper() == "PUSH":
            value = _int(toks[i])
            i += 1
            width = max(1, (value.bit_length() + 7) // 8)
            items.append(("raw", bytes([0x5F + width]) + value.to_bytes(width, "big")))
            pc += 1 + width
        else:
            name = tok.upper()
            if name not in BY_NAME:
                raise AssemblyError(f"unknown mnemonic {tok!r}")
            op = BY_NAME[name]
            if name.startswith("PUSH"):
                width = int(name[4:])
                operand = toks[i]
                i += 1
                if operand.lower().startswith("0x") and len(operand) - 2 == 2 * width:
                    data = hex_to_bytes(operand)
                else:
                    value = _int(operand)
                    if value.bit_length() > 8 * width:
                        raise AssemblyError(f"{operand} does not fit {name}")
                    data = value.to_bytes(width, "big")
                items.append(("raw", bytes([op]) + data))
                pc += 1 + width
            else:
                items.append(("raw", bytes([op])))
                pc += 1

    out = bytearray()
    for kind, payload in items:
        if kind == "label":
            if payload not in labels:
                raise AssemblyError(f"undefined label {payload!r}")
            out += bytes([BY_NAME["PUSH2"]]) + labels[payload].to_bytes(2, "big")
        else:
            out += payload
    return bytes(out)
