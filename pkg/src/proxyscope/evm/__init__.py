"""Bytecode decoding, selector extraction and address derivation."""

from .asm import assemble
from .disasm import Instruction, Program, code_section_end, disassemble, serialize
from .inspect import (
    code_digest,
    compute_create2_address,
    contains_address_literal,
    extract_selectors,
    literal_locations,
)
from .types import (
    EIP1967_ADMIN_SLOT,
    EIP1967_BEACON_SLOT,
    EIP1967_IMPLEMENTATION_SLOT,
    ZERO_ADDRESS,
    Address,
    Selector,
    keccak256,
    word_from,
    word_to_hex,
)

__all__ = [
    "EIP1967_ADMIN_SLOT",
    "EIP1967_BEACON_SLOT",
    "EIP1967_IMPLEMENTATION_SLOT",
    "ZERO_ADDRESS",
    "Address",
    "Instruction",
    "Program",
    "Selector",
    "assemble",
    "code_digest",
    "code_section_end",
    "compute_create2_address",
    "contains_address_literal",
    "disassemble",
    "extract_selectors",
    "keccak256",
    "literal_locations",
    "serialize",
    "word_from",
    "word_to_hex",
]
