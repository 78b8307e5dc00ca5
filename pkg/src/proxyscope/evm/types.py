"""Fixed-width byte types shared across the toolkit."""

from __future__ import annotations

from Crypto.Hash import keccak as _keccak

WORD_MASK = (1 << 256) - 1
ADDRESS_MASK = (1 << 160) - 1


def keccak256(data: bytes) -> bytes:
    return _keccak.new(digest_bits=256, data=bytes(data)).digest()


def _strip_hex(text: str) -> str:
    text = text.strip()
    if text[:2] in ("0x", "0X"):
        text = text[2:]
    return text


def hex_to_bytes(text: str) -> bytes:
    """Decode ``0x``-prefixed (or bare) hex; an odd nibble count is left-padded."""
    text = _strip_hex(text)
    if len(text) % 2:
        text = "0" + text
    return bytes.fromhex(text)


class _FixedBytes(bytes):
    size = 0

    def __new__(cls, value: bytes | bytearray | str | int = b""):
        if isinstance(value, str):
            value = hex_to_bytes(value)
        elif isinstance(value, int):
            if value < 0 or value >= 1 << (8 * cls.size):
                raise ValueError(f"{value:#x} does not fit in {cls.size} bytes")
            value = value.to_bytes(cls.size, "big")
        if len(value) != cls.size:
            raise ValueError(f"{cls.__name__} needs exactly {cls.size} bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __str__(self) -> str:
        return "0x" + self.hex()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({str(self)!r})"

    def to_int(self) -> int:
        return int.from_bytes(self, "big")


class Address(_FixedBytes):
    """A 20-byte account address rendered as lowercase ``0x`` hex."""

    size = 20

    @classmethod
    def from_word(cls, word: int) -> Address:
        return cls(word & ADDRESS_MASK)

    @property
    def is_zero(self) -> bool:
        return not any(self)


class Selector(_FixedBytes):
    """First four bytes of calldata naming a function."""

    size = 4

    @classmethod
    def from_signature(cls, signature: str) -> Selector:
        return cls(keccak256(signature.encode())[:4])


ZERO_ADDRESS = Address(0)


def word_to_hex(word: int) -> str:
    return "0x" + (word & WORD_MASK).to_bytes(32, "big").hex()


def word_from(value: int | str | bytes) -> int:
    """Coerce an int, hex string or byte string into a 256-bit word."""
    if isinstance(value, int):
        word = value
    elif isinstance(value, str):
        word = int(_strip_hex(value) or "0", 16)
    else:
        if len(value) > 32:
            raise ValueError("word wider than 32 bytes")
        word = int.from_bytes(value, "big")
    if not 0 <= word <= WORD_MASK:
        raise ValueError("word out of range")
    return word


def storage_label_slot(label: str) -> int:
    """``keccak256(label) - 1``, the derivation used for EIP-1967 style slots."""
    return int.from_bytes(keccak256(label.encode()), "big") - 1


EIP1967_IMPLEMENTATION_SLOT = storage_label_slot("eip1967.proxy.implementation")
EIP1967_ADMIN_SLOT = storage_label_slot("eip1967.proxy.admin")
EIP1967_BEACON_SLOT = storage_label_slot("eip1967.proxy.beacon")
