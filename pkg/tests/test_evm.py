from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from proxyscope.corpus import SAFE_PROXY_CODE, metadata_trailer, minimal_proxy
from proxyscope.evm import (
    EIP1967_ADMIN_SLOT,
    EIP1967_BEACON_SLOT,
    EIP1967_IMPLEMENTATION_SLOT,
    Address,
    Program,
    Selector,
    assemble,
    code_section_end,
    compute_create2_address,
    disassemble,
    extract_selectors,
    keccak256,
    literal_locations,
    serialize,
)
from proxyscope.evm.asm import AssemblyError
from proxyscope.evm.opcodes import OPCODES, info

# (factory, salt, init code, expected address) from the CREATE2 proposal's
# worked examples; each was re-derived with the pure-Python oracle.
EIP1014_VECTORS = [
    ("0x0000000000000000000000000000000000000000", "00" * 32, "00",
     "0x4D1A2e2bB4F88F0250f26Ffff098B0b30B26BF38"),
    ("0xdeadbeef00000000000000000000000000000000", "00" * 32, "00",
     "0xB928f69Bb1D91Cd65274e3c79d8986362984fDA3"),
    ("0xdeadbeef00000000000000000000000000000000",
     "000000000000000000000000feed000000000000000000000000000000000000", "00",
     "0xD04116cDd17beBE565EB2422F2497E06cC1C9833"),
    ("0x0000000000000000000000000000000000000000", "00" * 32, "deadbeef",
     "0x70f2b2914A2a4b783FaEFb75f459A580616Fcb5e"),
    ("0x00000000000000000000000000000000deadbeef",
     "00000000000000000000000000000000000000000000000000000000cafebabe", "deadbeef",
     "0x60f3f640a8508fC6a86d45DF051962668E1e8AC7"),
    ("0x00000000000000000000000000000000deadbeef",
     "00000000000000000000000000000000000000000000000000000000cafebabe", "deadbeef" * 11,
     "0x1d8bfDC5D46DC4f61D6b6115972536eBE6A8854C"),
    ("0x0000000000000000000000000000000000000000", "00" * 32, "",
     "0xE33C0C7F7df4809055C3ebA6c09CFe4BaF1BD9e0"),
]


def test_keccak_matches_oracle():
    for data in (b"", b"abc", bytes(range(256)), b"x" * 135, b"x" * 136, b"x" * 137):
        assert keccak256(data) == oracles.keccak256(data)


def test_eip1967_slots_are_label_hash_minus_one():
    for slot, label in (
        (EIP1967_ADMIN_SLOT, "eip1967.proxy.admin"),
        (EIP1967_IMPLEMENTATION_SLOT, "eip1967.proxy.implementation"),
        (EIP1967_BEACON_SLOT, "eip1967.proxy.beacon"),
    ):
        assert slot == int.from_bytes(oracles.keccak256(label.encode()), "big") - 1
    assert EIP1967_ADMIN_SLOT == 0xB53127684A568B3173AE13B9F8A6016E243E63B6E8EE1178D6A717850B5D6103


def test_selector_from_signature():
    assert str(Selector.from_signature("transfer(address,uint256)")) == "0xa9059cbb"
    assert Selector.from_signature("upgradeTo(address)") == oracles.keccak256(b"upgradeTo(address)")[:4]


def test_address_parsing_and_rendering():
    a = Address("0xDeadBeef00000000000000000000000000000000")
    assert str(a) == "0xdeadbeef00000000000000000000000000000000"
    assert Address.from_word((1 << 200) | a.to_int()) == a
    assert Address(0).is_zero
    with pytest.raises(ValueError):
        Address("0x1234")


@pytest.mark.parametrize("factory,salt,init,expected", EIP1014_VECTORS)
def test_create2_reference_vectors(factory, salt, init, expected):
    got = compute_create2_address(Address(factory), bytes.fromhex(salt), bytes.fromhex(init))
    assert got == Address(expected)


def test_create2_random_triples_match_oracle():
    rng = random.Random(1014)
    for _ in range(25):
        factory = rng.randbytes(20)
        salt = rng.randbytes(32)
        init = rng.randbytes(rng.randrange(0, 300))
        assert bytes(compute_create2_address(Address(factory), salt, init)) == oracles.create2(factory, salt, init)


def test_create2_int_salt_and_bad_salt():
    f = Address(0)
    assert compute_create2_address(f, 0, b"") == Address(EIP1014_VECTORS[-1][3])
    with pytest.raises(ValueError):
        compute_create2_address(f, b"\x00" * 31, b"")


def test_opcode_table_covers_london():
    assert info(0x5F).name == "INVALID"  # PUSH0 arrived after London
    assert info(0x48).name == "BASEFEE"
    assert info(0xF4).name == "DELEGATECALL" and info(0xF4).pops == 6
    assert info(0xF1).pops == 7
    assert sum(1 for op in OPCODES if 0x60 <= op <= 0x7F) == 32
    assert info(0x0C).name == "INVALID"


@given(st.binary(max_size=300))
@settings(max_examples=300, deadline=None)
def test_disassemble_matches_naive_decoder(code):
    ours = [(i.offset, i.opcode, i.immediate or b"", i.truncated) for i in disassemble(code)]
    assert ours == oracles.decode(code)


@given(st.binary(max_size=300))
@settings(max_examples=300, deadline=None)
def test_serialize_round_trips(code):
    out = serialize(disassemble(code))
    assert out[: len(code)] == code
    assert set(out[len(code):]) <= {0}


@given(st.binary(max_size=300))
@settings(max_examples=200, deadline=None)
def test_jumpdests_match_oracle(code):
    assert Program(code).jumpdests == oracles.jumpdests(code)


def test_truncated_push_is_padded_and_flagged():
    ins = disassemble(bytes.fromhex("6001" + "61ab"))
    assert [i.name for i in ins] == ["PUSH1", "PUSH2"]
    assert ins[1].truncated and ins[1].immediate == b"\xab\x00"


def test_cross_check_with_pyevmasm():
    pyevmasm = pytest.importorskip("pyevmasm")
    rng = random.Random(7)
    for _ in range(50):
        code = rng.randbytes(200)
        ours = [i for i in disassemble(code) if not i.truncated]
        theirs = list(pyevmasm.disassemble_all(code))
        assert [i.offset for i in ours] == [t.pc for t in theirs][: len(ours)]
        for a, b in zip(ours, theirs):
            if a.name != "INVALID" and b.name not in ("INVALID", "UNKNOWN"):
                assert a.opcode == b.opcode
                if a.immediate is not None:
                    assert a.value == b.operand


def test_metadata_trailer_detection():
    body = assemble("PUSH1 0x01 PUSH1 0x00 SSTORE STOP")
    code = body + metadata_trailer("x")
    assert code_section_end(code) == len(body) + 1  # trailer starts after the INVALID separator
    assert code_section_end(body) == len(body)
    assert code_section_end(SAFE_PROXY_CODE) == 118


def test_has_opcode_ignores_metadata():
    code = assemble("STOP") + b"\xfe" + b"\xa2\x64ipfs\x58\x22" + b"\xff" * 34 + b"\x64solc\x43\x00\x08\x11\x00\x33"
    assert Program(code).has_opcode("SELFDESTRUCT") is False


def test_assemble_labels_and_widths():
    code = assemble("""
        PUSH 0x1234 @end JUMP   ; comment
        end: STOP
        .bytes 0xabcd
    """)
    assert code == bytes.fromhex("611234" + "610007" + "56" + "5b" + "00" + "abcd")
    with pytest.raises(AssemblyError):
        assemble("@nowhere JUMP")
    with pytest.raises(AssemblyError):
        assemble("FROB")
    with pytest.raises(AssemblyError):
        assemble("PUSH1 0x1234")


def test_extract_selectors_dispatch_shapes():
    code = assemble("""
        PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR
        DUP1 PUSH4 0x3659cfe6 EQ @a JUMPI
        DUP1 PUSH4 0x5c60da1b XOR ISZERO @b JUMPI
        DUP1 PUSH4 0x11111111 SUB @a JUMPI
        PUSH4 0x22222222 POP
        STOP
        a: STOP
        b: STOP
    """)
    assert extract_selectors(code) == {Selector("0x3659cfe6"), Selector("0x5c60da1b")}


def test_extract_selectors_on_safe_proxy_and_clone():
    # The safe proxy compares a full calldata word rather than a PUSH4.
    assert extract_selectors(SAFE_PROXY_CODE) == set()
    assert extract_selectors(minimal_proxy(Address(1))) == set()


def test_literal_locations():
    t = Address("0x" + "ab" * 20)
    assert literal_locations(minimal_proxy(t), t) == {"push20", "raw"}
    word = assemble(f"PUSH32 {t.to_int():#066x} STOP")
    assert literal_locations(word, t) == {"push32", "raw"}
    assert literal_locations(assemble("STOP") + bytes(t), t) == {"raw"}
    hidden = assemble("STOP") + metadata_trailer("x")
    assert literal_locations(hidden, t) == set()
