from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from proxyscope.corpus import (
    SAFE_PROXY_CODE,
    beacon_proxy,
    eip1967_regular,
    keccak_slot_proxy,
    minimal_proxy,
)
from proxyscope.dataflow import (
    Entry,
    ResolutionKind,
    SlotExpr,
    SlotKind,
    Tag,
    all_assignments,
    extract_caller_guard,
    find_slot_assignments,
    interpret,
    primary_resolution,
    resolve_delegate_target,
)
from proxyscope.evm import EIP1967_ADMIN_SLOT, EIP1967_IMPLEMENTATION_SLOT, Address, Selector, assemble, keccak256

import pytest


def _sstores(code, entry=Entry.DISPATCH):
    return interpret(code, entry).of_kind("SSTORE")


def test_constant_store():
    (ev,) = _sstores(assemble("PUSH1 0x01 PUSH1 0x05 SSTORE STOP"))
    slot, value = ev.operands
    assert slot.is_const and slot.word == 5
    assert value.is_const and value.word == 1 and not value.taint


def test_calldata_store_is_tainted():
    (ev,) = _sstores(assemble("PUSH1 0x04 CALLDATALOAD PUSH1 0x00 SSTORE STOP"))
    assert ev.operands[1].taint


def test_taint_survives_arithmetic_and_memory():
    code = assemble("""
        PUSH1 0x04 CALLDATALOAD PUSH1 0x07 ADD PUSH1 0x40 MSTORE
        PUSH1 0x40 MLOAD PUSH1 0x02 SSTORE STOP
    """)
    (ev,) = _sstores(code)
    assert ev.operands[1].taint


def test_keccak_of_constant_memory_is_a_keccak_slot():
    code = assemble("PUSH1 0x2a PUSH1 0x00 MSTORE PUSH1 0x01 PUSH1 0x20 PUSH1 0x00 SHA3 SSTORE STOP")
    (ev,) = _sstores(code)
    slot = ev.operands[0].as_slot()
    assert slot.kind is SlotKind.KECCAK
    assert slot.word == int.from_bytes(oracles.keccak256((0x2A).to_bytes(32, "big")), "big")


def test_resolution_kinds():
    t = Address("0x" + "bb" * 20)
    assert primary_resolution(resolve_delegate_target(minimal_proxy(t))).address == t
    res = primary_resolution(resolve_delegate_target(eip1967_regular()))
    assert res.kind is ResolutionKind.FROM_SLOT and res.slot == SlotExpr.at(EIP1967_IMPLEMENTATION_SLOT)
    res = primary_resolution(resolve_delegate_target(beacon_proxy()))
    assert res.kind is ResolutionKind.FROM_EXTERNAL_CALL
    assert res.callee.kind is ResolutionKind.FROM_SLOT
    assert res.selector == Selector.from_signature("implementation()")
    res = primary_resolution(resolve_delegate_target(SAFE_PROXY_CODE))
    assert res.kind is ResolutionKind.FROM_SLOT and res.slot.word == 0


def test_keccak_slot_resolution_carries_preimage():
    res = primary_resolution(resolve_delegate_target(keccak_slot_proxy()))
    assert res.kind is ResolutionKind.FROM_SLOT
    assert res.slot.preimage == b"org.zeppelinos.proxy.implementation"


def test_calldata_target_and_disagreeing_paths():
    code = assemble("""
        PUSH1 0x00 PUSH1 0x00 PUSH1 0x00 PUSH1 0x00 PUSH1 0x24 CALLDATALOAD GAS DELEGATECALL STOP
    """)
    assert primary_resolution(resolve_delegate_target(code)).kind is ResolutionKind.FROM_CALLDATA
    code = assemble("""
        CALLVALUE @b JUMPI PUSH1 0x01 @go JUMP
        b: PUSH1 0x02
        go: PUSH1 0x00 DUP1 DUP1 DUP1 DUP5 GAS DELEGATECALL STOP
    """)
    (site,) = resolve_delegate_target(code)
    assert site.resolution.kind is ResolutionKind.UNRESOLVED


def test_no_delegatecall_and_garbage():
    assert primary_resolution(resolve_delegate_target(assemble("STOP"))).kind is ResolutionKind.UNRESOLVED
    (site,) = resolve_delegate_target(assemble("PUSH1 0x03 JUMP STOP"))
    assert site.resolution.kind is ResolutionKind.UNRESOLVED


def test_fallback_entry_skips_dispatched_functions():
    code = eip1967_regular()
    assert not interpret(code, Entry.FALLBACK).of_kind("SSTORE")
    stores = _sstores(code)
    assert {ev.selector for ev in stores} == {Selector.from_signature("upgradeTo(address)")}


def test_assignment_search_and_guard():
    code = eip1967_regular()
    (finding,) = find_slot_assignments(code, SlotExpr.at(EIP1967_IMPLEMENTATION_SLOT))
    assert finding.value_taint and finding.writer_selector == Selector.from_signature("upgradeTo(address)")
    guard = extract_caller_guard(code, finding)
    assert guard.slot == SlotExpr.at(EIP1967_ADMIN_SLOT) and guard.address is None
    with pytest.raises(ValueError):
        find_slot_assignments(code, SlotExpr(SlotKind.UNKNOWN))


def test_guard_requires_every_path():
    code = assemble("""
        PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR
        DUP1 PUSH4 0x3659cfe6 EQ @up JUMPI STOP
        up: CALLVALUE @free JUMPI
            PUSH1 0x00 SLOAD CALLER EQ @ok JUMPI PUSH1 0x00 DUP1 REVERT
        ok: free: PUSH1 0x04 CALLDATALOAD PUSH1 0x01 SSTORE STOP
    """)
    (finding,) = [f for f in all_assignments(code) if f.slot.word == 1]
    assert finding.guard is None


def test_hardcoded_guard():
    admin = Address("0x" + "cd" * 20)
    code = assemble(f"""
        PUSH20 {admin} CALLER EQ @ok JUMPI STOP
        ok: PUSH1 0x04 CALLDATALOAD PUSH1 0x01 SSTORE STOP
    """)
    (finding,) = all_assignments(code)
    assert finding.guard.address == admin


def test_loops_terminate_and_widen():
    code = assemble("""
        PUSH1 0x00
        top: PUSH1 0x01 ADD DUP1 PUSH1 0x00 SSTORE DUP1 PUSH2 0xffff GT @top JUMPI STOP
    """)
    interp = interpret(code)
    assert not interp.truncated
    assert any(not ev.operands[1].is_const for ev in interp.of_kind("SSTORE"))


def test_budget_truncates():
    code = assemble("PUSH1 0x00 top: PUSH1 0x01 ADD DUP1 PUSH1 0x00 SSTORE CALLVALUE @top JUMPI STOP")
    assert interpret(code, budget=10).truncated


def test_interpretation_is_cached():
    code = assemble("PUSH1 0x01 PUSH1 0x05 SSTORE STOP")
    assert interpret(code) is interpret(code)


# --- soundness against the concrete oracle ---------------------------------

_BINOPS = ["ADD", "MUL", "SUB", "DIV", "MOD", "LT", "GT", "EQ", "AND", "OR", "XOR", "SHL", "SHR", "BYTE", "EXP"]


@st.composite
def straight_line(draw):
    """Random straight-line programs over constants, calldata, memory and hashing."""
    lines, depth = [], 0
    for _ in range(draw(st.integers(3, 40))):
        choice = draw(st.integers(0, 9))
        if choice <= 2 or depth < 2:
            lines.append(f"PUSH {draw(st.integers(0, 2**256 - 1)) if choice else draw(st.integers(0, 300))}")
            depth += 1
        elif choice == 3:
            lines.append("PUSH1 0x04 CALLDATALOAD")
            depth += 1
        elif choice in (4, 5):
            lines.append(draw(st.sampled_from(_BINOPS)))
            depth -= 1
        elif choice == 6:
            lines.append(f"DUP{draw(st.integers(1, min(depth, 4)))}")
            depth += 1
        elif choice == 7:
            lines.append(f"SWAP{draw(st.integers(1, min(depth - 1, 4)))}" if depth > 1 else "ISZERO")
        elif choice == 8:
            lines.append(f"PUSH {draw(st.sampled_from([0, 32, 64]))} MSTORE PUSH 32 PUSH {draw(st.sampled_from([0, 32]))} SHA3")
            depth -= 1
        else:
            lines.append(f"PUSH {draw(st.integers(0, 3))} SSTORE")
            depth -= 1
    lines.append("CALLER PUSH 9 SSTORE STOP")
    return assemble("\n".join(lines))


@given(straight_line(), st.binary(min_size=36, max_size=36), st.binary(min_size=36, max_size=36))
@settings(max_examples=300, deadline=None)
def test_abstract_stores_agree_with_concrete_runs(code, cd1, cd2):
    run1 = oracles.run(code, calldata=cd1)
    run2 = oracles.run(code, calldata=cd2)
    if run1["halt"] != "stop" or run2["halt"] != "stop":
        return
    abstract = {ev.offset: ev.operands for ev in _sstores(code)}
    for (pc, slot1, v1), (_, slot2, v2) in zip(run1["sstores"], run2["sstores"]):
        a_slot, a_val = abstract[pc]
        if a_slot.is_const:
            assert a_slot.word == slot1 == slot2
        if a_val.is_const:
            assert a_val.word == v1 == v2
        if v1 != v2:
            # Calldata changed the stored value, so it must be marked.
            assert a_val.taint
        if a_val.tag is Tag.CALLER:
            assert v1 == 0xCA11E5


def test_oracle_runs_dispatch_correctly():
    code = eip1967_regular()
    call = bytes(Selector.from_signature("upgradeTo(address)")) + bytes(12) + b"\x11" * 20
    admin = 0xCA11E5
    ok = oracles.run(code, calldata=call, storage={EIP1967_ADMIN_SLOT: admin})
    assert ok["storage"][EIP1967_IMPLEMENTATION_SLOT] == int.from_bytes(b"\x11" * 20, "big")
    denied = oracles.run(code, calldata=call, storage={EIP1967_ADMIN_SLOT: 1})
    assert denied["halt"] == "revert" and EIP1967_IMPLEMENTATION_SLOT not in denied["storage"]
    assert keccak256(b"") == oracles.keccak256(b"")
