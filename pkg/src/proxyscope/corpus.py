"""Handwritten fixture chain: proxies of every shape, with traces and ground-truth labels.

``build_corpus(directory)`` writes a fixture directory readable by
:class:`proxyscope.gateway.FixtureBackend`. All bytecode is assembled from
the snippets below, so the corpus is reproducible byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .evm.asm import assemble
from .evm.types import (
    EIP1967_ADMIN_SLOT,
    EIP1967_BEACON_SLOT,
    EIP1967_IMPLEMENTATION_SLOT,
    Address,
    Selector,
    keccak256,
)
from .gateway.fixture import write_account, write_manifest

SEL = {
    name: str(Selector.from_signature(sig))
    for name, sig in {
        "upgradeTo": "upgradeTo(address)",
        "upgradeToAndCall": "upgradeToAndCall(address,bytes)",
        "implementation": "implementation()",
        "initialize": "initialize(address)",
        "owner": "owner()",
        "upgrade": "upgrade(address,address)",
        "kill": "kill()",
        "value": "value()",
        "setValue": "setValue(uint256)",
        "execute": "execute()",
    }.items()
}

MASK20 = "0x" + "ff" * 20
SAFE_PROXY_CODE = bytes.fromhex(
    "608060405273ffffffffffffffffffffffffffffffffffffffff600054167fa619486e0000000000000000000000"
    "000000000000000000000000000000000060003514156050578060005260206000f35b3660008037600080366000"
    "845af43d6000803e60008114156070573d6000fd5b3d6000f3fea265627a7a72315820d8a00dc4fe6bf675a9d741"
    "6fc2d00bb3433362aa8186b750f76c4027269667ff64736f6c634300050e0032"
)


def fixture_address(name: str) -> Address:
    return Address(keccak256(f"fixture:{name}".encode())[12:])


def metadata_trailer(tag: str) -> bytes:
    """A solc-shaped CBOR trailer (ipfs hash + compiler version), prefixed by INVALID."""
    digest = keccak256(tag.encode()) + b"\x12\x20"
    body = b"\xa2\x64ipfs\x58\x22" + digest[:34] + b"\x64solc\x43\x00\x08\x11"
    return b"\xfe" + body + len(body).to_bytes(2, "big")


def minimal_proxy(target: Address) -> bytes:
    return bytes.fromhex("363d3d373d3d3d363d73" + bytes(target).hex() + "5af43d82803e903d91602b57fd5bf3")


# --- snippets -------------------------------------------------------------

def _forward(p: str) -> str:
    """DELEGATECALL the address on top of the stack with the full calldata; bubble the result."""
    return f"""
        CALLDATASIZE PUSH1 0x00 PUSH1 0x00 CALLDATACOPY
        PUSH1 0x00 PUSH1 0x00 CALLDATASIZE PUSH1 0x00 DUP5 GAS DELEGATECALL
        RETURNDATASIZE PUSH1 0x00 PUSH1 0x00 RETURNDATACOPY
        RETURNDATASIZE PUSH1 0x00 DUP3 ISZERO @{p}_fail JUMPI RETURN
        {p}_fail: REVERT
    """


def _dispatch(functions: list[tuple[str, str]]) -> str:
    lines = [
        "PUSH1 0x80 PUSH1 0x40 MSTORE",
        "PUSH1 0x04 CALLDATASIZE LT @fallback JUMPI",
        "PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR",
    ]
    lines += [f"DUP1 PUSH4 {SEL[name]} EQ @{label} JUMPI" for name, label in functions]
    lines.append("@fallback JUMP")
    return "\n".join(lines)


def _revert() -> str:
    return "PUSH1 0x00 DUP1 REVERT"


def _guard_slot(slot: str, p: str) -> str:
    return f"{slot} SLOAD PUSH20 {MASK20} AND CALLER EQ @{p}_ok JUMPI {_revert()} {p}_ok:"


def _guard_address(admin: Address, p: str) -> str:
    return f"PUSH20 {admin} CALLER EQ @{p}_ok JUMPI {_revert()} {p}_ok:"


def _arg(n: int = 0) -> str:
    return f"PUSH1 {4 + 32 * n:#04x} CALLDATALOAD PUSH20 {MASK20} AND"


def _return_word() -> str:
    return "PUSH1 0x00 MSTORE PUSH1 0x20 PUSH1 0x00 RETURN"


def _word(slot: int) -> str:
    return f"PUSH32 {slot:#066x}"


def _hashed_label(label: str) -> str:
    """Leave keccak256(label) on the stack, computed at run time from memory."""
    raw = label.encode()
    stores = []
    for at in range(0, len(raw), 32):
        word = int.from_bytes(raw[at : at + 32].ljust(32, b"\x00"), "big")
        stores.append(f"PUSH32 {word:#066x} PUSH1 {at:#04x} MSTORE")
    return " ".join(stores) + f" PUSH1 {len(raw):#04x} PUSH1 0x00 SHA3"


# --- contracts ------------------------------------------------------------

def logic_contract(tag: str) -> bytes:
    """A plain target: value() reads slot 0x10, setValue(uint256) writes it unguarded."""
    src = f"""
        {_dispatch([("value", "get"), ("setValue", "set")])}
        fallback: STOP
        get: PUSH1 0x10 SLOAD {_return_word()}
        set: PUSH1 0x04 CALLDATALOAD PUSH1 0x10 SSTORE STOP
    """
    return assemble(src) + metadata_trailer(tag)


def hardcoded_forwarder(target: Address) -> bytes:
    src = f"""
        {_dispatch([("implementation", "impl")])}
        fallback: PUSH20 {target} {_forward("fw")}
        impl: PUSH20 {target} {_return_word()}
    """
    return assemble(src) + metadata_trailer("hardcoded_forwarder")


def immutable_forwarder(target: Address) -> bytes:
    word = Address(target).to_int()
    return assemble(f"PUSH32 {word:#066x} {_forward('fw')}") + metadata_trailer("immutable_forwarder")


def constant_forwarder(target: Address) -> bytes:
    """Target kept in a data section after the code and copied out with CODECOPY."""

    def build(data_at: int) -> bytes:
        src = f"""
            PUSH1 0x14 PUSH2 {data_at:#06x} PUSH1 0x0c CODECOPY PUSH1 0x00 MLOAD
            {_forward("fw")}
            INVALID
        """
        return assemble(src)

    head = build(0)
    return build(len(head)) + bytes(target) + metadata_trailer("constant_forwarder")


def slot_forwarder() -> bytes:
    src = f"""
        {_dispatch([("implementation", "impl")])}
        fallback: PUSH1 0x00 SLOAD {_forward("fw")}
        impl: PUSH1 0x00 SLOAD {_return_word()}
    """
    return assemble(src) + metadata_trailer("slot_forwarder")


def eip1967_regular() -> bytes:
    """Admin-guarded upgradeTo on the proxy itself, target in the EIP-1967 slot."""
    src = f"""
        {_dispatch([("upgradeTo", "up"), ("implementation", "impl")])}
        fallback: {_word(EIP1967_IMPLEMENTATION_SLOT)} SLOAD {_forward("fw")}
        up: {_guard_slot(_word(EIP1967_ADMIN_SLOT), "g")}
            {_arg()} {_word(EIP1967_IMPLEMENTATION_SLOT)} SSTORE STOP
        impl: {_word(EIP1967_IMPLEMENTATION_SLOT)} SLOAD {_return_word()}
    """
    return assemble(src) + metadata_trailer("eip1967_regular")


def transparent_proxy() -> bytes:
    """Admin calls reach the upgrade functions; everyone else is forwarded."""
    src = f"""
        {_word(EIP1967_ADMIN_SLOT)} SLOAD PUSH20 {MASK20} AND CALLER EQ @admin JUMPI
        {_word(EIP1967_IMPLEMENTATION_SLOT)} SLOAD {_forward("fw")}
        admin:
            PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR
            DUP1 PUSH4 {SEL["upgradeTo"]} EQ @up JUMPI
            {_revert()}
        up: {_arg()} {_word(EIP1967_IMPLEMENTATION_SLOT)} SSTORE STOP
    """
    return assemble(src) + metadata_trailer("transparent_proxy")


def erc1967_proxy() -> bytes:
    """Bare forwarder over the EIP-1967 implementation slot; upgrades live in the logic."""
    return assemble(f"{_word(EIP1967_IMPLEMENTATION_SLOT)} SLOAD {_forward('fw')}") + metadata_trailer(
        "erc1967_proxy"
    )


def uups_logic(
    tag: str,
    self_address: Address,
    *,
    direct_call_guard: bool = False,
    delegatecall: bool = True,
    selfdestruct: bool = False,
) -> bytes:
    """UUPS implementation: initialize(address) sets the owner at slot 0x33 once.

    The initializer flag lives in slot 0. upgradeTo / upgradeToAndCall are
    owner-only and write the EIP-1967 implementation slot.
    """
    functions = [("initialize", "init"), ("upgradeTo", "up"), ("owner", "own")]
    if delegatecall:
        functions.append(("upgradeToAndCall", "upcall"))
    if selfdestruct:
        functions.append(("kill", "kill"))
    impl = _word(EIP1967_IMPLEMENTATION_SLOT)
    gate = ""
    if direct_call_guard:
        gate = f"ADDRESS PUSH32 {Address(self_address).to_int():#066x} EQ ISZERO @gate_ok JUMPI {_revert()} gate_ok:"
    src = f"""
        {_dispatch(functions)}
        fallback: {_revert()}
        init: {gate}
            PUSH1 0x00 SLOAD ISZERO @fresh JUMPI {_revert()}
        fresh: {_arg()} PUSH1 0x33 SSTORE PUSH1 0x01 PUSH1 0x00 SSTORE STOP
        up: {_guard_slot("PUSH1 0x33", "g1")} {_arg()} {impl} SSTORE STOP
        own: PUSH1 0x33 SLOAD {_return_word()}
    """
    if delegatecall:
        src += f"""
        upcall: {_guard_slot("PUSH1 0x33", "g2")} {_arg()} {impl} SSTORE
            {impl} SLOAD {_forward("uc")}
        """
    if selfdestruct:
        src += f"""
        kill: {_guard_slot("PUSH1 0x33", "g3")} CALLER SELFDESTRUCT
        """
    return assemble(src) + metadata_trailer(tag)


def beacon_proxy(beacon: Address | None = None) -> bytes:
    """Ask the beacon for implementation() and forward there.

    The beacon address is read from the EIP-1967 beacon slot, or hardcoded when given.
    """
    where = f"PUSH20 {beacon}" if beacon is not None else f"{_word(EIP1967_BEACON_SLOT)} SLOAD"
    src = f"""
        PUSH4 {SEL["implementation"]} PUSH1 0xe0 SHL PUSH1 0x00 MSTORE
        PUSH1 0x20 PUSH1 0x00 PUSH1 0x04 PUSH1 0x00 {where} GAS STATICCALL
        ISZERO @bad JUMPI
        PUSH1 0x00 MLOAD {_forward("fw")}
        bad: {_revert()}
    """
    return assemble(src) + metadata_trailer("beacon_proxy" if beacon is None else f"beacon_proxy:{beacon}")


def beacon(upgradeable: bool, tag: str) -> bytes:
    """implementation() returns slot 1; optionally an owner-only upgradeTo writes it."""
    functions = [("implementation", "impl")]
    if upgradeable:
        functions.append(("upgradeTo", "up"))
    src = f"""
        {_dispatch(functions)}
        fallback: {_revert()}
        impl: PUSH1 0x01 SLOAD {_return_word()}
    """
    if upgradeable:
        src += f"up: {_guard_slot('PUSH1 0x00', 'g')} {_arg()} PUSH1 0x01 SSTORE STOP"
    return assemble(src) + metadata_trailer(tag)


def proxy_admin() -> bytes:
    """Owner-only upgrade(proxy, impl) relaying upgradeTo(impl) to the proxy."""
    src = f"""
        {_dispatch([("upgrade", "up"), ("owner", "own")])}
        fallback: {_revert()}
        up: {_guard_slot("PUSH1 0x00", "g")}
            PUSH4 {SEL["upgradeTo"]} PUSH1 0xe0 SHL PUSH1 0x00 MSTORE
            {_arg(1)} PUSH1 0x04 MSTORE
            PUSH1 0x00 PUSH1 0x00 PUSH1 0x24 PUSH1 0x00 PUSH1 0x00 {_arg(0)} GAS CALL
            POP STOP
        own: PUSH1 0x00 SLOAD {_return_word()}
    """
    return assemble(src) + metadata_trailer("proxy_admin")


def hardcoded_admin_proxy(admin: Address) -> bytes:
    src = f"""
        {_dispatch([("upgradeTo", "up")])}
        fallback: PUSH1 0x01 SLOAD {_forward("fw")}
        up: {_guard_address(admin, "g")} {_arg()} PUSH1 0x01 SSTORE STOP
    """
    return assemble(src) + metadata_trailer("hardcoded_admin_proxy")


def discovered_slot_proxy() -> bytes:
    src = f"""
        {_dispatch([("upgradeTo", "up")])}
        fallback: PUSH1 0x01 SLOAD {_forward("fw")}
        up: {_guard_slot("PUSH1 0x00", "g")} {_arg()} PUSH1 0x01 SSTORE STOP
    """
    return assemble(src) + metadata_trailer("discovered_slot_proxy")


ZOS_ADMIN_LABEL = "org.zeppelinos.proxy.admin"
ZOS_IMPL_LABEL = "org.zeppelinos.proxy.implementation"


def keccak_slot_proxy() -> bytes:
    """Slots derived at run time as keccak256 of constant labels."""
    src = f"""
        {_dispatch([("upgradeTo", "up")])}
        fallback: {_hashed_label(ZOS_IMPL_LABEL)} SLOAD {_forward("fw")}
        up: {_guard_slot(_hashed_label(ZOS_ADMIN_LABEL), "g")}
            {_arg()} {_hashed_label(ZOS_IMPL_LABEL)} SSTORE STOP
    """
    return assemble(src) + metadata_trailer("keccak_slot_proxy")


def governance() -> bytes:
    """execute() runs a queued call once enough votes (slot 5) are recorded; no caller check."""
    src = f"""
        {_dispatch([("execute", "exec")])}
        fallback: {_revert()}
        exec: PUSH1 0x03 PUSH1 0x05 SLOAD LT @go JUMPI {_revert()}
        go: PUSH1 0x00 PUSH1 0x00 PUSH1 0x00 PUSH1 0x00 PUSH1 0x00 PUSH1 0x06 SLOAD GAS CALL POP STOP
    """
    return assemble(src) + metadata_trailer("governance")


def safe_singleton() -> bytes:
    return assemble("PUSH1 0x00 DUP1 RETURN") + metadata_trailer("safe_singleton")


# --- traces ---------------------------------------------------------------

def _frame(call_type: str, sender: Address, to: Address, data: bytes, path: list[int], subtraces: int = 0) -> dict:
    return {
        "action": {
            "callType": call_type,
            "from": str(sender),
            "gas": "0x0",
            "input": "0x" + data.hex(),
            "to": str(to),
            "value": "0x0",
        },
        "result": {"gasUsed": "0x0", "output": "0x"},
        "subtraces": subtraces,
        "traceAddress": path,
        "type": "call",
    }


def _create_frame(sender: Address, created: Address, code: bytes, path: list[int], method: str) -> dict:
    return {
        "action": {"from": str(sender), "gas": "0x0", "init": "0x", "value": "0x0", "creationMethod": method},
        "result": {"address": str(created), "code": "0x" + code.hex(), "gasUsed": "0x0"},
        "subtraces": 0,
        "traceAddress": path,
        "type": "create",
    }


def _tx(name: str, frames: list[dict]) -> dict:
    return {"output": "0x", "transactionHash": "0x" + keccak256(f"tx:{name}".encode()).hex(), "trace": frames}


def _user_call(proxy: Address, target: Address, data: bytes) -> list[dict]:
    user = fixture_address("eoa:user")
    return [_frame("call", user, proxy, data, [], 1), _frame("delegatecall", proxy, target, data, [0])]


def _value_call() -> bytes:
    return bytes(Selector(SEL["value"]))


def _set_value_call(n: int) -> bytes:
    return bytes(Selector(SEL["setValue"])) + n.to_bytes(32, "big")


# --- corpus ---------------------------------------------------------------

@dataclass
class Corpus:
    accounts: dict[Address, tuple[bytes, dict[int, int]]] = field(default_factory=dict)
    blocks: dict[int, list[dict]] = field(default_factory=dict)
    labels: dict = field(default_factory=lambda: {"fixtures": {}, "trace_cases": {}, "uups_toggles": {}})

    def account(self, name: str, code: bytes = b"", storage: dict[int, int] | None = None) -> Address:
        addr = fixture_address(name)
        self.accounts[addr] = (code, dict(storage or {}))
        return addr

    def tx(self, block: int, name: str, frames: list[dict]) -> None:
        self.blocks.setdefault(block, []).append(_tx(name, frames))

    def label(self, name: str, **info) -> None:
        self.labels["fixtures"][name] = {k: (str(v) if isinstance(v, Address) else v) for k, v in info.items()}


def _uups_fixture(
    c: Corpus, name: str, block: int, *, initialized: bool, owner: Address, **logic_kw
) -> tuple[Address, Address]:
    logic_addr = fixture_address(f"{name}:logic")
    code = uups_logic(f"{name}:logic", logic_addr, **logic_kw)
    c.account(f"{name}:logic", code, {0: 1, 0x33: owner.to_int()} if initialized else {})
    proxy = c.account(name, erc1967_proxy(), {
        EIP1967_IMPLEMENTATION_SLOT: logic_addr.to_int(),
        0x33: owner.to_int(),
        0: 1,
    })
    c.tx(block, name, _user_call(proxy, logic_addr, bytes(Selector(SEL["owner"]))))
    return proxy, logic_addr


def build() -> Corpus:
    c = Corpus()
    c.blocks[999] = []
    eoa_admin = c.account("eoa:admin")
    eoa_owner = c.account("eoa:owner")
    eoa_hard = c.account("eoa:hardcoded-admin")
    eoa_slot0 = c.account("eoa:slot0-admin")
    eoa_beacon_owner = c.account("eoa:beacon-owner")

    # 1000: EIP-1167 clone deployed by a factory.
    logic_a = c.account("logic:a", logic_contract("logic:a"))
    code = minimal_proxy(logic_a)
    proxy = c.account("minimal_proxy", code)
    factory = fixture_address("factory")
    c.tx(1000, "minimal_proxy:deploy", [_create_frame(factory, proxy, code, [], "create")])
    c.tx(1000, "minimal_proxy", _user_call(proxy, logic_a, _set_value_call(7)))
    c.label("minimal_proxy", proxy=proxy, target=logic_a, block=1000, label="forwarder:hardcoded", flags=[])

    # 1001: EIP-1967 regular upgradeable, admin is an EOA.
    logic_b = c.account("logic:b", logic_contract("logic:b"))
    proxy = c.account("eip1967_regular", eip1967_regular(), {
        EIP1967_IMPLEMENTATION_SLOT: logic_b.to_int(),
        EIP1967_ADMIN_SLOT: eoa_admin.to_int(),
    })
    c.tx(1001, "eip1967_regular", _user_call(proxy, logic_b, _value_call()))
    c.label("eip1967_regular", proxy=proxy, target=logic_b, block=1001, label="upgradeable:regular", flags=[],
            admin={"locator": "eip1967-admin-slot", "admin": str(eoa_admin), "admin_type": "eoa",
                   "via_admin_proxy": [], "census_column": "eip1967-regular"})

    # 1002: UUPS pair, implementation initialized.
    proxy, logic = _uups_fixture(c, "uups_pair", 1002, initialized=True, owner=eoa_owner)
    c.label("uups_pair", proxy=proxy, target=logic, block=1002, label="upgradeable:uups", flags=[],
            admin={"locator": "discovered-slot", "admin": str(eoa_owner), "admin_type": "eoa",
                   "via_admin_proxy": [], "census_column": "discovered-regular"},
            uups="not-vulnerable")

    # 1003-1006: forwarders.
    logic_c = c.account("logic:c", logic_contract("logic:c"))
    proxy = c.account("hardcoded_forwarder", hardcoded_forwarder(logic_c))
    c.tx(1003, "hardcoded_forwarder", _user_call(proxy, logic_c, _value_call()))
    c.label("hardcoded_forwarder", proxy=proxy, target=logic_c, block=1003, label="forwarder:hardcoded", flags=[])

    logic_d = c.account("logic:d", logic_contract("logic:d"))
    proxy = c.account("immutable_forwarder", immutable_forwarder(logic_d))
    c.tx(1004, "immutable_forwarder", _user_call(proxy, logic_d, _value_call()))
    c.label("immutable_forwarder", proxy=proxy, target=logic_d, block=1004, label="forwarder:immutable-in-code",
            flags=[])

    logic_e = c.account("logic:e", logic_contract("logic:e"))
    proxy = c.account("constant_forwarder", constant_forwarder(logic_e))
    c.tx(1005, "constant_forwarder", _user_call(proxy, logic_e, _value_call()))
    c.label("constant_forwarder", proxy=proxy, target=logic_e, block=1005,
            label="forwarder:code-embedded-constant", flags=[])

    logic_f = c.account("logic:f", logic_contract("logic:f"))
    proxy = c.account("slot_forwarder", slot_forwarder(), {0: logic_f.to_int()})
    c.tx(1006, "slot_forwarder", _user_call(proxy, logic_f, _value_call()))
    c.label("slot_forwarder", proxy=proxy, target=logic_f, block=1006, label="forwarder:slot-never-assigned",
            flags=[])

    # 1007: transparent proxy administered by a multisig wallet.
    singleton = c.account("safe:singleton", safe_singleton())
    safe = c.account("safe:wallet", SAFE_PROXY_CODE, {0: singleton.to_int()})
    logic_g = c.account("logic:g", logic_contract("logic:g"))
    proxy = c.account("transparent_proxy", transparent_proxy(), {
        EIP1967_IMPLEMENTATION_SLOT: logic_g.to_int(),
        EIP1967_ADMIN_SLOT: safe.to_int(),
    })
    c.tx(1007, "transparent_proxy", _user_call(proxy, logic_g, _value_call()))
    c.label("transparent_proxy", proxy=proxy, target=logic_g, block=1007, label="upgradeable:regular",
            flags=["transparent-heuristic"],
            admin={"locator": "eip1967-admin-slot", "admin": str(safe), "admin_type": "multisig",
                   "via_admin_proxy": [], "census_column": "eip1967-regular"})

    # 1008: beacon triple.
    logic_h = c.account("logic:h", logic_contract("logic:h"))
    bcn = c.account("beacon_triple:beacon", beacon(True, "beacon:upgradeable"),
                    {0: eoa_beacon_owner.to_int(), 1: logic_h.to_int()})
    proxy = c.account("beacon_triple", beacon_proxy(), {EIP1967_BEACON_SLOT: bcn.to_int()})
    user = fixture_address("eoa:user")
    data = _value_call()
    c.tx(1008, "beacon_triple", [
        _frame("call", user, proxy, data, [], 2),
        _frame("staticcall", proxy, bcn, bytes(Selector(SEL["implementation"])), [0]),
        _frame("delegatecall", proxy, logic_h, data, [1]),
    ])
    c.label("beacon_triple", proxy=proxy, target=logic_h, block=1008, label="upgradeable:beacon", flags=[],
            beacon=str(bcn),
            admin={"locator": "discovered-slot", "admin": str(eoa_beacon_owner), "admin_type": "eoa",
                   "via_admin_proxy": [], "census_column": "discovered-regular"})

    # 1009: beacon without any upgrade path.
    logic_i = c.account("logic:i", logic_contract("logic:i"))
    frozen = c.account("immutable_beacon:beacon", beacon(False, "beacon:frozen"), {1: logic_i.to_int()})
    proxy = c.account("immutable_beacon", beacon_proxy(frozen))
    c.tx(1009, "immutable_beacon", [
        _frame("call", user, proxy, data, [], 2),
        _frame("staticcall", proxy, frozen, bytes(Selector(SEL["implementation"])), [0]),
        _frame("delegatecall", proxy, logic_i, data, [1]),
    ])
    c.label("immutable_beacon", proxy=proxy, target=logic_i, block=1009, label="forwarder:beacon-immutable",
            flags=[], beacon=str(frozen))

    # 1010: transparent proxy behind an admin contract owned by an EOA.
    logic_j = c.account("logic:j", logic_contract("logic:j"))
    logic_j2 = c.account("logic:j2", logic_contract("logic:j2"))
    padmin = c.account("admin_proxy_chain:admin", proxy_admin(), {0: eoa_owner.to_int()})
    proxy = c.account("admin_proxy_chain", transparent_proxy(), {
        EIP1967_IMPLEMENTATION_SLOT: logic_j.to_int(),
        EIP1967_ADMIN_SLOT: padmin.to_int(),
    })
    c.tx(1010, "admin_proxy_chain", _user_call(proxy, logic_j, _value_call()))
    upgrade = bytes(Selector(SEL["upgrade"])) + bytes(12) + bytes(proxy) + bytes(12) + bytes(logic_j2)
    relay = bytes(Selector(SEL["upgradeTo"])) + bytes(12) + bytes(logic_j2)
    c.tx(1010, "admin_proxy_chain:upgrade", [
        _frame("call", eoa_owner, padmin, upgrade, [], 1),
        _frame("call", padmin, proxy, relay, [0]),
    ])
    c.label("admin_proxy_chain", proxy=proxy, target=logic_j, block=1010, label="upgradeable:regular",
            flags=["transparent-heuristic"],
            admin={"locator": "eip1967-admin-slot", "admin": str(eoa_owner), "admin_type": "eoa",
                   "via_admin_proxy": [str(padmin)], "census_column": "eip1967-admin-proxy"})

    # 1011-1013: admins found through the upgrade guard.
    logic_k = c.account("logic:k", logic_contract("logic:k"))
    proxy = c.account("hardcoded_admin", hardcoded_admin_proxy(eoa_hard), {1: logic_k.to_int()})
    c.tx(1011, "hardcoded_admin", _user_call(proxy, logic_k, _value_call()))
    c.label("hardcoded_admin", proxy=proxy, target=logic_k, block=1011, label="upgradeable:regular", flags=[],
            admin={"locator": "hardcoded-admin", "admin": str(eoa_hard), "admin_type": "eoa",
                   "via_admin_proxy": [], "census_column": "fixed-address"})

    logic_l = c.account("logic:l", logic_contract("logic:l"))
    proxy = c.account("discovered_slot_admin", discovered_slot_proxy(),
                      {0: eoa_slot0.to_int(), 1: logic_l.to_int()})
    c.tx(1012, "discovered_slot_admin", _user_call(proxy, logic_l, _value_call()))
    c.label("discovered_slot_admin", proxy=proxy, target=logic_l, block=1012, label="upgradeable:regular",
            flags=[],
            admin={"locator": "discovered-slot", "admin": str(eoa_slot0), "admin_type": "eoa",
                   "via_admin_proxy": [], "census_column": "discovered-regular"})

    logic_m = c.account("logic:m", logic_contract("logic:m"))
    gov = c.account("governance", governance(), {5: 4})
    zos_admin = int.from_bytes(keccak256(ZOS_ADMIN_LABEL.encode()), "big")
    zos_impl = int.from_bytes(keccak256(ZOS_IMPL_LABEL.encode()), "big")
    proxy = c.account("keccak_slot_admin", keccak_slot_proxy(), {zos_admin: gov.to_int(), zos_impl: logic_m.to_int()})
    c.tx(1013, "keccak_slot_admin", _user_call(proxy, logic_m, _value_call()))
    c.label("keccak_slot_admin", proxy=proxy, target=logic_m, block=1013, label="upgradeable:regular", flags=[],
            admin={"locator": "arbitrary-keccak-slot", "admin": str(gov), "admin_type": "governance-or-unknown",
                   "via_admin_proxy": [], "census_column": "arbitrary-slot"})

    # 1014-1016: UUPS implementations left uninitialized.
    proxy, logic = _uups_fixture(c, "guarded_uups", 1014, initialized=False, owner=eoa_owner,
                                 direct_call_guard=True)
    c.label("guarded_uups", proxy=proxy, target=logic, block=1014, label="upgradeable:uups", flags=[],
            uups="not-vulnerable")
    proxy, logic = _uups_fixture(c, "exploitable_uups", 1015, initialized=False, owner=eoa_owner)
    c.label("exploitable_uups", proxy=proxy, target=logic, block=1015, label="upgradeable:uups", flags=[],
            uups="exploitable")
    proxy, logic = _uups_fixture(c, "takeover_uups", 1016, initialized=False, owner=eoa_owner, delegatecall=False)
    c.label("takeover_uups", proxy=proxy, target=logic, block=1016, label="upgradeable:uups", flags=[],
            uups="takeover-only")

    # 1017: more clones of logic:a; one deployed with CREATE2.
    for name, method in (("clone_b", "create2"), ("clone_c", "create")):
        code = minimal_proxy(logic_a)
        proxy = c.account(name, code)
        c.tx(1017, f"{name}:deploy", [_create_frame(factory, proxy, code, [], method)])
        c.tx(1017, name, _user_call(proxy, logic_a, _value_call()))
        flags = ["metamorphic-risk"] if method == "create2" else []
        c.label(name, proxy=proxy, target=logic_a, block=1017, label="forwarder:hardcoded", flags=flags)

    # 1018: nested forwarding, the logic behind one proxy calls through another.
    outer = fixture_address("hardcoded_forwarder")
    inner = fixture_address("slot_forwarder")
    nested_in = _set_value_call(1)
    c.tx(1018, "nested", [
        _frame("call", user, outer, nested_in, [], 1),
        _frame("delegatecall", outer, logic_c, nested_in, [0], 1),
        _frame("call", outer, inner, _value_call(), [0, 0], 1),
        _frame("delegatecall", inner, logic_f, _value_call(), [0, 0, 0]),
    ])
    c.labels["trace_cases"]["nested"] = {
        "block": 1018,
        "expected": sorted([[str(outer), str(logic_c)], [str(inner), str(logic_f)]]),
    }

    # 1019: a delegatecall whose input differs from the caller's in the first four bytes.
    decoy = fixture_address("eoa:decoy")
    first = _value_call() + bytes(32)
    second = bytes(Selector(SEL["owner"])) + bytes(32)
    c.tx(1019, "negative", [
        _frame("call", user, decoy, first, [], 1),
        _frame("delegatecall", decoy, logic_a, second, [0]),
    ])
    c.labels["trace_cases"]["selector_differs"] = {"block": 1019, "expected": []}
    c.labels["trace_cases"]["admin_chain_upgrade"] = {
        "block": 1010,
        "expected": [[str(fixture_address("admin_proxy_chain")), str(logic_j)]],
    }
    c.labels["trace_cases"]["beacon"] = {
        "block": 1008,
        "expected": [[str(fixture_address("beacon_triple")), str(logic_h)]],
    }

    c.labels["uups_toggles"] = {
        "base": "exploitable",
        "initialized": "not-vulnerable",
        "direct_call_guard": "not-vulnerable",
        "no_delegatecall": "takeover-only",
        "no_delegatecall+selfdestruct": "exploitable",
    }
    c.labels["scan"] = {
        "1000-1002": {"forwarder": 1, "regular": 1, "uups": 1, "beacon": 0},
    }
    c.labels["fingerprint_multisig"] = str(safe)
    return c


def build_corpus(directory) -> Path:
    """Write the fixture chain to ``directory`` (created if needed) and return it."""
    root = Path(directory)
    c = build()
    for addr, (code, storage) in sorted(c.accounts.items()):
        write_account(root, addr, code, storage)
    traces = root / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    for number, txs in sorted(c.blocks.items()):
        (traces / f"{number}.json").write_text(json.dumps(txs, indent=1, sort_keys=True) + "\n")
    write_manifest(root, max(c.blocks), list(c.blocks))
    (root / "labels.json").write_text(json.dumps(c.labels, indent=1, sort_keys=True) + "\n")
    return root
