"""Locate the account allowed to upgrade a proxy and classify what kind of account it is."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .classify import Verdict
from .dataflow import (
    DEFAULT_BUDGET,
    Entry,
    ResolutionKind,
    SlotKind,
    extract_caller_guard,
    guard_from_conditions,
    interpret,
    primary_resolution,
    resolve_delegate_target,
)
from .errors import GatewayError, MissingCode, StorageUnavailable
from .evm.types import EIP1967_ADMIN_SLOT, ZERO_ADDRESS, Address, hex_to_bytes, keccak256, word_to_hex

DEFAULT_ADMIN_DEPTH = 4


class LocatorKind(enum.Enum):
    EIP1967_ADMIN_SLOT = "eip1967-admin-slot"
    DISCOVERED_SLOT = "discovered-slot"
    ARBITRARY_KECCAK_SLOT = "arbitrary-keccak-slot"
    HARDCODED_ADMIN = "hardcoded-admin"
    NONE = "none"


@dataclass(frozen=True)
class AdminLocator:
    kind: LocatorKind
    slot: int | None = None
    preimage: bytes | None = None
    address: Address | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.slot is not None:
            out["slot"] = word_to_hex(self.slot)
        if self.preimage is not None:
            out["preimage"] = "0x" + self.preimage.hex()
        if self.address is not None:
            out["address"] = str(self.address)
        return out


EIP1967_LOCATOR = AdminLocator(LocatorKind.EIP1967_ADMIN_SLOT, slot=EIP1967_ADMIN_SLOT)


class AdminType(enum.Enum):
    EOA = "eoa"
    MULTISIG = "multisig"
    GOVERNANCE_OR_UNKNOWN = "governance-or-unknown"


@dataclass(frozen=True)
class Fingerprint:
    code_digest: bytes
    label: str
    threshold_semantics: str = ""


class FingerprintDB:
    """Code digests of known multisig wallets, loaded from a versioned JSON document."""

    def __init__(self, entries: list[Fingerprint] = ()):
        self._by_digest = {e.code_digest: e for e in entries}

    def __contains__(self, digest: bytes) -> bool:
        return digest in self._by_digest

    def __len__(self) -> int:
        return len(self._by_digest)

    def get(self, digest: bytes) -> Fingerprint | None:
        return self._by_digest.get(digest)

    def match_code(self, code: bytes) -> Fingerprint | None:
        return self._by_digest.get(keccak256(code))

    @classmethod
    def from_json(cls, doc: dict) -> FingerprintDB:
        if int(doc.get("version", 1)) != 1:
            raise ValueError(f"unsupported fingerprint database version {doc.get('version')}")
        entries = [
            Fingerprint(
                code_digest=hex_to_bytes(item["code_digest"]),
                label=item.get("label", ""),
                threshold_semantics=item.get("threshold_semantics", ""),
            )
            for item in doc.get("fingerprints", [])
        ]
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> FingerprintDB:
        return cls.from_json(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls) -> FingerprintDB:
        text = resources.files("proxyscope.data").joinpath("fingerprints.json").read_text()
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class AdminReport:
    proxy: Address
    locator: AdminLocator
    admin: Address
    admin_type: AdminType
    via_admin_proxy: tuple[Address, ...] = ()
    multisig_label: str | None = None
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def census_column(self) -> str:
        kind = self.locator.kind
        via = "admin-proxy" if self.via_admin_proxy else "regular"
        if kind is LocatorKind.EIP1967_ADMIN_SLOT:
            return f"eip1967-{via}"
        if kind is LocatorKind.DISCOVERED_SLOT:
            return f"discovered-{via}"
        if kind is LocatorKind.ARBITRARY_KECCAK_SLOT:
            return "arbitrary-slot"
        if kind is LocatorKind.HARDCODED_ADMIN:
            return "fixed-address"
        return "unlocated"

    def to_json(self) -> dict:
        return {
            "proxy": str(self.proxy),
            "locator": self.locator.to_json(),
            "admin": str(self.admin),
            "admin_type": self.admin_type.value,
            "multisig_label": self.multisig_label,
            "via_admin_proxy": [str(a) for a in self.via_admin_proxy],
            "census_column": self.census_column,
            "flags": sorted(self.flags),
        }


def _reader(storage_read):
    def read(account: Address, slot: int) -> int:
        try:
            return int(storage_read(account, slot))
        except (GatewayError, LookupError, OSError) as exc:
            raise StorageUnavailable(account, slot, exc) from exc

    return read


def locate_admin(
    proxy: Address,
    verdict: Verdict,
    storage_read,
    code_lookup,
    *,
    budget: int = DEFAULT_BUDGET,
) -> tuple[AdminLocator, Address, frozenset[str]]:
    """Find who may upgrade ``proxy``: the EIP-1967 admin slot first, then the upgrade guard.

    Returns the locator, the admin address (zero when none was found) and flags.
    """
    if not verdict.upgradeable:
        raise ValueError("admin lookup needs an upgradeable verdict")
    read = _reader(storage_read)
    flags: set[str] = set()

    guard = None
    if verdict.writer_code is not None:
        try:
            writer_code = bytes(code_lookup(verdict.writer_code))
        except (GatewayError, LookupError) as exc:
            raise MissingCode(verdict.writer_code, exc) from exc
        for writer in verdict.tainted_assignments():
            guard = extract_caller_guard(writer_code, writer, budget)
            if guard is not None:
                break
    context = verdict.writer_storage or proxy

    stored = read(proxy, EIP1967_ADMIN_SLOT)
    if stored:
        admin = Address.from_word(stored)
        if guard is not None:
            if guard.address is not None:
                other = guard.address
            elif guard.slot.word == EIP1967_ADMIN_SLOT and context == proxy:
                other = admin
            else:
                other = Address.from_word(read(context, guard.slot.word))
            if not other.is_zero and other != admin:
                flags.add("admin-conflict")
        return EIP1967_LOCATOR, admin, frozenset(flags)

    if guard is None:
        flags.add("admin-not-located")
        return AdminLocator(LocatorKind.NONE), ZERO_ADDRESS, frozenset(flags)
    if guard.address is not None:
        return AdminLocator(LocatorKind.HARDCODED_ADMIN, address=guard.address), guard.address, frozenset(flags)
    word = guard.slot.word
    admin = Address.from_word(read(context, word))
    if guard.slot.kind is SlotKind.KECCAK:
        locator = AdminLocator(LocatorKind.ARBITRARY_KECCAK_SLOT, slot=word, preimage=guard.slot.preimage)
    else:
        locator = AdminLocator(LocatorKind.DISCOVERED_SLOT, slot=word)
    return locator, admin, frozenset(flags)


def admin_proxy_owner(code: bytes, account: Address, storage_read, budget: int = DEFAULT_BUDGET) -> Address | None:
    """If ``code`` relays calls only for one caller, that caller's address."""
    read = _reader(storage_read)
    for ev in interpret(code, Entry.DISPATCH, budget).of_kind("CALL", "DELEGATECALL"):
        guard = guard_from_conditions(ev.conditions)
        if guard is None:
            continue
        if guard.address is not None:
            return guard.address
        owner = read(account, guard.slot.word)
        if owner:
            return Address.from_word(owner)
    return None


def _singleton_target(code: bytes, account: Address, storage_read, budget: int) -> Address | None:
    res = primary_resolution(resolve_delegate_target(code, budget))
    if res.kind is ResolutionKind.HARDCODED:
        return res.address
    if res.kind is ResolutionKind.FROM_SLOT and storage_read is not None:
        word = _reader(storage_read)(account, res.slot.word)
        return Address.from_word(word) if word else None
    return None


@dataclass(frozen=True)
class AdminClass:
    admin: Address
    admin_type: AdminType
    via_admin_proxy: tuple[Address, ...] = ()
    multisig_label: str | None = None
    flags: frozenset[str] = frozenset()


def classify_admin(
    admin: Address,
    code_lookup,
    fingerprints: FingerprintDB,
    depth: int = DEFAULT_ADMIN_DEPTH,
    storage_read=None,
    *,
    budget: int = DEFAULT_BUDGET,
) -> AdminClass:
    """EOA if codeless, multisig if fingerprinted, else follow admin proxies down to ``depth``."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    chain: list[Address] = []
    current = admin
    while True:
        try:
            code = bytes(code_lookup(current))
        except (GatewayError, LookupError) as exc:
            raise MissingCode(current, exc) from exc
        if not code:
            return AdminClass(current, AdminType.EOA, tuple(chain))
        hit = fingerprints.match_code(code)
        if hit is None:
            singleton = _singleton_target(code, current, storage_read, budget)
            if singleton is not None:
                try:
                    hit = fingerprints.match_code(bytes(code_lookup(singleton)))
                except (GatewayError, LookupError):
                    hit = None
        if hit is not None:
            return AdminClass(current, AdminType.MULTISIG, tuple(chain), hit.label)

        owner = admin_proxy_owner(code, current, storage_read, budget) if storage_read else None
        if owner is None:
            return AdminClass(current, AdminType.GOVERNANCE_OR_UNKNOWN, tuple(chain))
        if owner == current or owner in chain:
            return AdminClass(current, AdminType.GOVERNANCE_OR_UNKNOWN, tuple(chain), flags=frozenset({"admin-cycle"}))
        if depth == 0:
            return AdminClass(
                current, AdminType.GOVERNANCE_OR_UNKNOWN, tuple(chain), flags=frozenset({"recursion-exhausted"})
            )
        chain.append(current)
        current = owner
        depth -= 1


def resolve_admin(
    proxy: Address,
    verdict: Verdict,
    storage_read,
    code_lookup,
    fingerprints: FingerprintDB,
    *,
    depth: int = DEFAULT_ADMIN_DEPTH,
    budget: int = DEFAULT_BUDGET,
) -> AdminReport:
    locator, admin, flags = locate_admin(proxy, verdict, storage_read, code_lookup, budget=budget)
    if admin.is_zero:
        return AdminReport(proxy, locator, admin, AdminType.GOVERNANCE_OR_UNKNOWN, flags=flags)
    found = classify_admin(admin, code_lookup, fingerprints, depth, storage_read, budget=budget)
    return AdminReport(
        proxy=proxy,
        locator=locator,
        admin=found.admin,
        admin_type=found.admin_type,
        via_admin_proxy=found.via_admin_proxy,
        multisig_label=found.multisig_label,
        flags=flags | found.flags,
    )
