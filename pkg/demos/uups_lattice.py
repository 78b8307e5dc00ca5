"""Flip one property of a UUPS implementation at a time and watch the audit verdict move.

    python3 demos/uups_lattice.py
"""

from proxyscope.corpus import uups_logic
from proxyscope.evm import Address
from proxyscope.uups import audit_uups

proxy = Address("0x" + "11" * 20)
logic = Address("0x" + "10" * 20)

variants = [
    ("initializer open, upgradeToAndCall present", {}, False),
    ("same, but the initializer already ran", {}, True),
    ("initializer refuses direct calls", {"direct_call_guard": True}, False),
    ("no upgradeToAndCall", {"delegatecall": False}, False),
    ("no upgradeToAndCall, owner-only kill()", {"delegatecall": False, "selfdestruct": True}, False),
]

for title, kw, initialized in variants:
    code = uups_logic(title, logic, **kw)
    storage = {0: 1} if initialized else {}
    f = audit_uups(proxy, logic, lambda a, s: storage.get(s, 0), lambda a: code)
    print(f"{f.verdict.value:<15} {title}")
    print(f"{'':<15} reason: {f.reason}; owner slot {f.evidence.get('owner_slot', '-')}")
