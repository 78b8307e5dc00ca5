"""Which frames in a replayed transaction count as a proxy forwarding a call.

A DELEGATECALL is evidence only when it carries its parent's exact input and
comes from the account the parent called.

    python3 demos/trace_rule.py
"""

import json

from proxyscope.traces import detect_proxy_calls, parse_trace

user, proxy, logic, other = ("0x" + c * 40 for c in "eabc")
data = "0xa9059cbb" + "00" * 64


def frame(path, sender, to, call_type="call", payload=data):
    return {"type": "call", "traceAddress": path,
            "action": {"callType": call_type, "from": sender, "to": to, "input": payload}}


cases = {
    "forwarded unchanged": [frame([], user, proxy), frame([0], proxy, logic, "delegatecall")],
    "input rewritten": [frame([], user, proxy), frame([0], proxy, logic, "delegatecall", "0xdeadbeef")],
    "plain call": [frame([], user, proxy), frame([0], proxy, logic)],
    "nested proxies": [
        frame([], user, proxy),
        frame([0], proxy, logic, "delegatecall"),
        frame([0, 0], proxy, other),
        frame([0, 0, 0], other, logic, "delegatecall"),
    ],
}

for title, frames in cases.items():
    doc = json.dumps([{"transactionHash": "0x01", "trace": frames}])
    found = sorted((str(e.proxy)[:8], str(e.target)[:8]) for e in detect_proxy_calls(parse_trace(doc)))
    print(f"{title:<20} {found or 'no evidence'}")
