"""Aggregate verdict records into the proxy and admin census tables."""

from __future__ import annotations

from collections import Counter

from .. import __version__

CLASSES = ("forwarder", "regular", "uups", "beacon")
# A cluster holding proxies of several classes is counted once, under the
# most capable class present.
CLASS_PRIORITY = ("regular", "uups", "beacon", "forwarder")
ADMIN_TYPES = ("eoa", "multisig", "governance-or-unknown")
ADMIN_COLUMNS = (
    "eip1967-regular",
    "eip1967-admin-proxy",
    "discovered-regular",
    "discovered-admin-proxy",
    "arbitrary-slot",
    "fixed-address",
    "unlocated",
)
UUPS_VERDICTS = ("exploitable", "takeover-only", "not-vulnerable", "inconclusive")


def census(records: list[dict], failed_blocks: list[dict], provenance: dict) -> dict:
    """Census over unique proxies in ``records`` (first record per address wins)."""
    unique: dict[str, dict] = {}
    for r in records:
        unique.setdefault(r["address"], r)

    classified = [r for r in unique.values() if r.get("verdict")]
    clusters: dict[str, set[str]] = {}
    for r in classified:
        clusters.setdefault(r["cluster"], set()).add(r["verdict"]["class"])
    per_class = Counter({c: 0 for c in CLASSES})
    for classes in clusters.values():
        per_class[next(c for c in CLASS_PRIORITY if c in classes)] += 1
    proxy_classes = Counter({c: 0 for c in CLASSES})
    for r in classified:
        proxy_classes[r["verdict"]["class"]] += 1

    admin = {t: {col: 0 for col in ADMIN_COLUMNS} for t in ADMIN_TYPES}
    withheld = 0
    upgradeable = [r for r in classified if r["verdict"]["class"] != "forwarder"]
    for r in upgradeable:
        rep = r.get("admin") or {}
        if "admin_type" not in rep:
            withheld += 1
            continue
        admin[rep["admin_type"]][rep["census_column"]] += 1

    uups = {v: 0 for v in UUPS_VERDICTS}
    for r in classified:
        if r["verdict"]["class"] == "uups":
            audit = r.get("uups_audit") or {}
            uups[audit.get("verdict", "inconclusive")] += 1

    return {
        "type": "census",
        "totals": {
            "proxies": len(unique),
            "classified": len(classified),
            "unclassified": len(unique) - len(classified),
            "clusters": len(clusters),
            "per_class": dict(per_class),
            "per_class_proxies": dict(proxy_classes),
        },
        "admin": {"by_type": admin, "withheld": withheld, "upgradeable_proxies": len(upgradeable)},
        "uups_audit": uups,
        "failed_blocks": sorted(failed_blocks, key=lambda f: f["block"]),
        "provenance": provenance,
    }


def provenance(start: int, end: int, at: int, mode: str) -> dict:
    return {"from_block": start, "to_block": end, "at_block": at, "source": mode,
            "tool": "proxyscope", "version": __version__}
