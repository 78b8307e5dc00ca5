"""Walk the shipped fixture chain and show what each proxy turned out to be.

    python3 demos/corpus_tour.py [fixtures/chain]
"""

import sys
from pathlib import Path

from proxyscope.cli.pipeline import Analyzer, Settings
from proxyscope.gateway import DataSource, open_source

root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "fixtures" / "chain")
gw = open_source(DataSource.fixture(root))
names = {entry["proxy"]: name for name, entry in gw.backend.labels().get("fixtures", {}).items()}
analyzer = Analyzer(gw, gw.backend.pinned, Settings())

for number in gw.backend.blocks:
    for r in analyzer.block(number)["records"]:
        v = r["verdict"]
        line = f"{number}  {names.get(r['address'], r['address'])[:22]:<22} {v['label']:<34}"
        if v["flags"]:
            line += " [" + ", ".join(v["flags"]) + "]"
        admin = r["admin"]
        if admin and "admin_type" in admin:
            hops = " via " + " -> ".join(a[:10] for a in admin["via_admin_proxy"]) if admin["via_admin_proxy"] else ""
            line += f"\n      admin {admin['admin'][:10]}.. {admin['admin_type']} ({admin['locator']['kind']}){hops}"
        if r["uups_audit"]:
            line += f"\n      uups audit: {r['uups_audit']['verdict']} ({r['uups_audit']['reason']})"
        print("\n".join(part.rstrip() for part in line.split("\n")))
