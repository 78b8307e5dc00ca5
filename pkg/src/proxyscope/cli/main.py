"""``proxyscope`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .. import __version__
from ..admin import DEFAULT_ADMIN_DEPTH, FingerprintDB, resolve_admin
from ..classify import Category, classify
from ..dataflow import DEFAULT_BUDGET
from ..errors import GatewayError, MissingCode, StorageUnavailable
from ..evm.types import Address, word_from
from ..gateway import BlockRef, DataSource, FixtureBackend, endpoint_from_env, open_source
from ..gateway.fixture import validate
from ..uups import DEFAULT_INIT_SLOT, audit_uups
from .census import census, provenance
from .pipeline import Analyzer, Settings, analyze, evidence_for

EXIT_OK, EXIT_USAGE, EXIT_SOURCE, EXIT_PARTIAL = 0, 1, 2, 3

CSV_COLUMNS = (
    "address", "block", "class", "label", "reason", "target", "cluster", "flags",
    "admin", "admin_type", "admin_locator", "uups_verdict", "error",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _address(text: str) -> Address:
    try:
        return Address(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    value = int(text, 0)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _non_negative(text: str) -> int:
    value = int(text, 0)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--rpc-url", help="archive node JSON-RPC endpoint (default: $PROXYSCOPE_RPC_URL or $ETH_RPC_URL)")
    src.add_argument("--fixtures", type=Path, metavar="DIR", help="read chain data from a fixture directory")
    common.add_argument("--cache", type=Path, metavar="DIR", help="persistent read cache directory")
    common.add_argument("--at-block", type=_non_negative, help="block whose state all reads use")
    common.add_argument("--workers", type=_positive, default=4, help="worker threads and max in-flight requests")
    common.add_argument("--output", choices=("json", "csv", "human"), default="json")
    common.add_argument("--fingerprints", type=Path, metavar="FILE", help="multisig fingerprint database")
    common.add_argument("--step-budget", type=_positive, default=DEFAULT_BUDGET)
    common.add_argument("--admin-depth", type=_non_negative, default=DEFAULT_ADMIN_DEPTH)
    common.add_argument("--init-slot", type=word_from, default=DEFAULT_INIT_SLOT,
                        help="storage slot of the initializer flag (UUPS audit)")

    parser = _Parser(prog="proxyscope", description="Find and classify delegatecall proxies.")
    parser.add_argument("--version", action="version", version=f"proxyscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", parents=[common], help="scan a block range and print a census")
    scan.add_argument("--from-block", type=_non_negative)
    scan.add_argument("--to-block", type=_non_negative)

    one = sub.add_parser("classify", parents=[common], help="classify one proxy")
    one.add_argument("address", type=_address)
    one.add_argument("--target", type=_address, help="delegate target (inferred when omitted)")

    adm = sub.add_parser("admin", parents=[common], help="locate and classify a proxy's admin")
    adm.add_argument("address", type=_address)
    adm.add_argument("--target", type=_address)

    aud = sub.add_parser("audit-uups", parents=[common], help="audit a UUPS proxy's implementation")
    aud.add_argument("address", type=_address, help="proxy address")
    aud.add_argument("implementation", type=_address, nargs="?", help="implementation (inferred when omitted)")

    val = sub.add_parser("fixtures-validate", help="check a fixture directory")
    val.add_argument("directory", type=Path)
    return parser


def _source(args) -> DataSource:
    if args.fixtures is not None:
        return DataSource.fixture(args.fixtures, cache_path=args.cache)
    url = args.rpc_url or endpoint_from_env()
    if not url:
        raise UsageError("no data source: pass --fixtures DIR or --rpc-url URL (or set PROXYSCOPE_RPC_URL)")
    return DataSource.live(url, max_in_flight=args.workers, cache_path=args.cache)


def _settings(args) -> Settings:
    fingerprints = FingerprintDB.load(args.fingerprints) if args.fingerprints else FingerprintDB.default()
    return Settings(budget=args.step_budget, admin_depth=args.admin_depth, init_slot=args.init_slot,
                    fingerprints=fingerprints)


def _pinned(gw, args, fallback: int | None = None) -> BlockRef:
    if args.at_block is not None:
        return BlockRef(args.at_block)
    backend = getattr(gw.backend, "inner", gw.backend)
    if isinstance(backend, FixtureBackend):
        return backend.pinned
    if fallback is not None:
        return BlockRef(fallback)
    raise UsageError("--at-block is required with a live endpoint")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _row(record: dict) -> dict:
    v = record.get("verdict") or {}
    a = record.get("admin") or {}
    u = record.get("uups_audit") or {}
    return {
        "address": record.get("address"),
        "block": record.get("block"),
        "class": v.get("class", ""),
        "label": v.get("label", ""),
        "reason": v.get("reason") or "",
        "target": v.get("target", ""),
        "cluster": record.get("cluster") or "",
        "flags": ";".join(v.get("flags", [])),
        "admin": a.get("admin", ""),
        "admin_type": a.get("admin_type", "withheld" if "withheld" in a else ""),
        "admin_locator": (a.get("locator") or {}).get("kind", ""),
        "uups_verdict": u.get("verdict", ""),
        "error": record.get("error") or "",
    }


def _human(record: dict) -> str:
    if record.get("type") == "census":
        t = record["totals"]
        lines = [
            f"proxies {t['proxies']}  clusters {t['clusters']}  unclassified {t['unclassified']}",
            "per cluster: " + "  ".join(f"{k} {v}" for k, v in t["per_class"].items()),
            "admin (type x locator):",
        ]
        for kind, cols in record["admin"]["by_type"].items():
            lines.append(f"  {kind:<22} " + "  ".join(f"{c}={n}" for c, n in cols.items()))
        lines.append(f"  withheld {record['admin']['withheld']}")
        lines.append("uups audit: " + "  ".join(f"{k} {v}" for k, v in record["uups_audit"].items()))
        for f in record["failed_blocks"]:
            lines.append(f"FAILED block {f['block']}: {f['error']}")
        return "\n".join(lines)
    r = _row(record)
    if r["error"]:
        return f"{r['address']}  block {r['block']}  ERROR {r['error']}"
    out = f"{r['address']}  block {r['block']}  {r['label']}"
    if r["flags"]:
        out += f"  [{r['flags']}]"
    if r["admin_type"]:
        out += f"  admin {r['admin'] or '-'} ({r['admin_type']}, {r['admin_locator'] or 'withheld'})"
    if r["uups_verdict"]:
        out += f"  uups {r['uups_verdict']}"
    return out


class _Writer:
    def __init__(self, fmt: str, stream):
        self.fmt, self.stream = fmt, stream
        self._csv = None
        if fmt == "csv":
            self._csv = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
            self._csv.writeheader()

    def record(self, record: dict) -> None:
        if self.fmt == "json":
            self.stream.write(_dump(record) + "\n")
        elif self.fmt == "csv":
            self._csv.writerow(_row(record))
        else:
            self.stream.write(_human(record) + "\n")
        self.stream.flush()

    def census(self, report: dict) -> None:
        if self.fmt == "csv":
            sys.stderr.write(_human(report) + "\n")
        else:
            self.record(report)


def run_scan(args, gw, out) -> int:
    backend = getattr(gw.backend, "inner", gw.backend)
    start, end = args.from_block, args.to_block
    if isinstance(backend, FixtureBackend) and backend.blocks:
        start = backend.blocks[0] if start is None else start
        end = backend.blocks[-1] if end is None else end
    if start is None or end is None:
        raise UsageError("--from-block and --to-block are required")
    if start > end:
        raise UsageError("--from-block must not exceed --to-block")
    at = _pinned(gw, args, fallback=end)
    analyzer = Analyzer(gw, at, _settings(args))
    writer = _Writer(args.output, out)
    records, failed, seen = [], [], set()
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        for result in pool.map(analyzer.block, range(start, end + 1)):
            if result["error"]:
                failed.append({"block": result["block"], "error": result["error"]})
                continue
            for record in result["records"]:
                if record["address"] in seen:
                    continue
                seen.add(record["address"])
                records.append(record)
                writer.record(record)
    mode = gw.source.mode if gw.source else "fixture"
    writer.census(census(records, failed, provenance(start, end, int(at), mode)))
    return EXIT_PARTIAL if failed else EXIT_OK


def run_single(args, gw, out) -> int:
    at = _pinned(gw, args)
    settings = _settings(args)
    code_lookup, storage_read = gw.code_lookup(at), gw.storage_read(at)
    if args.command == "classify":
        ev = evidence_for(gw, args.address, args.target, at, settings.budget)
        _Writer(args.output, out).record(analyze(gw, ev, at, settings))
        return EXIT_OK
    if args.command == "admin":
        ev = evidence_for(gw, args.address, args.target, at, settings.budget)
        verdict = classify(ev, code_lookup(ev.proxy), code_lookup, storage_read, budget=settings.budget)
        if not verdict.upgradeable:
            doc = {"type": "admin", "proxy": str(ev.proxy), "admin": None, "reason": f"not upgradeable ({verdict.label})"}
        else:
            report = resolve_admin(ev.proxy, verdict, storage_read, code_lookup, settings.fingerprints,
                                   depth=settings.admin_depth, budget=settings.budget)
            doc = {"type": "admin", **report.to_json()}
        _emit_doc(args.output, out, doc)
        return EXIT_OK
    impl = args.implementation
    if impl is None:
        impl = evidence_for(gw, args.address, None, at, settings.budget).target
    ev = evidence_for(gw, args.address, impl, at, settings.budget)
    verdict = classify(ev, code_lookup(ev.proxy), code_lookup, storage_read, budget=settings.budget)
    findings = audit_uups(args.address, impl, storage_read, code_lookup,
                          init_slot=settings.init_slot, budget=settings.budget)
    doc = {"type": "uups_audit", "proxy": str(args.address), "classification": verdict.label,
           "uups_audit": findings.to_json()}
    if verdict.category is not Category.UUPS:
        doc["warning"] = "proxy is not classified as UUPS"
    _emit_doc(args.output, out, doc)
    return EXIT_OK


def _emit_doc(fmt: str, out, doc: dict) -> None:
    if fmt == "json":
        out.write(_dump(doc) + "\n")
        return
    flat = {}

    def walk(prefix, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        else:
            flat[prefix] = json.dumps(value) if isinstance(value, list) else value

    walk("", doc)
    if fmt == "csv":
        w = csv.DictWriter(out, fieldnames=list(flat), lineterminator="\n")
        w.writeheader()
        w.writerow(flat)
    else:
        for k, v in flat.items():
            out.write(f"{k}: {v}\n")


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fixtures-validate":
        problems = validate(args.directory)
        for p in problems:
            print(p, file=sys.stderr)
        if not problems:
            print(f"{args.directory}: ok", file=out)
        return EXIT_SOURCE if problems else EXIT_OK
    try:
        gw = open_source(_source(args))
        if args.command == "scan":
            return run_scan(args, gw, out)
        return run_single(args, gw, out)
    except UsageError as exc:
        print(f"proxyscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GatewayError, MissingCode, StorageUnavailable) as exc:
        print(f"proxyscope: source unavailable: {exc}", file=sys.stderr)
        return EXIT_SOURCE
    except LookupError as exc:
        print(f"proxyscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
