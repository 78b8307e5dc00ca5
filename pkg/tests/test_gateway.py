from __future__ import annotations

import json
import shutil
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from proxyscope.errors import NotInFixture, SourceUnavailable, TraceUnsupported
from proxyscope.evm import Address
from proxyscope.gateway import (
    BlockRef,
    CachedBackend,
    DataSource,
    FixtureBackend,
    RetryPolicy,
    RpcBackend,
    endpoint_from_env,
    open_source,
)
from proxyscope.gateway.cache import cache_key
from proxyscope.gateway.fixture import validate, write_account

UNLISTED = Address("0x" + "99" * 20)
FAST = RetryPolicy(attempts=3, backoff=0.01, timeout=5)


# --- fixture backend ---------------------------------------------------------

def test_fixture_reads(gw, labels, corpus_dir):
    backend = gw.backend
    assert backend.pinned == BlockRef(1019) and backend.blocks[0] == 999
    proxy = Address(labels["fixtures"]["minimal_proxy"]["proxy"])
    at = backend.pinned
    assert gw.get_code(proxy, at)
    assert gw.get_storage(proxy, 12345, at) == 0
    assert gw.replay_block(BlockRef(1000)) == (corpus_dir / "traces" / "1000.json").read_bytes()


def test_unlisted_account_differs_from_empty_code(gw, labels):
    with pytest.raises(NotInFixture):
        gw.get_code(UNLISTED, BlockRef(1019))
    with pytest.raises(LookupError):  # NotInFixture is also a LookupError
        gw.get_storage(UNLISTED, 0, BlockRef(1019))
    eoa = Address(labels["fixtures"]["eip1967_regular"]["admin"]["admin"])
    assert gw.get_code(eoa, BlockRef(1019)) == b""


def test_missing_trace_names_the_file(gw):
    with pytest.raises(SourceUnavailable, match="5000.json"):
        gw.replay_block(BlockRef(5000))


def test_bad_manifest(tmp_path):
    with pytest.raises(SourceUnavailable):
        FixtureBackend(tmp_path)
    (tmp_path / "manifest.json").write_text('{"format": "other", "version": 1}')
    with pytest.raises(SourceUnavailable):
        FixtureBackend(tmp_path)


def test_validate(corpus_dir, tmp_path):
    assert validate(corpus_dir) == []
    copy = tmp_path / "c"
    shutil.copytree(corpus_dir, copy)
    (copy / "traces" / "1003.json").write_text("[{")
    (copy / "traces" / "1004.json").unlink()
    write_account(copy, UNLISTED, b"\x00")
    bad = copy / "accounts" / f"{UNLISTED.hex()}.json"
    bad.rename(copy / "accounts" / ("00" * 20 + ".json"))
    problems = validate(copy)
    assert any("1003.json" in p for p in problems)
    assert any("1004.json" in p for p in problems)
    assert any("does not match" in p for p in problems)


def test_data_source_validation():
    with pytest.raises(ValueError):
        DataSource("live")
    with pytest.raises(ValueError):
        DataSource.live("http://x", max_in_flight=0)
    with pytest.raises(ValueError):
        DataSource("carrier-pigeon")
    with pytest.raises(ValueError):
        BlockRef(-1)


def test_endpoint_from_env(monkeypatch):
    monkeypatch.delenv("PROXYSCOPE_RPC_URL", raising=False)
    monkeypatch.setenv("ETH_RPC_URL", "http://b")
    assert endpoint_from_env() == "http://b"
    monkeypatch.setenv("PROXYSCOPE_RPC_URL", "http://a")
    assert endpoint_from_env() == "http://a"


# --- cache ---------------------------------------------------------------------

class Counting:
    def __init__(self, inner):
        self.inner, self.calls = inner, 0

    def get_code(self, a, at):
        self.calls += 1
        return self.inner.get_code(a, at)

    def get_storage(self, a, s, at):
        self.calls += 1
        return self.inner.get_storage(a, s, at)

    def replay_block(self, at):
        self.calls += 1
        return self.inner.replay_block(at)


def test_cache_is_transparent_and_write_once(corpus_dir, labels, tmp_path):
    inner = Counting(FixtureBackend(corpus_dir))
    cached = CachedBackend(inner, tmp_path)
    proxy = Address(labels["fixtures"]["eip1967_regular"]["proxy"])
    at = BlockRef(1019)
    slot = 0x360894A13BA1A3210667C828492DB98DCA3E2076CC3735A920A3CA505D382BBC
    direct = FixtureBackend(corpus_dir)
    for _ in range(2):
        assert cached.get_code(proxy, at) == direct.get_code(proxy, at)
        assert cached.get_storage(proxy, slot, at) == direct.get_storage(proxy, slot, at)
        assert cached.replay_block(BlockRef(1001)) == direct.replay_block(BlockRef(1001))
    assert inner.calls == 3
    path = cached.path_for(cache_key("eth_getCode", str(proxy), None, at))
    assert path.parent.name == path.name[:2]
    before = path.stat().st_mtime_ns
    # A second cache over the same directory never touches the inner backend.
    fresh = Counting(FixtureBackend(corpus_dir))
    again = CachedBackend(fresh, tmp_path)
    assert again.get_code(proxy, at) == direct.get_code(proxy, at) and fresh.calls == 0
    again._store(path.name, b"different")
    assert path.stat().st_mtime_ns == before and path.read_bytes() == direct.get_code(proxy, at)
    assert not list(tmp_path.rglob(".tmp-*"))


def test_cache_concurrent_writers(corpus_dir, labels, tmp_path):
    cached = CachedBackend(FixtureBackend(corpus_dir), tmp_path)
    proxy = Address(labels["fixtures"]["eip1967_regular"]["proxy"])
    with ThreadPoolExecutor(8) as pool:
        got = set(pool.map(lambda _: cached.get_code(proxy, BlockRef(1)), range(32)))
    assert len(got) == 1
    assert len([p for p in tmp_path.rglob("*") if p.is_file()]) == 1


def test_cache_errors_are_gateway_errors(corpus_dir, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cached = CachedBackend(FixtureBackend(corpus_dir), blocker)
    with pytest.raises(SourceUnavailable):
        cached.replay_block(BlockRef(1000))


def test_open_source_with_cache(corpus_dir, tmp_path):
    gw = open_source(DataSource.fixture(corpus_dir, cache_path=tmp_path))
    assert isinstance(gw.backend, CachedBackend)


# --- JSON-RPC against a local stub ---------------------------------------------

class Stub:
    def __init__(self, *, fail_first=0, delay=0.0, trace_error=None):
        self.fail_first, self.delay, self.trace_error = fail_first, delay, trace_error
        self.lock = threading.Lock()
        self.requests = 0
        self.in_flight = 0
        self.peak = 0
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                req = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with stub.lock:
                    stub.requests += 1
                    n = stub.requests
                    stub.in_flight += 1
                    stub.peak = max(stub.peak, stub.in_flight)
                time.sleep(stub.delay)
                with stub.lock:
                    stub.in_flight -= 1
                if n <= stub.fail_first:
                    self.send_response(503)
                    self.end_headers()
                    return
                body = stub.answer(req)
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}"
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    def answer(self, req):
        method = req["method"]
        out = {"jsonrpc": "2.0", "id": req["id"]}
        if method == "eth_getCode":
            out["result"] = "0x6001"
        elif method == "eth_getStorageAt":
            out["result"] = "0x" + "00" * 31 + "2a"
        elif self.trace_error is not None:
            out["error"] = self.trace_error
        else:
            out["result"] = []
        return json.dumps(out).encode()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub():
    made = []

    def make(**kw):
        s = Stub(**kw)
        made.append(s)
        return s

    yield make
    for s in made:
        s.close()


def test_rpc_reads(stub):
    s = stub()
    rpc = RpcBackend(s.url, retry=FAST)
    assert rpc.get_code(UNLISTED, BlockRef(1)) == b"\x60\x01"
    assert rpc.get_storage(UNLISTED, 3, BlockRef(1)) == 42
    assert json.loads(rpc.replay_block(BlockRef(1)))["result"] == []


def test_rpc_retries_then_succeeds(stub):
    s = stub(fail_first=2)
    assert RpcBackend(s.url, retry=FAST).get_code(UNLISTED, BlockRef(1)) == b"\x60\x01"
    assert s.requests == 3


def test_rpc_gives_up(stub):
    s = stub(fail_first=10)
    with pytest.raises(SourceUnavailable, match="3 attempts"):
        RpcBackend(s.url, retry=FAST).get_code(UNLISTED, BlockRef(1))
    assert s.requests == 3


def test_rpc_trace_unsupported(stub):
    s = stub(trace_error={"code": -32601, "message": "the method does not exist"})
    with pytest.raises(TraceUnsupported, match="archive node"):
        RpcBackend(s.url, retry=FAST).replay_block(BlockRef(1))
    assert s.requests == 1


def test_rpc_unreachable():
    with pytest.raises(SourceUnavailable):
        RpcBackend("http://127.0.0.1:9", retry=FAST).get_code(UNLISTED, BlockRef(1))


def test_rpc_in_flight_bound(stub):
    s = stub(delay=0.05)
    rpc = RpcBackend(s.url, max_in_flight=3, retry=FAST)
    with ThreadPoolExecutor(12) as pool:
        list(pool.map(lambda i: rpc.get_storage(UNLISTED, i, BlockRef(1)), range(24)))
    assert s.requests == 24 and 1 <= s.peak <= 3
