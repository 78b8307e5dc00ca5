from __future__ import annotations

from proxyscope.corpus import build_corpus, fixture_address


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in root.rglob("*") if p.is_file()}


def test_shipped_corpus_is_reproducible(corpus_dir, tmp_path):
    build_corpus(tmp_path / "chain")
    assert _files(tmp_path / "chain") == _files(corpus_dir)


def test_fixture_corpus_covers_required_shapes(labels):
    labelled = {entry["label"] for entry in labels["fixtures"].values()}
    assert len(labels["fixtures"]) >= 12
    assert {
        "forwarder:hardcoded", "forwarder:immutable-in-code", "forwarder:slot-never-assigned",
        "upgradeable:regular", "upgradeable:uups", "upgradeable:beacon",
    } <= labelled
    flags = {f for entry in labels["fixtures"].values() for f in entry["flags"]}
    assert "transparent-heuristic" in flags
    assert {"exploitable", "not-vulnerable"} <= {e.get("uups") for e in labels["fixtures"].values()}


def test_fixture_addresses_are_stable():
    assert fixture_address("a") == fixture_address("a") != fixture_address("b")
