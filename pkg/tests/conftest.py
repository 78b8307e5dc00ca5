from __future__ import annotations

import json
from pathlib import Path

import pytest

from proxyscope.gateway import DataSource, open_source

CORPUS = Path(__file__).resolve().parent.parent / "fixtures" / "chain"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def labels() -> dict:
    return json.loads((CORPUS / "labels.json").read_text())


@pytest.fixture
def gw():
    return open_source(DataSource.fixture(CORPUS))


def fixture_evidence(gw, entry):
    """(evidence, created-via-create2) for a labelled fixture, taken from its block trace."""
    from proxyscope.cli.pipeline import ordered_evidence
    from proxyscope.gateway import BlockRef

    evidence, create2 = ordered_evidence(gw.replay_block(BlockRef(entry["block"])), entry["block"])
    ev = next(e for e in evidence if str(e.proxy) == entry["proxy"])
    return ev, create2.get(ev.proxy)


# Each UUPS toggle: (uups_logic keyword overrides, implementation initialized?).
UUPS_TOGGLES = {
    "base": ({}, False),
    "initialized": ({}, True),
    "direct_call_guard": ({"direct_call_guard": True}, False),
    "no_delegatecall": ({"delegatecall": False}, False),
    "no_delegatecall+selfdestruct": ({"delegatecall": False, "selfdestruct": True}, False),
}


def toggle_world(name):
    """(logic address, logic code, storage reader, code lookup) for one UUPS toggle."""
    from proxyscope.corpus import uups_logic
    from proxyscope.evm import Address

    logic = Address("0x" + "10" * 20)
    kw, initialized = UUPS_TOGGLES[name]
    code = uups_logic(name, logic, **kw)
    storage = {0: 1, 0x33: 0xE0} if initialized else {}
    return logic, code, (lambda a, s: storage.get(s, 0) if a == logic else 0), (lambda a: code if a == logic else b"")


# One line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
