"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import random

import pytest

from fedirec.graph import GraphSnapshot, build_snapshot
from fedirec.users import UserRef

# test_acceptance.py records one "[PASS|FAIL] criterion: detail" line per
# acceptance criterion; the summary hook prints them after the run so
# output capture cannot hide them.
ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion_report(request):
    def _report(criterion: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        request.config.stash.setdefault(ACCEPTANCE_KEY, []).append(line)
        print(line)
        assert ok, f"{criterion}: {detail}"

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def u(name: str, instance: str = "fix.test") -> UserRef:
    """Shorthand UserRef constructor used throughout the tests."""
    return UserRef(name, instance)


def users(n: int, prefix: str = "u", instance: str = "fix.test") -> list[UserRef]:
    width = len(str(max(n - 1, 1)))
    return [UserRef(f"{prefix}{i:0{width}d}", instance) for i in range(n)]


def random_directed_graph(n: int, p: float, rng: random.Random,
                          instance: str = "fix.test") -> GraphSnapshot:
    """Erdos-Renyi-style directed snapshot with every node visited."""
    nodes = users(n, instance=instance)
    g = build_snapshot([], visited=nodes, nodes=nodes)
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                g.add_edge(nodes[i], nodes[j])
    return g


@pytest.fixture
def toy_graph() -> GraphSnapshot:
    """Five visited users with a mix of mutual and one-way follows."""
    a, b, c, d, e = users(5, prefix="n")
    return build_snapshot(
        [(a, b), (b, a), (a, c), (c, d), (d, c), (d, e), (e, a)],
        visited=[a, b, c, d, e],
    )
