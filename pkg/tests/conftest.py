from __future__ import annotations

import itertools

import numpy as np
import pytest

from npg_search.objectives import ObjectiveSpec, Orientation


def brute_front_indices(values, signs) -> set[int]:
    """All-pairs O(n^2) filter: indices of rows no other row dominates."""
    signed = [tuple(v * s for v, s in zip(row, signs)) for row in values]
    keep = set()
    for i, a in enumerate(signed):
        dominated = False
        for j, b in enumerate(signed):
            if i != j and all(x >= y for x, y in zip(b, a)) and any(x > y for x, y in zip(b, a)):
                dominated = True
                break
        if not dominated:
            keep.add(i)
    return keep


@pytest.fixture
def spec2() -> ObjectiveSpec:
    return ObjectiveSpec((Orientation.MAXIMIZE, Orientation.MINIMIZE), ("quality", "params"), ((0, 1), (0.1, 2.0)))


@pytest.fixture
def unit_spec2() -> ObjectiveSpec:
    return ObjectiveSpec((Orientation.MAXIMIZE, Orientation.MINIMIZE), ("quality", "params"), ((0, 1), (0, 1)))


def random_cloud(rng: np.random.Generator, n: int, m: int, grid: int | None = None) -> np.ndarray:
    """Random objective vectors; ``grid`` rounds them to force ties."""
    pts = rng.random((n, m))
    if grid:
        pts = np.round(pts * grid) / grid
    return pts


def encodings_for(n: int) -> list[tuple[int, ...]]:
    return [tuple(int(d) for d in np.base_repr(i, 4).zfill(8)) for i in range(n)]


def all_tuples(arities):
    return list(itertools.product(*(range(k) for k in arities)))


_acceptance: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        name = report.nodeid.split("::")[-1]
        _acceptance.append((name, "PASS" if report.passed else "FAIL", props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _acceptance:
        terminalreporter.write_line(f"{status} {name} {detail}".rstrip())
