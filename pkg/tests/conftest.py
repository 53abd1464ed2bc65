from fractions import Fraction

import pytest

from ctxprob.lang import Model, PropertyInContext, StateId
from ctxprob.muprob import MuContextualStructure
from ctxprob.probspace import FiniteProbabilitySpace

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, tolerance): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title, tol = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria[num] = (title, tol, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, tol, ok = _criteria[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title} (tolerance: {tol})")


@pytest.fixture(scope="module")
def four_point():
    """Uniform 4-point model: ext(E@c)={1,2}, ext(S)={2,3}, ext(T)={4}."""
    xi = FiniteProbabilitySpace.uniform([1, 2, 3, 4])
    ext = {
        PropertyInContext("E", "c"): {1, 2},
        StateId("S"): {2, 3},
        StateId("T"): {4},
    }
    return MuContextualStructure(Model(xi.points, ext), xi)


@pytest.fixture(scope="module")
def toy_registry_structure():
    """Two procedures sharing property F over disjoint context sets."""
    xi = FiniteProbabilitySpace.uniform(["u1", "u2", "u3", "u4"])
    ext = {
        StateId("s0"): {"u1", "u2"},
        StateId("s1"): {"u3", "u4"},
        PropertyInContext("E", "c1"): {"u2"},
        PropertyInContext("E", "c2"): {"u2", "u4"},
        PropertyInContext("F", "c1"): {"u1"},
        PropertyInContext("F", "c2"): {"u1", "u2", "u3"},
        PropertyInContext("F", "d1"): {"u3"},
        PropertyInContext("F", "d2"): {"u1", "u2", "u4"},
        PropertyInContext("G", "d1"): {"u1", "u3", "u4"},
        PropertyInContext("G", "d2"): {"u4"},
    }
    from ctxprob.measurement import MeasurementProcedure, MeasurementRegistry

    reg = MeasurementRegistry([
        MeasurementProcedure("M1", ["E", "F"], FiniteProbabilitySpace(["c1", "c2"], [Fraction(1, 2)] * 2)),
        MeasurementProcedure("M2", ["F", "G"], FiniteProbabilitySpace(["d1", "d2"], ["1/4", "3/4"])),
    ])
    return MuContextualStructure(Model(xi.points, ext), xi), reg
