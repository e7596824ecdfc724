from collections import defaultdict

import pytest

from ism.dsl import load_model

from .corpus import MODELS

_outcomes = defaultdict(list)
_titles = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _outcomes[number].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        ok = all(_outcomes[number])
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {_titles[number]}")


@pytest.fixture(scope="session")
def models_dir():
    return MODELS


@pytest.fixture(scope="session")
def bridge_model():
    return load_model(str(MODELS / "bridge.ism"))


@pytest.fixture(scope="session")
def bridge(bridge_model):
    return bridge_model.protocol("bridge")


@pytest.fixture(scope="session")
def tank():
    return load_model(str(MODELS / "tank.ism")).system("tank")
