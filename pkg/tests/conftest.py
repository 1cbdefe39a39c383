import pytest

from synthetic import random_dataset, random_model

_criterion_results = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call":
        _criterion_results.append((marker.args[0], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _criterion_results:
        tag = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"[{tag}] {name}")


@pytest.fixture(scope="session")
def small_model():
    return random_model()


@pytest.fixture(scope="session")
def small_dataset(small_model):
    return random_dataset(model=small_model)
