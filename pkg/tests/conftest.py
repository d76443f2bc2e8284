import numpy as np
import pytest

from sigmoidlife.ingestion import month_label

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    ok = rep.passed if rep.when == "call" else not rep.failed
    if rep.when == "call" or rep.failed:
        prev = _ACCEPTANCE.get(n, (title, True))
        _ACCEPTANCE[n] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")


def write_events(path, events):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("entity_id,timestamp\n")
        for e in events:
            fh.write(f"{e.entity_id},{month_label(e.month)}-15\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
