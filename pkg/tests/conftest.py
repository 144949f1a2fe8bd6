import pytest
from hypothesis import settings

from polyflow.corpus import certified_corpus

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    return certified_corpus()


ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    mod = report.nodeid.split("::")[0]
    if not mod.endswith("test_acceptance.py") or (report.when != "call" and not report.failed):
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_"):
        num = int(name.split("_")[2])
        ACCEPTANCE[num] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:2d}: {ACCEPTANCE[num]}")
